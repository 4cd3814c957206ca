// Copyright 2026 The ITS Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "its/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "its/mel_oracle.hpp"

namespace its {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

}  // namespace

int64_t edit_distance(const std::vector<int>& a, const std::vector<int>& b) {
  const size_t n = a.size(), m = b.size();
  std::vector<int64_t> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int64_t>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int64_t>(i);
    for (size_t j = 1; j <= m; ++j) {
      int64_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

double per(const std::vector<int>& ref, const std::vector<int>& hyp) {
  check(!ref.empty(), "per: empty reference");
  return static_cast<double>(edit_distance(ref, hyp)) /
         static_cast<double>(ref.size());
}

double word_accuracy(
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs) {
  check(!pairs.empty(), "word_accuracy: empty list");
  int exact = 0;
  for (const auto& [ref, hyp] : pairs)
    if (ref == hyp) ++exact;
  return static_cast<double>(exact) / static_cast<double>(pairs.size());
}

std::vector<int> oracle_decode_mel(const Tensor& mel) {
  check(mel.rank() == 2, "oracle_decode: mel shape ", shape_str(mel.shape()));
  const int F = static_cast<int>(mel.dim(0));
  const int64_t T = mel.dim(1);
  check(T >= 1, "oracle_decode: empty mel");
  std::vector<std::vector<double>> tmpl(kNumPhonemes);
  for (int p = 0; p < kNumPhonemes; ++p) tmpl[static_cast<size_t>(p)] = phoneme_template(p + 1, F);

  const auto& md = mel.data();
  auto emission = [&](int64_t t, int p) {
    double c = 0.0;
    for (int f = 0; f < F; ++f) {
      double d = md[static_cast<size_t>(f * T + t)] - tmpl[static_cast<size_t>(p)][static_cast<size_t>(f)];
      c += d * d;
    }
    return c;
  };

  if (T == 1) {  // degenerate single frame: best single template
    int best = 0;
    double bc = emission(0, 0);
    for (int p = 1; p < kNumPhonemes; ++p) {
      double c = emission(0, p);
      if (c < bc) bc = c, best = p;
    }
    return {best + 1};
  }

  // States (p, s): s=0 is a segment's first frame, s=1 its continuation, so
  // every segment spans at least 2 frames. Segment starts chain from a
  // different phoneme's continuation state.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int P = kNumPhonemes;
  std::vector<double> c0(static_cast<size_t>(P)), c1(static_cast<size_t>(P), kInf);
  // from[t][p*2+s]: predecessor phoneme for (p,0), or -1/-2 marking
  // continue-from-(p,0)/(p,1) for s=1.
  std::vector<std::vector<int>> from(static_cast<size_t>(T),
                                     std::vector<int>(static_cast<size_t>(2 * P), -3));
  for (int p = 0; p < P; ++p) c0[static_cast<size_t>(p)] = emission(0, p);

  for (int64_t t = 1; t < T; ++t) {
    // Best and runner-up continuation states, for the q != p minimum.
    int b1 = -1, b2 = -1;
    for (int q = 0; q < P; ++q) {
      if (c1[static_cast<size_t>(q)] == kInf) continue;
      if (b1 < 0 || c1[static_cast<size_t>(q)] < c1[static_cast<size_t>(b1)]) {
        b2 = b1;
        b1 = q;
      } else if (b2 < 0 || c1[static_cast<size_t>(q)] < c1[static_cast<size_t>(b2)]) {
        b2 = q;
      }
    }
    std::vector<double> n0(static_cast<size_t>(P), kInf), n1(static_cast<size_t>(P), kInf);
    for (int p = 0; p < P; ++p) {
      double em = emission(t, p);
      int pred = (b1 >= 0 && b1 != p) ? b1 : b2;
      if (pred >= 0) {
        n0[static_cast<size_t>(p)] = c1[static_cast<size_t>(pred)] + em;
        from[static_cast<size_t>(t)][static_cast<size_t>(2 * p)] = pred;
      }
      double stay0 = c0[static_cast<size_t>(p)], stay1 = c1[static_cast<size_t>(p)];
      if (stay0 < kInf || stay1 < kInf) {
        n1[static_cast<size_t>(p)] = std::min(stay0, stay1) + em;
        from[static_cast<size_t>(t)][static_cast<size_t>(2 * p + 1)] = stay0 <= stay1 ? -1 : -2;
      }
    }
    c0.swap(n0);
    c1.swap(n1);
  }

  // Paths must end in a continuation state (final segment >= 2 frames).
  int best = 0;
  for (int p = 1; p < P; ++p)
    if (c1[static_cast<size_t>(p)] < c1[static_cast<size_t>(best)]) best = p;
  check(c1[static_cast<size_t>(best)] < kInf, "oracle_decode: no valid path for ", T,
        " frames");

  std::vector<int> rev;
  int p = best, s = 1;
  for (int64_t t = T - 1; t >= 1; --t) {
    int f = from[static_cast<size_t>(t)][static_cast<size_t>(2 * p + s)];
    if (s == 1) {
      s = (f == -1) ? 0 : 1;
    } else {
      rev.push_back(p + 1);  // segment start: record and jump to predecessor
      p = f;
      s = 1;
    }
  }
  rev.push_back(p + 1);
  return std::vector<int>(rev.rbegin(), rev.rend());
}

namespace {

// Shared scoring over (ref, hyp) pairs grouped by reference length.
EvalReport score_pairs(
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs,
    const std::string& config_hash) {
  EvalReport r;
  r.config_hash = config_hash;
  r.n_items = static_cast<int>(pairs.size());
  int64_t edits = 0, refs = 0;
  for (const auto& [ref, hyp] : pairs) {
    int64_t e = edit_distance(ref, hyp);
    int len = static_cast<int>(ref.size());
    edits += e;
    refs += len;
    r.edits_by_length[len] += e;
    r.ref_by_length[len] += len;
    r.items_by_length[len] += 1;
  }
  check(refs > 0, "evaluate: no reference phonemes");
  r.per = static_cast<double>(edits) / static_cast<double>(refs);
  r.word_accuracy = word_accuracy(pairs);
  for (const auto& [len, e] : r.edits_by_length)
    r.per_by_length[len] =
        static_cast<double>(e) / static_cast<double>(r.ref_by_length.at(len));
  return r;
}

}  // namespace

EvalReport evaluate_e2e(const E2eModel& model, const LoadedCorpus& corpus,
                        const std::string& split) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  for (size_t i : corpus.split_indices(split)) {
    SynthesisResult s = model.synthesize(corpus.items[i].image);
    pairs.emplace_back(corpus.manifest.entries[i].phonemes, oracle_decode_mel(s.mel));
  }
  check(!pairs.empty(), "evaluate: split \"", split, "\" is empty");
  return score_pairs(pairs, corpus.manifest.config_hash);
}

EvalReport evaluate_pipeline(const ImageEncoder& itt, const TtsBaseline& tts,
                             const LoadedCorpus& corpus, const std::string& split) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  for (size_t i : corpus.split_indices(split)) {
    std::vector<int> hyp;
    try {
      SynthesisResult s = synthesize_non_e2e(itt, tts, corpus.items[i].image);
      hyp = oracle_decode_mel(s.mel);
    } catch (const Error&) {
      // Empty recognizer decode: score the word as fully missed.
    }
    pairs.emplace_back(corpus.manifest.entries[i].phonemes, std::move(hyp));
  }
  check(!pairs.empty(), "evaluate: split \"", split, "\" is empty");
  return score_pairs(pairs, corpus.manifest.config_hash);
}

EvalReport evaluate_tts(const TtsBaseline& tts, const LoadedCorpus& corpus,
                        const std::string& split) {
  std::vector<std::pair<std::vector<int>, std::vector<int>>> pairs;
  for (size_t i : corpus.split_indices(split)) {
    SynthesisResult s = tts.synthesize(corpus.items[i].slotseq);
    pairs.emplace_back(corpus.manifest.entries[i].phonemes, oracle_decode_mel(s.mel));
  }
  check(!pairs.empty(), "evaluate: split \"", split, "\" is empty");
  return score_pairs(pairs, corpus.manifest.config_hash);
}

nlohmann::json eval_report_to_json(const EvalReport& r) {
  nlohmann::json by_len = nlohmann::json::object();
  nlohmann::json items = nlohmann::json::object();
  for (const auto& [len, p] : r.per_by_length) {
    by_len[cat(len)] = p;
    items[cat(len)] = r.items_by_length.at(len);
  }
  return nlohmann::json{{"per", r.per},
                        {"word_accuracy", r.word_accuracy},
                        {"per_by_length", by_len},
                        {"items_by_length", items},
                        {"n_items", r.n_items},
                        {"config_hash", r.config_hash}};
}

namespace {

struct Timing {
  double images_per_sec = 0.0;
  double rtf = 0.0;
};

// One full batch-1 pass; returns aggregate timing for this run.
template <typename SynthFn>
Timing timed_pass(const LoadedCorpus& corpus, const std::vector<size_t>& indices,
                  SynthFn&& synth) {
  double total_s = 0.0, audio_s = 0.0;
  const AudioConfig& a = corpus.manifest.audio;
  for (size_t i : indices) {
    auto t0 = Clock::now();
    int64_t frames = synth(i);
    total_s += seconds_since(t0);
    audio_s += static_cast<double>(frames * a.hop) / a.sample_rate;
  }
  return {static_cast<double>(indices.size()) / total_s, total_s / audio_s};
}

template <typename SynthFn>
BenchReport bench_common(int64_t param_count, const LoadedCorpus& corpus,
                         const std::vector<size_t>& indices, int runs,
                         SynthFn&& synth) {
  check(indices.size() >= 50, "bench: need at least 50 images, got ", indices.size());
  check(runs >= 5, "bench: need at least 5 timed runs, got ", runs);
  timed_pass(corpus, indices, synth);  // warm-up, excluded
  std::vector<double> ips, rtf;
  for (int r = 0; r < runs; ++r) {
    Timing t = timed_pass(corpus, indices, synth);
    ips.push_back(t.images_per_sec);
    rtf.push_back(t.rtf);
  }
  std::sort(ips.begin(), ips.end());
  std::sort(rtf.begin(), rtf.end());
  BenchReport rep;
  rep.images_per_sec = ips[ips.size() / 2];
  rep.rtf = rtf[rtf.size() / 2];
  rep.param_count = param_count;
  rep.n_images = static_cast<int>(indices.size());
  rep.runs = runs;
  return rep;
}

// One interleaved pass over the images for the paired bench: per image, time
// system A and system B back to back, alternating which runs first.
template <typename FnA, typename FnB>
std::pair<Timing, Timing> paired_pass(const LoadedCorpus& corpus,
                                      const std::vector<size_t>& indices,
                                      FnA&& synth_a, FnB&& synth_b) {
  double total_a = 0.0, total_b = 0.0, audio_a = 0.0, audio_b = 0.0;
  const AudioConfig& cfg = corpus.manifest.audio;
  auto timed = [&](auto& synth, size_t i, double& total, double& audio) {
    auto t0 = Clock::now();
    int64_t frames = synth(i);
    total += seconds_since(t0);
    audio += static_cast<double>(frames * cfg.hop) / cfg.sample_rate;
  };
  bool a_first = true;
  for (size_t i : indices) {
    if (a_first) {
      timed(synth_a, i, total_a, audio_a);
      timed(synth_b, i, total_b, audio_b);
    } else {
      timed(synth_b, i, total_b, audio_b);
      timed(synth_a, i, total_a, audio_a);
    }
    a_first = !a_first;
  }
  const double n = static_cast<double>(indices.size());
  return {{n / total_a, total_a / audio_a}, {n / total_b, total_b / audio_b}};
}

}  // namespace

BenchReport bench_e2e(const E2eModel& model, int64_t param_count,
                      const LoadedCorpus& corpus, const std::vector<size_t>& indices,
                      int runs) {
  return bench_common(param_count, corpus, indices, runs, [&](size_t i) {
    return model.synthesize(corpus.items[i].image).mel.dim(1);
  });
}

BenchReport bench_pipeline(const ImageEncoder& itt, const TtsBaseline& tts,
                           int64_t param_count, const LoadedCorpus& corpus,
                           const std::vector<size_t>& indices, int runs) {
  // The recognizer and synthesizer run back to back inside the timed region,
  // which realizes the time(ITT) + time(TTS) summation rule.
  return bench_common(param_count, corpus, indices, runs, [&](size_t i) {
    return synthesize_non_e2e(itt, tts, corpus.items[i].image).mel.dim(1);
  });
}

BenchPair bench_paired(const E2eModel& model, int64_t e2e_params,
                       const ImageEncoder& itt, const TtsBaseline& tts,
                       int64_t pipeline_params, const LoadedCorpus& corpus,
                       const std::vector<size_t>& indices, int runs) {
  check(indices.size() >= 50, "bench: need at least 50 images, got ", indices.size());
  check(runs >= 5, "bench: need at least 5 timed runs, got ", runs);
  auto synth_e2e = [&](size_t i) {
    return model.synthesize(corpus.items[i].image).mel.dim(1);
  };
  auto synth_pipe = [&](size_t i) {
    return synthesize_non_e2e(itt, tts, corpus.items[i].image).mel.dim(1);
  };
  paired_pass(corpus, indices, synth_e2e, synth_pipe);  // warm-up, excluded
  std::vector<double> ips_e, rtf_e, ips_p, rtf_p;
  for (int r = 0; r < runs; ++r) {
    auto [te, tp] = paired_pass(corpus, indices, synth_e2e, synth_pipe);
    ips_e.push_back(te.images_per_sec);
    rtf_e.push_back(te.rtf);
    ips_p.push_back(tp.images_per_sec);
    rtf_p.push_back(tp.rtf);
  }
  auto median = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    return v[v.size() / 2];
  };
  BenchPair pair;
  pair.e2e = {median(ips_e), median(rtf_e), e2e_params,
              static_cast<int>(indices.size()), runs};
  pair.pipeline = {median(ips_p), median(rtf_p), pipeline_params,
                   static_cast<int>(indices.size()), runs};
  return pair;
}

nlohmann::json bench_report_to_json(const BenchReport& r) {
  return nlohmann::json{{"images_per_sec", r.images_per_sec},
                        {"rtf", r.rtf},
                        {"param_count", r.param_count},
                        {"n_images", r.n_images},
                        {"runs", r.runs}};
}

std::vector<DistributionRow> distribution_table(
    const std::map<std::string, EvalReport>& reports) {
  std::vector<DistributionRow> rows;
  for (const auto& [model, rep] : reports)
    for (const auto& [len, p] : rep.per_by_length)
      rows.push_back({len, model, p});
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.length != b.length ? a.length < b.length : a.model < b.model;
  });
  return rows;
}

void write_distribution_csv(const std::string& path,
                            const std::vector<DistributionRow>& rows) {
  std::ofstream out(path);
  check(out.good(), "cannot write \"", path, "\"");
  out << "length,model,per\n";
  for (const auto& r : rows) out << r.length << "," << r.model << "," << r.per << "\n";
  check(out.good(), "write failed for \"", path, "\"");
}

DistributionExperiment distribution_experiment(const E2eModel& its, const E2eModel& its_few,
                                               const TtsBaseline& tts, const TtsBaseline& tts_few,
                                               const LoadedCorpus& full, const LoadedCorpus& few,
                                               const std::string& split) {
  std::set<std::string> full_words, few_words;
  for (const CorpusEntry& e : full.manifest.entries) full_words.insert(e.word);
  for (const CorpusEntry& e : few.manifest.entries) few_words.insert(e.word);
  check(full_words == few_words, "distribution_experiment: corpora cover different word lists");

  DistributionExperiment ex;
  ex.reports["its"] = evaluate_e2e(its, full, split);
  ex.reports["its_few"] = evaluate_e2e(its_few, full, split);
  ex.reports["tts"] = evaluate_tts(tts, full, split);
  ex.reports["tts_few"] = evaluate_tts(tts_few, full, split);
  ex.rows = distribution_table(ex.reports);
  return ex;
}

double bucket_per(const EvalReport& r, int lo, int hi) {
  int64_t edits = 0, refs = 0;
  for (const auto& [len, e] : r.edits_by_length) {
    if (len < lo || len > hi) continue;
    edits += e;
    refs += r.ref_by_length.at(len);
  }
  check(refs > 0, "bucket_per: no items with length in [", lo, ",", hi, "]");
  return static_cast<double>(edits) / static_cast<double>(refs);
}

}  // namespace its
