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
//
// Evaluation: phone error rate and word accuracy, a template-matching
// Viterbi decoder that turns Mel-spectrograms back into phoneme sequences
// (standing in for an external ASR service), single-core benchmarking, and
// the data-distribution ablation table.

#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "its/corpus.hpp"
#include "its/models.hpp"

namespace its {

// Levenshtein distance with unit substitution/insertion/deletion costs.
int64_t edit_distance(const std::vector<int>& a, const std::vector<int>& b);

// edit_distance(ref, hyp) / len(ref). May exceed 1. Errors on empty ref.
double per(const std::vector<int>& ref, const std::vector<int>& hyp);

// Fraction of pairs with exact sequence equality. Errors on an empty list.
double word_accuracy(
    const std::vector<std::pair<std::vector<int>, std::vector<int>>>& pairs);

// Dynamic-programming alignment of Mel frames against the fixed phoneme
// templates: two sub-states per phoneme enforce a minimum duration of 2
// frames, adjacent segments must differ (corpus sequences never repeat a
// phoneme), and the emission cost is the squared distance to the template.
// Exact on oracle-synthesized Mels by construction.
std::vector<int> oracle_decode_mel(const Tensor& mel);

struct EvalReport {
  double per = 0.0;            // corpus-level: sum(edits) / sum(ref lengths)
  double word_accuracy = 0.0;
  std::map<int, double> per_by_length;   // keyed by reference phoneme count
  std::map<int, int64_t> edits_by_length, ref_by_length;  // the raw sums
  std::map<int, int> items_by_length;
  int n_items = 0;
  std::string config_hash;
};

// Synthesize every item of `split` with the deterministic prior-mean latent,
// decode with the oracle, and score against the manifest's phonemes.
EvalReport evaluate_e2e(const E2eModel& model, const LoadedCorpus& corpus,
                        const std::string& split);
// Same protocol through the two-stage pipeline; an image whose recognizer
// decode is empty scores as an empty hypothesis rather than aborting.
EvalReport evaluate_pipeline(const ImageEncoder& itt, const TtsBaseline& tts,
                             const LoadedCorpus& corpus, const std::string& split);
// Text-input protocol for the TTS baseline: synthesize from the reference
// phonemes (no recognizer in the loop) and score the decoded output.
EvalReport evaluate_tts(const TtsBaseline& tts, const LoadedCorpus& corpus,
                        const std::string& split);

nlohmann::json eval_report_to_json(const EvalReport& r);

struct BenchReport {
  double images_per_sec = 0.0;  // median over runs
  double rtf = 0.0;             // inference seconds / synthesized audio seconds
  int64_t param_count = 0;
  int n_images = 0;
  int runs = 0;
};

// Batch-1 timing over >= 50 images: one untimed warm-up pass, then the
// median of `runs` full passes. RTF uses T*hop/sample_rate audio seconds.
BenchReport bench_e2e(const E2eModel& model, int64_t param_count,
                      const LoadedCorpus& corpus, const std::vector<size_t>& indices,
                      int runs = 5);
// Pipeline timing follows the summation rule: per-image time is recognizer
// time plus synthesis time, measured around each stage.
BenchReport bench_pipeline(const ImageEncoder& itt, const TtsBaseline& tts,
                           int64_t param_count, const LoadedCorpus& corpus,
                           const std::vector<size_t>& indices, int runs = 5);

nlohmann::json bench_report_to_json(const BenchReport& r);

struct BenchPair {
  BenchReport e2e, pipeline;
};

// Head-to-head timing for the speed comparison. Each timed pass walks the
// image list once and runs both systems back to back per image, alternating
// which goes first, so both face the same machine conditions within
// microseconds of each other. Slow drift (frequency scaling, cache pressure)
// then cancels from the comparison of the two medians, which separate
// per-system passes cannot guarantee.
BenchPair bench_paired(const E2eModel& model, int64_t e2e_params,
                       const ImageEncoder& itt, const TtsBaseline& tts,
                       int64_t pipeline_params, const LoadedCorpus& corpus,
                       const std::vector<size_t>& indices, int runs = 5);

// One row of the ablation table: PER of `model` on words of `length`
// phonemes ("its", "its_few", "tts", "tts_few").
struct DistributionRow {
  int length = 0;
  std::string model;
  double per = 0.0;
};

std::vector<DistributionRow> distribution_table(
    const std::map<std::string, EvalReport>& reports);
void write_distribution_csv(const std::string& path,
                            const std::vector<DistributionRow>& rows);

struct DistributionExperiment {
  std::map<std::string, EvalReport> reports;  // "its", "its_few", "tts", "tts_few"
  std::vector<DistributionRow> rows;
};

// Four-model word-length comparison: both systems trained on the full corpus
// and on the few-short-words variant, all evaluated on the same split of the
// full corpus. The two corpora must cover identical word lists.
DistributionExperiment distribution_experiment(const E2eModel& its, const E2eModel& its_few,
                                               const TtsBaseline& tts, const TtsBaseline& tts_few,
                                               const LoadedCorpus& full, const LoadedCorpus& few,
                                               const std::string& split);

// Corpus-level PER over the reference-length bucket range [lo, hi].
double bucket_per(const EvalReport& r, int lo, int hi);

}  // namespace its
