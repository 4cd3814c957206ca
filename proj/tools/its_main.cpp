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
// Single command-line entry point. Subcommands: gen-data, train-encoder,
// train-its, train-baseline, synth, eval, bench, ablate-distribution.
// Structured JSON-lines go to stdout; failures print one machine-parseable
// JSON reason line to stderr. Exit codes: 0 success, 1 usage error, 2 config
// error, 3 runtime failure.

#include <cstdint>
#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "its/audio.hpp"
#include "its/checkpoint.hpp"
#include "its/corpus.hpp"
#include "its/eval.hpp"
#include "its/jsonutil.hpp"
#include "its/parallel.hpp"
#include "its/serialize.hpp"
#include "its/train.hpp"

namespace {

using its::Error;

struct CliFailure {
  int code;
  std::string reason;
};

void emit(const nlohmann::json& j) { std::cout << j.dump() << "\n"; }

// Errors while reading/validating configs and checkpoints are config errors
// (exit 2); anything thrown after that is a runtime failure (exit 3).
template <typename Fn>
auto load_phase(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw CliFailure{2, e.what()};
  }
}

// A checkpoint together with the model assembled from its recorded shape.
struct LoadedE2e {
  explicit LoadedE2e(const std::string& dir)
      : meta(its::read_checkpoint_meta(dir)),
        store(meta.seed),
        model(store, its::model_config_from_meta(meta)) {
    its::check(meta.stage == "its", "checkpoint \"", dir, "\" has stage \"", meta.stage,
               "\", expected \"its\"");
    its::load_checkpoint_params(dir, store);
  }
  its::CheckpointMeta meta;
  its::ParamStore store;
  its::E2eModel model;
};

struct LoadedTts {
  explicit LoadedTts(const std::string& dir)
      : meta(its::read_checkpoint_meta(dir)),
        store(meta.seed),
        model(store, its::model_config_from_meta(meta)) {
    its::check(meta.stage == "tts_baseline", "checkpoint \"", dir, "\" has stage \"", meta.stage,
               "\", expected \"tts_baseline\"");
    its::load_checkpoint_params(dir, store);
  }
  its::CheckpointMeta meta;
  its::ParamStore store;
  its::TtsBaseline model;
};

struct LoadedEncoder {
  explicit LoadedEncoder(const std::string& dir)
      : meta(its::read_checkpoint_meta(dir)),
        store(meta.seed),
        model(store, "encoder", its::model_config_from_meta(meta).encoder) {
    its::check(meta.stage == "encoder", "checkpoint \"", dir, "\" has stage \"", meta.stage,
               "\", expected \"encoder\"");
    its::load_checkpoint_params(dir, store);
  }
  its::CheckpointMeta meta;
  its::ParamStore store;
  its::ImageEncoder model;
};

std::vector<size_t> all_indices(const its::LoadedCorpus& corpus) {
  std::vector<size_t> idx(corpus.items.size());
  std::iota(idx.begin(), idx.end(), size_t{0});
  return idx;
}

struct TrainCmd {
  CLI::App* cmd = nullptr;
  std::string expected_stage;
  std::string config, out, init;
  int64_t steps = -1;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  bool print = false;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image-to-speech workbench: corpus generation, training, synthesis, evaluation"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Echo resolved configs before running");

  // ---- gen-data ----
  std::string gen_config, gen_out;
  std::uint64_t gen_seed = 0;
  bool gen_print = false;
  CLI::App* gen = app.add_subcommand("gen-data", "Generate a rendered-word corpus with oracle Mels");
  gen->add_option("--config", gen_config, "Corpus config JSON file");
  CLI::Option* gen_seed_opt = gen->add_option("--seed", gen_seed, "Override the corpus seed");
  gen->add_option("--out", gen_out, "Override the output directory");
  gen->add_flag("--print-config", gen_print, "Print the fully-defaulted config and exit");

  // ---- train-encoder / train-its / train-baseline ----
  std::vector<TrainCmd> trains(3);
  const char* train_names[3] = {"train-encoder", "train-its", "train-baseline"};
  const char* train_stages[3] = {"encoder", "its", "tts_baseline"};
  const char* train_help[3] = {"Train the slot-classifier image encoder (stage 1)",
                               "Train duration + Mel generation on frozen features (stage 2)",
                               "Train the text-input TTS baseline"};
  for (int i = 0; i < 3; ++i) {
    TrainCmd& t = trains[static_cast<size_t>(i)];
    t.expected_stage = train_stages[i];
    t.cmd = app.add_subcommand(train_names[i], train_help[i]);
    t.cmd->add_option("--config", t.config, "Training config JSON file");
    t.cmd->add_option("--out", t.out, "Override the checkpoint output directory");
    t.cmd->add_option("--init", t.init, "Override the init checkpoint directory");
    t.cmd->add_option("--steps", t.steps, "Override the total step count");
    t.seed_opt = t.cmd->add_option("--seed", t.seed, "Override the training seed");
    t.cmd->add_flag("--print-config", t.print, "Print the fully-defaulted config and exit");
  }

  // ---- synth ----
  std::string sy_image, sy_ckpt, sy_out, sy_wav, sy_manifest;
  std::uint64_t sy_prior_seed = 0;
  bool sy_sample = false;
  CLI::App* synth = app.add_subcommand("synth", "Synthesize a Mel (and optional WAV) from an image");
  synth->add_option("--image", sy_image, "Input image tensor (TSR1)")->required();
  synth->add_option("--ckpt", sy_ckpt, "End-to-end model checkpoint directory")->required();
  synth->add_option("--out", sy_out, "Output Mel path (TSR1)")->required();
  synth->add_option("--wav", sy_wav, "Also reconstruct audio here (Griffin-Lim)");
  synth->add_option("--manifest", sy_manifest, "Corpus manifest supplying audio parameters");
  synth->add_flag("--sample", sy_sample, "Sample the latent prior instead of using its mean");
  synth->add_option("--prior-seed", sy_prior_seed, "Seed for --sample");

  // ---- eval ----
  std::string ev_manifest, ev_ckpt, ev_recognizer, ev_split = "test", ev_report;
  CLI::App* ev = app.add_subcommand("eval", "Score a model with the decode oracle");
  ev->add_option("--manifest", ev_manifest, "Corpus manifest.json")->required();
  ev->add_option("--ckpt", ev_ckpt, "Model checkpoint (stage its or tts_baseline)")->required();
  ev->add_option("--recognizer", ev_recognizer,
                 "Encoder checkpoint; with a tts_baseline --ckpt this scores the two-stage "
                 "pipeline instead of the text-input protocol");
  ev->add_option("--split", ev_split, "Corpus split to score (default test)");
  ev->add_option("--report", ev_report, "Write the JSON report here");

  // ---- bench ----
  std::string be_manifest, be_ckpt, be_recognizer, be_report;
  int be_runs = 5;
  CLI::App* be = app.add_subcommand("bench", "Measure batch-1 synthesis speed and RTF");
  be->add_option("--manifest", be_manifest, "Corpus manifest.json")->required();
  be->add_option("--ckpt", be_ckpt, "Model checkpoint (its, or tts_baseline with --recognizer)")
      ->required();
  be->add_option("--recognizer", be_recognizer, "Encoder checkpoint for the two-stage pipeline");
  be->add_option("--runs", be_runs, "Timed passes (median reported, min 5)");
  be->add_option("--report", be_report, "Write the JSON report here");

  // ---- ablate-distribution ----
  std::string ab_manifest, ab_few_manifest, ab_its, ab_its_few, ab_tts, ab_tts_few;
  std::string ab_split = "test", ab_csv, ab_report;
  CLI::App* ab = app.add_subcommand(
      "ablate-distribution", "Per-word-length PER for models trained with and without short-word "
                             "oversampling");
  ab->add_option("--manifest", ab_manifest, "Full corpus manifest.json")->required();
  ab->add_option("--few-manifest", ab_few_manifest, "No-short-boost corpus manifest.json")
      ->required();
  ab->add_option("--its", ab_its, "E2E checkpoint trained on the full corpus")->required();
  ab->add_option("--its-few", ab_its_few, "E2E checkpoint trained on the few corpus")->required();
  ab->add_option("--tts", ab_tts, "TTS baseline checkpoint trained on the full corpus")->required();
  ab->add_option("--tts-few", ab_tts_few, "TTS baseline checkpoint trained on the few corpus")
      ->required();
  ab->add_option("--split", ab_split, "Split of the full corpus to score (default test)");
  ab->add_option("--csv", ab_csv, "Write rows as CSV (length, model, per)")->required();
  ab->add_option("--report", ab_report, "Write the four full JSON reports here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    app.exit(e);
    return 1;
  }

  try {
    const int threads = its::thread_count();

    if (app.got_subcommand(gen)) {
      its::CorpusConfig cfg = load_phase([&] {
        its::CorpusConfig c;
        if (!gen_config.empty()) c = its::corpus_config_from_json(its::load_json_file(gen_config));
        if (gen_seed_opt->count() > 0) c.seed = gen_seed;
        if (!gen_out.empty()) c.out_dir = gen_out;
        its::check(gen_print || !gen_config.empty(), "gen-data: --config is required");
        return c;
      });
      if (gen_print) {
        std::cout << its::corpus_config_to_json(cfg).dump(2) << "\n";
        return 0;
      }
      if (verbose) emit({{"event", "config"}, {"config", its::corpus_config_to_json(cfg)}});
      const its::CorpusManifest m = its::build_corpus(cfg);
      emit({{"event", "corpus"},
            {"out", cfg.out_dir},
            {"entries", m.entries.size()},
            {"config_hash", m.config_hash},
            {"threads", threads}});
      return 0;
    }

    for (const TrainCmd& t : trains) {
      if (!app.got_subcommand(t.cmd)) continue;
      its::TrainConfig cfg = load_phase([&] {
        its::TrainConfig c;
        c.stage = t.expected_stage;
        if (!t.config.empty()) {
          c = its::train_config_from_json(its::load_json_file(t.config));
          its::check(c.stage == t.expected_stage, "config stage \"", c.stage,
                     "\" does not match subcommand stage \"", t.expected_stage, "\"");
        }
        if (!t.out.empty()) c.out_dir = t.out;
        if (!t.init.empty()) c.init = t.init;
        if (t.steps >= 0) c.steps = t.steps;
        if (t.seed_opt->count() > 0) c.seed = t.seed;
        its::check(t.print || !t.config.empty(), t.cmd->get_name(), ": --config is required");
        return c;
      });
      if (t.print) {
        std::cout << its::train_config_to_json(cfg).dump(2) << "\n";
        return 0;
      }
      if (verbose) emit({{"event", "config"}, {"config", its::train_config_to_json(cfg)}});
      const its::TrainResult res = its::run_training(cfg);
      emit({{"event", "train"},
            {"stage", cfg.stage},
            {"steps", res.steps},
            {"final_loss", res.final_loss},
            {"metrics", res.metrics},
            {"out", cfg.out_dir},
            {"threads", threads}});
      return 0;
    }

    if (app.got_subcommand(synth)) {
      struct Ready {
        std::unique_ptr<LoadedE2e> e2e;
        its::Tensor image;
        its::AudioConfig audio;
      };
      Ready ready = load_phase([&] {
        Ready r;
        r.e2e = std::make_unique<LoadedE2e>(sy_ckpt);
        r.image = its::read_tsr1_file(sy_image);
        r.audio.n_mels = r.e2e->meta.n_mels;
        if (!sy_manifest.empty()) r.audio = its::load_manifest(sy_manifest).audio;
        its::check(r.audio.n_mels == r.e2e->meta.n_mels, "synth: manifest has ", r.audio.n_mels,
                   " Mel bands but the checkpoint was trained with ", r.e2e->meta.n_mels);
        return r;
      });
      const its::SynthesisResult out =
          ready.e2e->model.synthesize(ready.image, sy_prior_seed, sy_sample);
      its::write_tsr1_file(sy_out, out.mel, its::Precision::f64);
      if (!sy_wav.empty()) {
        const std::vector<double> samples = its::griffin_lim(out.mel, ready.audio, 60);
        its::write_wav(sy_wav, samples, ready.audio.sample_rate);
      }
      // Diagnostic text readout from the recognition head; not part of the
      // synthesis path.
      its::NoGradGuard ng;
      const its::ImageEncoder& enc = ready.e2e->model.encoder();
      const std::vector<int> readout =
          its::decode_slots(enc.classify(enc.encode(ready.image)));
      emit({{"event", "synth"},
            {"mel", sy_out},
            {"wav", sy_wav},
            {"frames", out.mel.dim(1)},
            {"durations", out.durations},
            {"phonemes", readout},
            {"threads", threads}});
      return 0;
    }

    if (app.got_subcommand(ev)) {
      struct Ready {
        its::LoadedCorpus corpus;
        std::unique_ptr<LoadedE2e> e2e;
        std::unique_ptr<LoadedTts> tts;
        std::unique_ptr<LoadedEncoder> recognizer;
      };
      Ready ready = load_phase([&] {
        Ready r;
        r.corpus = its::load_corpus(ev_manifest);
        const its::CheckpointMeta meta = its::read_checkpoint_meta(ev_ckpt);
        if (meta.stage == "its") {
          r.e2e = std::make_unique<LoadedE2e>(ev_ckpt);
        } else {
          its::check(meta.stage == "tts_baseline", "eval: cannot evaluate a \"", meta.stage,
                     "\" checkpoint; pass an encoder via --recognizer instead");
          r.tts = std::make_unique<LoadedTts>(ev_ckpt);
        }
        if (!ev_recognizer.empty()) {
          its::check(r.tts != nullptr, "eval: --recognizer only applies to a tts_baseline --ckpt");
          r.recognizer = std::make_unique<LoadedEncoder>(ev_recognizer);
        }
        return r;
      });
      its::EvalReport rep;
      std::string protocol;
      if (ready.e2e) {
        rep = its::evaluate_e2e(ready.e2e->model, ready.corpus, ev_split);
        protocol = "e2e";
      } else if (ready.recognizer) {
        rep = its::evaluate_pipeline(ready.recognizer->model, ready.tts->model, ready.corpus,
                                     ev_split);
        protocol = "pipeline";
      } else {
        rep = its::evaluate_tts(ready.tts->model, ready.corpus, ev_split);
        protocol = "tts";
      }
      nlohmann::json j = its::eval_report_to_json(rep);
      j["event"] = "eval";
      j["protocol"] = protocol;
      j["split"] = ev_split;
      j["ckpt"] = ev_ckpt;
      j["threads"] = threads;
      emit(j);
      if (!ev_report.empty()) its::save_json_file(ev_report, j);
      return 0;
    }

    if (app.got_subcommand(be)) {
      struct Ready {
        its::LoadedCorpus corpus;
        std::unique_ptr<LoadedE2e> e2e;
        std::unique_ptr<LoadedTts> tts;
        std::unique_ptr<LoadedEncoder> recognizer;
      };
      Ready ready = load_phase([&] {
        Ready r;
        r.corpus = its::load_corpus(be_manifest);
        const its::CheckpointMeta meta = its::read_checkpoint_meta(be_ckpt);
        if (meta.stage == "its") {
          r.e2e = std::make_unique<LoadedE2e>(be_ckpt);
        } else {
          its::check(meta.stage == "tts_baseline" && !be_recognizer.empty(),
                     "bench: --ckpt must be an \"its\" checkpoint, or a \"tts_baseline\" "
                     "checkpoint with --recognizer");
          r.tts = std::make_unique<LoadedTts>(be_ckpt);
          r.recognizer = std::make_unique<LoadedEncoder>(be_recognizer);
        }
        return r;
      });
      const std::vector<size_t> idx = all_indices(ready.corpus);
      its::BenchReport rep;
      std::string system;
      if (ready.e2e) {
        rep = its::bench_e2e(ready.e2e->model, ready.e2e->store.total_elements(), ready.corpus,
                             idx, be_runs);
        system = "e2e";
      } else {
        const int64_t params =
            ready.recognizer->store.total_elements() + ready.tts->store.total_elements();
        rep = its::bench_pipeline(ready.recognizer->model, ready.tts->model, params, ready.corpus,
                                  idx, be_runs);
        system = "pipeline";
      }
      nlohmann::json j = its::bench_report_to_json(rep);
      j["event"] = "bench";
      j["system"] = system;
      j["threads"] = threads;
      emit(j);
      if (!be_report.empty()) its::save_json_file(be_report, j);
      return 0;
    }

    if (app.got_subcommand(ab)) {
      struct Ready {
        its::LoadedCorpus full, few;
        std::unique_ptr<LoadedE2e> its_full, its_few;
        std::unique_ptr<LoadedTts> tts_full, tts_few;
      };
      Ready ready = load_phase([&] {
        Ready r;
        r.full = its::load_corpus(ab_manifest);
        r.few = its::load_corpus(ab_few_manifest);
        r.its_full = std::make_unique<LoadedE2e>(ab_its);
        r.its_few = std::make_unique<LoadedE2e>(ab_its_few);
        r.tts_full = std::make_unique<LoadedTts>(ab_tts);
        r.tts_few = std::make_unique<LoadedTts>(ab_tts_few);
        return r;
      });
      const its::DistributionExperiment ex = its::distribution_experiment(
          ready.its_full->model, ready.its_few->model, ready.tts_full->model,
          ready.tts_few->model, ready.full, ready.few, ab_split);
      its::write_distribution_csv(ab_csv, ex.rows);
      nlohmann::json reports = nlohmann::json::object();
      for (const auto& [name, rep] : ex.reports) reports[name] = its::eval_report_to_json(rep);
      emit({{"event", "ablation"},
            {"csv", ab_csv},
            {"rows", ex.rows.size()},
            {"split", ab_split},
            {"threads", threads}});
      if (!ab_report.empty())
        its::save_json_file(ab_report, nlohmann::json{{"split", ab_split}, {"threads", threads},
                                                      {"reports", reports}});
      return 0;
    }

    throw CliFailure{1, "no subcommand"};
  } catch (const CliFailure& f) {
    std::cerr << nlohmann::json{{"event", "error"}, {"code", f.code}, {"reason", f.reason}}.dump()
              << "\n";
    return f.code;
  } catch (const Error& e) {
    std::cerr << nlohmann::json{{"event", "error"}, {"code", 3}, {"reason", e.what()}}.dump()
              << "\n";
    return 3;
  }
}
