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

#include "its/checkpoint.hpp"

#include <algorithm>
#include <filesystem>

#include "its/common.hpp"
#include "its/jsonutil.hpp"
#include "its/serialize.hpp"

namespace its {
namespace {

std::string params_path(const std::string& dir) { return dir + "/params.tsr1c"; }
std::string optimizer_path(const std::string& dir) { return dir + "/optimizer.tsr1c"; }
std::string meta_path(const std::string& dir) { return dir + "/meta.json"; }

void sort_records(std::vector<NamedTensor>& records) {
  std::sort(records.begin(), records.end(),
            [](const NamedTensor& a, const NamedTensor& b) { return a.name < b.name; });
}

}  // namespace

void save_checkpoint(const std::string& dir, const ParamStore& store, const Adam* opt,
                     const CheckpointMeta& meta) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  check(!ec, "checkpoint: cannot create directory \"", dir, "\": ", ec.message());

  std::vector<NamedTensor> params;
  params.reserve(store.params().size());
  for (const Parameter& p : store.params()) params.push_back({p.name, p.tensor.detach()});
  sort_records(params);
  write_tsr1c_file(params_path(dir), params, meta.precision);

  if (opt != nullptr) {
    std::vector<NamedTensor> slots;
    slots.reserve(opt->state().size() * 2);
    for (const auto& [name, slot] : opt->state()) {
      const int64_t n = static_cast<int64_t>(slot.m.size());
      slots.push_back({name + "#m", Tensor::from_data({n}, slot.m)});
      slots.push_back({name + "#v", Tensor::from_data({n}, slot.v)});
    }
    sort_records(slots);
    write_tsr1c_file(optimizer_path(dir), slots, meta.precision);
  }

  nlohmann::json j;
  j["stage"] = meta.stage;
  j["step"] = meta.step;
  j["config_hash"] = meta.config_hash;
  j["seed"] = meta.seed;
  j["frozen"] = meta.frozen;
  j["threads"] = meta.threads;
  j["precision"] = precision_to_string(meta.precision);
  j["adam_t"] = meta.adam_t;
  j["image_h"] = meta.image_h;
  j["image_w"] = meta.image_w;
  j["slots"] = meta.slots;
  j["n_mels"] = meta.n_mels;
  save_json_file(meta_path(dir), j);
}

CheckpointMeta read_checkpoint_meta(const std::string& dir) {
  const nlohmann::json j = load_json_file(meta_path(dir));
  check_allowed_keys(j,
                     {"stage", "step", "config_hash", "seed", "frozen", "threads", "precision",
                      "adam_t", "image_h", "image_w", "slots", "n_mels"},
                     "checkpoint meta");
  CheckpointMeta meta;
  meta.stage = j.at("stage").get<std::string>();
  meta.step = j.at("step").get<int64_t>();
  meta.config_hash = j.at("config_hash").get<std::string>();
  meta.seed = j.at("seed").get<uint64_t>();
  meta.frozen = j.at("frozen").get<std::vector<std::string>>();
  meta.threads = j.at("threads").get<int>();
  meta.precision = precision_from_string(j.at("precision").get<std::string>());
  meta.adam_t = j.at("adam_t").get<int64_t>();
  meta.image_h = j.at("image_h").get<int>();
  meta.image_w = j.at("image_w").get<int>();
  meta.slots = j.at("slots").get<int>();
  meta.n_mels = j.at("n_mels").get<int>();
  return meta;
}

void load_checkpoint_params(const std::string& dir, ParamStore& store) {
  const std::vector<NamedTensor> records = read_tsr1c_file(params_path(dir));
  for (const NamedTensor& r : records) {
    check(store.has(r.name), "checkpoint: \"", dir, "\" has no matching parameter for record \"",
          r.name, "\"");
    Parameter& p = store.param(r.name);
    check(p.tensor.shape() == r.tensor.shape(), "checkpoint: shape mismatch for \"", r.name, "\"");
    p.tensor.mutable_data() = r.tensor.data();
  }
}

void load_checkpoint_optimizer(const std::string& dir, Adam& opt) {
  const CheckpointMeta meta = read_checkpoint_meta(dir);
  const std::vector<NamedTensor> records = read_tsr1c_file(optimizer_path(dir));
  std::map<std::string, Adam::Slot> state;
  for (const NamedTensor& r : records) {
    const size_t hash = r.name.rfind('#');
    check(hash != std::string::npos && hash + 2 == r.name.size() &&
              (r.name[hash + 1] == 'm' || r.name[hash + 1] == 'v'),
          "checkpoint: bad optimizer record name \"", r.name, "\"");
    Adam::Slot& slot = state[r.name.substr(0, hash)];
    (r.name[hash + 1] == 'm' ? slot.m : slot.v) = r.tensor.data();
  }
  for (const auto& [name, slot] : state)
    check(slot.m.size() == slot.v.size() && !slot.m.empty(),
          "checkpoint: incomplete optimizer state for \"", name, "\"");
  opt.load_state(meta.adam_t, std::move(state));
}

}  // namespace its
