/* Copyright 2026 The docmatch Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "docmatch/checkpoint.h"

#include <set>

#include "docmatch/config_io.h"
#include "docmatch/errors.h"

namespace docmatch {

Json history_to_json(const std::vector<EpochRecord>& history) {
  Json out = Json::array();
  for (const auto& r : history) {
    out.push_back({{"epoch", r.epoch},
                   {"steps", r.steps},
                   {"l_cross", r.l_cross},
                   {"l_intra", r.l_intra},
                   {"l_sub", r.l_sub},
                   {"total", r.total},
                   {"val_total", r.val_total},
                   {"lr", r.lr}});
  }
  return out;
}

namespace {

template <typename T>
T get(const Json& j, const char* key, const std::string& path) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(path + ": checkpoint lacks \"" + key + "\"");
  try {
    return it->template get<T>();
  } catch (const Json::exception& e) {
    throw ParseError(path + ": bad \"" + key + "\": " + e.what());
  }
}

}  // namespace

void save_checkpoint(const std::string& path, const ModelConfig& model,
                     const ObjectiveConfig& objective, const TrainConfig& train,
                     const TrainState& state) {
  Json j;
  j["format"] = kCheckpointFormat;
  j["config"] = {{"model", to_json(model)},
                 {"objective", to_json(objective)},
                 {"train", to_json(train)}};
  Json params = Json::object();
  for (const auto& [name, t] : state.params.named()) {
    params[name] = {{"shape", t.shape()},
                    {"data", std::vector<double>(t.data().begin(), t.data().end())}};
  }
  j["params"] = std::move(params);
  Json first = Json::object(), second = Json::object();
  for (const auto& [name, m] : state.adam.first_moment) first[name] = m;
  for (const auto& [name, v] : state.adam.second_moment) second[name] = v;
  j["optimizer"] = {{"step", state.adam.step},
                    {"beta1", train.beta1},
                    {"beta2", train.beta2},
                    {"eps", train.adam_eps},
                    {"first_moment", std::move(first)},
                    {"second_moment", std::move(second)}};
  j["schedule"] = {{"epoch", state.epoch},
                   {"decays", state.decays},
                   {"best_val", state.best_val},
                   {"has_best", state.has_best},
                   {"bad_epochs", state.bad_epochs},
                   {"initial_val_total", state.initial_val_total}};
  j["history"] = history_to_json(state.history);
  write_text_file(j.dump() + "\n", path);
}

Checkpoint load_checkpoint(const std::string& path) {
  const Json j = read_json_file(path);
  if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat) {
    throw ParseError(path + ": not a " + std::string(kCheckpointFormat) + " file");
  }
  Checkpoint ck;
  const auto config = get<Json>(j, "config", path);
  apply(ck.model, get<Json>(config, "model", path), "model");
  apply(ck.objective, get<Json>(config, "objective", path), "objective");
  apply(ck.train, get<Json>(config, "train", path), "train");

  // Build the parameter layout from the config, then overwrite every tensor.
  RngStream layout_rng(0);
  ck.state.params = init_params(ck.model, layout_rng);
  const auto params = get<Json>(j, "params", path);
  std::set<std::string> expected;
  for (auto& [name, t] : ck.state.params.named()) {
    expected.insert(name);
    auto it = params.find(name);
    if (it == params.end()) throw ValidationError(path + ": parameter \"" + name + "\" missing");
    const auto shape = get<Shape>(*it, "shape", path);
    const auto data = get<std::vector<double>>(*it, "data", path);
    if (shape != t.shape() || data.size() != t.numel()) {
      throw ValidationError(path + ": parameter \"" + name + "\" has shape " + shape_string(shape) +
                            ", model expects " + shape_string(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(data.begin(), data.end(), dst.begin());
  }
  for (const auto& [name, value] : params.items()) {
    if (!expected.count(name)) throw ValidationError(path + ": unknown parameter \"" + name + "\"");
  }

  const auto opt = get<Json>(j, "optimizer", path);
  ck.state.adam.step = get<std::size_t>(opt, "step", path);
  ck.state.adam.first_moment =
      get<std::map<std::string, std::vector<double>>>(opt, "first_moment", path);
  ck.state.adam.second_moment =
      get<std::map<std::string, std::vector<double>>>(opt, "second_moment", path);

  const auto sched = get<Json>(j, "schedule", path);
  ck.state.epoch = get<std::size_t>(sched, "epoch", path);
  ck.state.decays = get<std::size_t>(sched, "decays", path);
  ck.state.best_val = get<double>(sched, "best_val", path);
  ck.state.has_best = get<bool>(sched, "has_best", path);
  ck.state.bad_epochs = get<std::size_t>(sched, "bad_epochs", path);
  ck.state.initial_val_total = get<double>(sched, "initial_val_total", path);

  for (const auto& r : get<Json>(j, "history", path)) {
    EpochRecord rec;
    rec.epoch = get<std::size_t>(r, "epoch", path);
    rec.steps = get<std::size_t>(r, "steps", path);
    rec.l_cross = get<double>(r, "l_cross", path);
    rec.l_intra = get<double>(r, "l_intra", path);
    rec.l_sub = get<double>(r, "l_sub", path);
    rec.total = get<double>(r, "total", path);
    rec.val_total = get<double>(r, "val_total", path);
    rec.lr = get<double>(r, "lr", path);
    ck.state.history.push_back(rec);
  }
  return ck;
}

}  // namespace docmatch
