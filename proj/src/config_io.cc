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

#include "docmatch/config_io.h"

#include <filesystem>
#include <fstream>
#include <set>
#include <type_traits>

#include "docmatch/errors.h"

namespace docmatch {

namespace {

template <typename F>
void fields(ModelConfig& c, F&& f) {
  f("d_multi", c.d_multi);
  f("text_layers", c.text_layers);
  f("cross_layers", c.cross_layers);
  f("heads", c.heads);
  f("word_dim", c.word_dim);
  f("obj_dim", c.obj_dim);
  f("vocab_size", c.vocab_size);
  f("max_sentence_len", c.max_sentence_len);
}

template <typename F>
void fields(ObjectiveConfig& c, F&& f) {
  f("alpha", c.alpha);
  f("p_sub", c.p_sub);
  f("fixed_k", c.fixed_k);
  f("selection", c.selection);
}

template <typename F>
void fields(TrainConfig& c, F&& f) {
  f("batch_size", c.batch_size);
  f("max_lr", c.max_lr);
  f("warmup_steps", c.warmup_steps);
  f("start_lr", c.start_lr);
  f("plateau_patience_epochs", c.plateau_patience_epochs);
  f("decay_factor", c.decay_factor);
  f("plateau_threshold", c.plateau_threshold);
  f("max_epochs", c.max_epochs);
  f("seed", c.seed);
  f("objectives", c.objectives);
  f("checkpoint_every", c.checkpoint_every);
  f("beta1", c.beta1);
  f("beta2", c.beta2);
  f("adam_eps", c.adam_eps);
}

template <typename F>
void fields(SynthConfig& c, F&& f) {
  f("train_docs", c.train_docs);
  f("val_docs", c.val_docs);
  f("test_docs", c.test_docs);
  f("sentences_per_doc", c.sentences_per_doc);
  f("images_per_doc", c.images_per_doc);
  f("density", c.density);
  f("topics", c.topics);
  f("words_per_topic", c.words_per_topic);
  f("vocab_size", c.vocab_size);
  f("obj_dim", c.obj_dim);
  f("objects_per_image", c.objects_per_image);
  f("min_sentence_len", c.min_sentence_len);
  f("max_sentence_len", c.max_sentence_len);
  f("topic_word_prob", c.topic_word_prob);
  f("sigma", c.sigma);
  f("themes", c.themes);
  f("theme_spread", c.theme_spread);
  f("embed_dim", c.embed_dim);
}

Json encode(std::size_t v) { return v; }
Json encode(double v) { return v; }
Json encode(const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); }
Json encode(EdgeSelection v) {
  return v == EdgeSelection::kRowColumnMaxima ? "row_column_maxima" : "global_top_entries";
}
Json encode(const ObjectiveToggles& v) { return format_objectives(v); }

[[noreturn]] void bad_type(const std::string& key, const char* expected, const Json& v) {
  throw ConfigError(key + ": expected " + expected + ", got " + v.dump());
}

void decode(const std::string& key, const Json& v, std::size_t& out) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad_type(key, "a non-negative integer", v);
  out = v.get<std::size_t>();
}
void decode(const std::string& key, const Json& v, double& out) {
  if (!v.is_number()) bad_type(key, "a number", v);
  out = v.get<double>();
}
void decode(const std::string& key, const Json& v, std::optional<std::size_t>& out) {
  if (v.is_null()) {
    out.reset();
    return;
  }
  std::size_t x = 0;
  decode(key, v, x);
  out = x;
}
void decode(const std::string& key, const Json& v, EdgeSelection& out) {
  if (v == "row_column_maxima") {
    out = EdgeSelection::kRowColumnMaxima;
  } else if (v == "global_top_entries") {
    out = EdgeSelection::kGlobalTopEntries;
  } else {
    bad_type(key, "\"row_column_maxima\" or \"global_top_entries\"", v);
  }
}
void decode(const std::string& key, const Json& v, ObjectiveToggles& out) {
  if (!v.is_string()) bad_type(key, "a string such as \"C,I,D\"", v);
  out = parse_objectives(v.get<std::string>());
}

template <typename Config>
Json to_json_impl(const Config& c) {
  Json j = Json::object();
  fields(const_cast<Config&>(c), [&](const char* name, auto& value) { j[name] = encode(value); });
  return j;
}

template <typename Config>
void apply_impl(Config& c, const Json& j, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected a JSON object");
  std::set<std::string> known;
  fields(c, [&](const char* name, auto& value) {
    known.insert(name);
    if (auto it = j.find(name); it != j.end()) decode(context + "." + name, *it, value);
  });
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw ConfigError(context + ": unknown key \"" + key + "\"");
  }
}

}  // namespace

Json to_json(const ModelConfig& c) { return to_json_impl(c); }
Json to_json(const ObjectiveConfig& c) { return to_json_impl(c); }
Json to_json(const TrainConfig& c) { return to_json_impl(c); }
Json to_json(const SynthConfig& c) { return to_json_impl(c); }

void apply(ModelConfig& c, const Json& j, const std::string& context) { apply_impl(c, j, context); }
void apply(ObjectiveConfig& c, const Json& j, const std::string& context) { apply_impl(c, j, context); }
void apply(TrainConfig& c, const Json& j, const std::string& context) { apply_impl(c, j, context); }
void apply(SynthConfig& c, const Json& j, const std::string& context) { apply_impl(c, j, context); }

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path + " for reading");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& text, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out << text;
    out.flush();
    if (!out) throw IoError("write to " + tmp + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

void write_json_file(const Json& j, const std::string& path) {
  write_text_file(j.dump(2) + "\n", path);
}

}  // namespace docmatch
