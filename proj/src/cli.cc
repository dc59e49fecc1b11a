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

#include "docmatch/cli.h"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "docmatch/checkpoint.h"
#include "docmatch/config_io.h"
#include "docmatch/corpus.h"
#include "docmatch/diagnostics.h"
#include "docmatch/errors.h"
#include "docmatch/evalmetrics.h"
#include "docmatch/synth.h"
#include "docmatch/trainer.h"

namespace docmatch {

namespace {

namespace fs = std::filesystem;

constexpr const char* kVocabFile = "vocab.json";
constexpr const char* kEmbeddingsFile = "embeddings.jsonl";
constexpr const char* kManifestFile = "splits.json";
constexpr const char* kCheckpointFile = "checkpoint.json";
constexpr const char* kFinalFile = "final.json";
constexpr const char* kHistoryFile = "history.json";
constexpr const char* kEvalFile = "eval_report.json";
constexpr const char* kBiasFile = "bias_report.json";
constexpr const char* kSpreadFile = "spread_report.json";

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, v);
  return buf;
}

std::string fmt_g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

// Options shared by every subcommand: a JSON config file whose values the
// flags override.
struct Common {
  std::string config_path;
  std::optional<std::string> out;
  bool force = false;
};

Json load_config(const Common& common, const std::set<std::string>& allowed,
                 const std::string& command) {
  Json j = common.config_path.empty() ? Json::object() : read_json_file(common.config_path);
  if (!j.is_object()) throw ConfigError(command + " config: expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(command + " config: unknown key \"" + key + "\"");
  }
  if (common.out) j["out"] = *common.out;
  return j;
}

template <typename T>
void override_with(Json& j, const char* key, const std::optional<T>& flag) {
  if (flag) j[key] = *flag;
}

void override_section(Json& j, const char* section, const char* key, const Json& value) {
  if (!j.contains(section)) j[section] = Json::object();
  j[section][key] = value;
}

std::string required_string(const Json& j, const char* key, const std::string& command) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw ConfigError(command + ": \"" + key + "\" is required (flag --" + key + ")");
  }
  return it->get<std::string>();
}

std::string string_or(const Json& j, const char* key, const std::string& fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_string()) throw ConfigError(std::string("\"") + key + "\" must be a string");
  return it->get<std::string>();
}

std::size_t size_or(const Json& j, const char* key, std::size_t fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_number_integer() || it->get<long long>() < 0) {
    throw ConfigError(std::string("\"") + key + "\" must be a non-negative integer");
  }
  return it->get<std::size_t>();
}

bool bool_or(const Json& j, const char* key, bool fallback) {
  auto it = j.find(key);
  if (it == j.end()) return fallback;
  if (!it->is_boolean()) throw ConfigError(std::string("\"") + key + "\" must be true or false");
  return it->get<bool>();
}

std::vector<std::size_t> parse_k_list(const std::string& text) {
  std::vector<std::size_t> ks;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(item, &used);
      if (used != item.size() || v < 1) throw std::invalid_argument(item);
      ks.push_back(static_cast<std::size_t>(v));
    } catch (const std::exception&) {
      throw ConfigError("k list \"" + text + "\": \"" + item + "\" is not a positive integer");
    }
  }
  if (ks.empty()) throw ConfigError("k list is empty");
  return ks;
}

void prepare_out_dir(const std::string& dir, const std::vector<std::string>& outputs, bool force,
                     bool resume = false) {
  if (!force && !resume) {
    for (const auto& name : outputs) {
      if (fs::exists(fs::path(dir) / name)) {
        throw ConfigError("refusing to overwrite " + (fs::path(dir) / name).string() +
                          " (pass --force)");
      }
    }
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
}

std::string in_dir(const std::string& dir, const char* name) {
  return (fs::path(dir) / name).string();
}

Corpus load_data(const std::string& dir) {
  LoadOptions options;
  const auto vocab_path = in_dir(dir, kVocabFile);
  if (fs::exists(vocab_path)) {
    std::size_t size = 0;
    for (const auto& [word, id] : load_vocabulary(vocab_path)) size = std::max(size, id + 1);
    options.vocab_size = size;
  }
  return load_dataset(dir, options);
}

std::vector<const Document*> split_docs(const Corpus& corpus, const std::string& split) {
  return corpus.split(split);
}

// ---------------------------------------------------------------- gen

struct GenFlags {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> train_docs, val_docs, test_docs, themes;
  std::optional<double> sigma, density;
};

int cmd_gen(const Common& common, const GenFlags& flags, std::ostream& out) {
  Json j = load_config(common, {"seed", "synth", "out"}, "gen");
  override_with(j, "seed", flags.seed);
  if (flags.train_docs) override_section(j, "synth", "train_docs", *flags.train_docs);
  if (flags.val_docs) override_section(j, "synth", "val_docs", *flags.val_docs);
  if (flags.test_docs) override_section(j, "synth", "test_docs", *flags.test_docs);
  if (flags.themes) override_section(j, "synth", "themes", *flags.themes);
  if (flags.sigma) override_section(j, "synth", "sigma", *flags.sigma);
  if (flags.density) override_section(j, "synth", "density", *flags.density);

  SynthConfig config;
  if (j.contains("synth")) apply(config, j["synth"], "synth");
  validate_synth_config(config);
  const std::uint64_t seed = size_or(j, "seed", 0);
  const std::string dir = required_string(j, "out", "gen");
  prepare_out_dir(dir, {kManifestFile, kVocabFile, kEmbeddingsFile, "train.jsonl"}, common.force);

  RngStream rng(seed);
  const auto data = generate_synthetic_dataset(config, rng);
  save_dataset(data.corpus, dir);
  save_vocabulary(data.vocabulary, in_dir(dir, kVocabFile));
  save_embeddings(data.embeddings, in_dir(dir, kEmbeddingsFile));

  Json echo;
  echo["command"] = "gen";
  echo["seed"] = seed;
  echo["out"] = dir;
  echo["synth"] = to_json(config);
  write_json_file(echo, in_dir(dir, "gen_config.json"));

  out << "split  documents  sentences/doc  images/doc  density\n";
  for (const auto& [name, indices] : data.corpus.splits) {
    if (indices.empty()) continue;
    double n = 0.0, m = 0.0;
    Corpus part;
    for (auto i : indices) {
      const auto& d = data.corpus.documents[i];
      n += static_cast<double>(d.sentences.size());
      m += static_cast<double>(d.images.size());
      part.documents.push_back(d);
    }
    const double count = static_cast<double>(indices.size());
    out << name << "  " << indices.size() << "  " << fmt(n / count, 2) << "  " << fmt(m / count, 2)
        << "  " << fmt(mean_edge_density(part), 4) << "\n";
  }
  return kExitOk;
}

// -------------------------------------------------------------- train

struct TrainFlags {
  std::optional<std::string> data;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> objectives;
  std::optional<std::size_t> epochs, warmup, batch_size, stop_after;
  std::optional<double> lr;
  bool resume = false;
  bool no_pretrained = false;
};

int cmd_train(const Common& common, const TrainFlags& flags, std::ostream& out) {
  Json j = load_config(common, {"seed", "model", "objective", "train", "data", "out", "pretrained"},
                       "train");
  override_with(j, "data", flags.data);
  override_with(j, "seed", flags.seed);
  if (flags.objectives) override_section(j, "train", "objectives", *flags.objectives);
  if (flags.epochs) override_section(j, "train", "max_epochs", *flags.epochs);
  if (flags.warmup) override_section(j, "train", "warmup_steps", *flags.warmup);
  if (flags.batch_size) override_section(j, "train", "batch_size", *flags.batch_size);
  if (flags.lr) override_section(j, "train", "max_lr", *flags.lr);
  if (flags.no_pretrained) j["pretrained"] = false;

  const std::string data_dir = required_string(j, "data", "train");
  const std::string dir = required_string(j, "out", "train");
  const Json model_json = j.value("model", Json::object());

  ModelConfig model;
  ObjectiveConfig objective;
  TrainConfig train_cfg;
  apply(model, model_json, "model");
  if (j.contains("objective")) apply(objective, j["objective"], "objective");
  if (j.contains("train")) apply(train_cfg, j["train"], "train");
  if (j.contains("seed")) train_cfg.seed = size_or(j, "seed", 0);

  const Corpus corpus = load_data(data_dir);
  PretrainedEmbeddings pretrained;
  const bool use_pretrained =
      bool_or(j, "pretrained", true) && fs::exists(in_dir(data_dir, kEmbeddingsFile));
  if (use_pretrained) pretrained = load_embeddings(in_dir(data_dir, kEmbeddingsFile));
  if (!model_json.contains("vocab_size")) model.vocab_size = corpus.vocab_size;
  if (!model_json.contains("obj_dim")) model.obj_dim = corpus.obj_dim;
  if (!model_json.contains("word_dim") && !pretrained.empty()) {
    model.word_dim = pretrained.begin()->second.size();
  }
  validate_model_config(model);
  validate_objective_config(objective);
  validate_train_config(train_cfg);

  const std::string ckpt_path = in_dir(dir, kCheckpointFile);
  const bool resuming = flags.resume && fs::exists(ckpt_path);
  prepare_out_dir(dir, {kCheckpointFile, kHistoryFile}, common.force, flags.resume);

  TrainState state;
  if (resuming) {
    Checkpoint ck = load_checkpoint(ckpt_path);
    if (!(ck.model == model)) throw ConfigError("checkpoint model config differs from this run");
    state = std::move(ck.state);
    out << "resuming after epoch " << state.epoch << " (step " << state.adam.step << ")\n";
  } else {
    state = init_train_state(corpus, model, objective, train_cfg, use_pretrained ? &pretrained : nullptr);
  }

  Json echo;
  echo["command"] = "train";
  echo["seed"] = train_cfg.seed;
  echo["data"] = data_dir;
  echo["out"] = dir;
  echo["pretrained"] = use_pretrained;
  echo["model"] = to_json(model);
  echo["objective"] = to_json(objective);
  echo["train"] = to_json(train_cfg);
  write_json_file(echo, in_dir(dir, "train_config.json"));

  out << "parameters " << state.params.parameter_count() << ", objectives "
      << format_objectives(train_cfg.objectives) << "\n";
  TrainOptions options;
  options.checkpoint_path = ckpt_path;
  options.stop_after_epochs = flags.stop_after;
  options.on_epoch = [&](const EpochRecord& r) {
    out << "epoch " << r.epoch << "  step " << r.steps << "  total " << fmt(r.total)
        << "  (C " << fmt(r.l_cross) << ", I " << fmt(r.l_intra) << ", D " << fmt(r.l_sub)
        << ")  val " << fmt(r.val_total) << "  lr " << fmt_g(r.lr) << "\n";
    write_json_file(history_to_json(state.history), in_dir(dir, kHistoryFile));
  };
  docmatch::train(corpus, model, objective, train_cfg, state, options);
  write_json_file(history_to_json(state.history), in_dir(dir, kHistoryFile));
  if (state.epoch >= train_cfg.max_epochs) {
    save_checkpoint(in_dir(dir, kFinalFile), model, objective, train_cfg, state);
  }
  return kExitOk;
}

// --------------------------------------------------------------- eval

struct EvalFlags {
  std::optional<std::string> data, checkpoint, split, k;
  bool oracle = false;
};

int cmd_eval(const Common& common, const EvalFlags& flags, std::ostream& out) {
  Json j = load_config(common, {"data", "checkpoint", "split", "k", "oracle", "out"}, "eval");
  override_with(j, "data", flags.data);
  override_with(j, "checkpoint", flags.checkpoint);
  override_with(j, "split", flags.split);
  override_with(j, "k", flags.k);
  if (flags.oracle) j["oracle"] = true;

  const std::string data_dir = required_string(j, "data", "eval");
  const std::string dir = required_string(j, "out", "eval");
  const std::string split = string_or(j, "split", "test");
  const auto ks = parse_k_list(string_or(j, "k", "1,5"));
  const bool oracle = bool_or(j, "oracle", false);
  const std::string ckpt = oracle ? string_or(j, "checkpoint", "") : required_string(j, "checkpoint", "eval");

  const Corpus corpus = load_data(data_dir);
  const auto docs = split_docs(corpus, split);
  prepare_out_dir(dir, {kEvalFile}, common.force);

  EvalReport report;
  if (oracle) {
    report = evaluate(docs, gold_scores, ks);
  } else {
    const Checkpoint ck = load_checkpoint(ckpt);
    report = evaluate(docs, ck.state.params, ck.model, ks);
  }
  Json echo;
  echo["command"] = "eval";
  echo["data"] = data_dir;
  echo["checkpoint"] = ckpt;
  echo["split"] = split;
  echo["k"] = ks;
  echo["oracle"] = oracle;
  echo["out"] = dir;
  write_json_file(echo, in_dir(dir, "eval_config.json"));
  write_json_file(report_to_json(report), in_dir(dir, kEvalFile));

  out << "split " << split << ": macro AUC "
      << (report.macro_auc ? fmt(*report.macro_auc) : std::string("undefined"));
  for (const auto& [k, v] : report.p_at) out << ", p@" << k << " " << fmt(v);
  out << " (" << report.per_document.size() - report.skipped.size() << " scored, "
      << report.skipped.size() << " skipped)\n";
  return kExitOk;
}

// ----------------------------------------------------------- diagnose

struct DiagnoseFlags {
  std::optional<std::string> data, checkpoint, split, representations;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> cross_samples, bins;
};

int cmd_diagnose(const Common& common, const DiagnoseFlags& flags, std::ostream& out) {
  Json j = load_config(common,
                       {"seed", "data", "checkpoint", "split", "representations", "cross_samples",
                        "bins", "out"},
                       "diagnose");
  override_with(j, "data", flags.data);
  override_with(j, "checkpoint", flags.checkpoint);
  override_with(j, "split", flags.split);
  override_with(j, "representations", flags.representations);
  override_with(j, "seed", flags.seed);
  override_with(j, "cross_samples", flags.cross_samples);
  override_with(j, "bins", flags.bins);

  const std::string data_dir = required_string(j, "data", "diagnose");
  const std::string dir = required_string(j, "out", "diagnose");
  const std::string split = string_or(j, "split", "test");
  const std::string mode = string_or(j, "representations", "raw");
  const std::string ckpt_path = string_or(j, "checkpoint", "");
  const std::uint64_t seed = size_or(j, "seed", 0);
  const std::size_t cross_samples = size_or(j, "cross_samples", 5);
  const std::size_t bins = size_or(j, "bins", 20);
  if (mode != "raw" && mode != "learned") {
    throw ConfigError("representations must be \"raw\" or \"learned\", got \"" + mode + "\"");
  }
  if (mode == "learned" && ckpt_path.empty()) {
    throw ConfigError("learned representations need --checkpoint");
  }

  const Corpus corpus = load_data(data_dir);
  const auto docs = split_docs(corpus, split);
  prepare_out_dir(dir, {kBiasFile, kSpreadFile}, common.force);

  std::optional<Checkpoint> ck;
  if (!ckpt_path.empty()) ck = load_checkpoint(ckpt_path);

  ViewProvider views;
  Tensor word_table;
  if (mode == "learned") {
    views = learned_view_provider(ck->state.params, ck->model);
  } else {
    const auto emb_path = in_dir(data_dir, kEmbeddingsFile);
    if (fs::exists(emb_path)) {
      const auto embeddings = load_embeddings(emb_path);
      if (embeddings.empty()) throw ValidationError(emb_path + " holds no vectors");
      word_table = embedding_table(embeddings, corpus.vocab_size, embeddings.begin()->second.size());
    } else if (ck) {
      word_table = ck->state.params.word_embed.detach();
    } else {
      throw ValidationError("raw text features need " + emb_path + " or a checkpoint");
    }
    views = raw_view_provider(word_table);
  }

  RngStream rng = RngStream(seed).derive("diagnostics-sampling");
  const auto samples = distance_samples(docs, views, rng, cross_samples);
  const BiasReport bias = bias_report(samples, bins);

  std::vector<SpreadRow> rows;
  std::optional<EvalReport> eval;
  if (ck) eval = evaluate(docs, ck->state.params, ck->model, {1});
  for (std::size_t d = 0; d < docs.size(); ++d) {
    if (eval && !eval->per_document[d].auc) continue;
    const RawViews v = views(*docs[d]);
    SpreadRow row;
    row.id = docs[d]->id;
    row.image_spread = spread(v.images);
    row.text_spread = spread(v.sentences);
    if (eval) row.auc = *eval->per_document[d].auc;
    rows.push_back(std::move(row));
  }
  Json spread_json;
  std::optional<double> r2;
  if (eval) {
    const SpreadReport report = spread_regression(rows);
    r2 = report.r_squared;
    spread_json = spread_report_to_json(report);
  } else {
    spread_json["coefficients"] = nullptr;
    spread_json["r_squared"] = nullptr;
    spread_json["n_documents"] = rows.size();
    Json per_doc = spreads_to_json(rows);
    for (auto& r : per_doc) r["auc"] = nullptr;
    spread_json["per_document"] = std::move(per_doc);
  }

  Json echo;
  echo["command"] = "diagnose";
  echo["seed"] = seed;
  echo["data"] = data_dir;
  echo["checkpoint"] = ckpt_path.empty() ? Json(nullptr) : Json(ckpt_path);
  echo["split"] = split;
  echo["representations"] = mode;
  echo["cross_samples"] = cross_samples;
  echo["bins"] = bins;
  echo["out"] = dir;
  write_json_file(echo, in_dir(dir, "diagnose_config.json"));
  write_json_file(bias_report_to_json(bias), in_dir(dir, kBiasFile));
  write_json_file(spread_json, in_dir(dir, kSpreadFile));

  out << "KS D " << fmt(bias.ks.statistic) << ", p " << fmt_g(bias.ks.p_value) << " (intra "
      << bias.n_intra << ", cross " << bias.n_cross << "); R2 "
      << (r2 ? fmt(*r2) : std::string(eval ? "undefined" : "n/a (no checkpoint)")) << "\n";
  return kExitOk;
}

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--config", common.config_path, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", common.out, "Output directory");
  cmd->add_flag("--force", common.force, "Overwrite existing outputs");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Unsupervised document-level image-sentence matching", "docmatch"};
  app.require_subcommand(1);

  Common common;
  GenFlags gen;
  TrainFlags tr;
  EvalFlags ev;
  DiagnoseFlags dg;

  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic corpus");
  add_common(gen_cmd, common);
  gen_cmd->add_option("--seed", gen.seed, "Root random seed");
  gen_cmd->add_option("--train-docs", gen.train_docs, "Training documents");
  gen_cmd->add_option("--val-docs", gen.val_docs, "Validation documents");
  gen_cmd->add_option("--test-docs", gen.test_docs, "Test documents");
  gen_cmd->add_option("--themes", gen.themes, "Topic themes (0: random composition)");
  gen_cmd->add_option("--sigma", gen.sigma, "Object feature noise");
  gen_cmd->add_option("--density", gen.density, "Gold edges per sentence-image pair");

  auto* train_cmd = app.add_subcommand("train", "Train the encoders");
  add_common(train_cmd, common);
  train_cmd->add_option("--data", tr.data, "Dataset directory");
  train_cmd->add_option("--seed", tr.seed, "Root random seed");
  train_cmd->add_option("--objectives", tr.objectives,
                        "Active loss parts, e.g. C,I,D (default) or C");
  train_cmd->add_option("--epochs", tr.epochs, "Maximum epochs");
  train_cmd->add_option("--lr", tr.lr, "Peak learning rate");
  train_cmd->add_option("--warmup", tr.warmup, "Warm-up steps");
  train_cmd->add_option("--batch-size", tr.batch_size, "Documents per mini-batch");
  train_cmd->add_option("--stop-after", tr.stop_after, "Stop after this many epochs (resumable)");
  train_cmd->add_flag("--resume", tr.resume, "Continue from the checkpoint in --out");
  train_cmd->add_flag("--no-pretrained", tr.no_pretrained, "Ignore the dataset's word vectors");

  auto* eval_cmd = app.add_subcommand("eval", "Score a split against its gold edges");
  add_common(eval_cmd, common);
  eval_cmd->add_option("--data", ev.data, "Dataset directory");
  eval_cmd->add_option("--checkpoint", ev.checkpoint, "Checkpoint file");
  eval_cmd->add_option("--split", ev.split, "Split name (default test)");
  eval_cmd->add_option("--k", ev.k, "Comma-separated p@k cut-offs (default 1,5)");
  eval_cmd->add_flag("--oracle", ev.oracle, "Score with the gold edges themselves");

  auto* diag_cmd = app.add_subcommand("diagnose", "Distance-bias and spread diagnostics");
  add_common(diag_cmd, common);
  diag_cmd->add_option("--data", dg.data, "Dataset directory");
  diag_cmd->add_option("--checkpoint", dg.checkpoint, "Checkpoint for AUCs and learned features");
  diag_cmd->add_option("--split", dg.split, "Split name (default test)");
  diag_cmd->add_option("--representations", dg.representations, "raw (default) or learned");
  diag_cmd->add_option("--seed", dg.seed, "Seed for cross-document sampling");
  diag_cmd->add_option("--cross-samples", dg.cross_samples, "Cross negatives per sentence");
  diag_cmd->add_option("--bins", dg.bins, "Histogram bins");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return cmd_gen(common, gen, out);
    if (train_cmd->parsed()) return cmd_train(common, tr, out);
    if (eval_cmd->parsed()) return cmd_eval(common, ev, out);
    if (diag_cmd->parsed()) return cmd_diagnose(common, dg, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace docmatch
