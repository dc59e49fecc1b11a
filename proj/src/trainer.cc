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

#include "docmatch/trainer.h"

#include <cmath>
#include <numeric>

#include "docmatch/checkpoint.h"
#include "docmatch/errors.h"

namespace docmatch {

void validate_train_config(const TrainConfig& c) {
  auto fail = [](const std::string& what) { throw ConfigError("train config: " + what); };
  if (c.batch_size < 2) fail("batch_size must be at least 2");
  if (!(c.start_lr < c.max_lr)) fail("start_lr must be below max_lr");
  if (!(c.start_lr >= 0.0)) fail("start_lr must be non-negative");
  if (!(c.decay_factor > 1.0)) fail("decay_factor must exceed 1");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0 && c.beta2 >= 0.0 && c.beta2 < 1.0)) {
    fail("Adam betas must lie in [0, 1)");
  }
  if (!(c.adam_eps > 0.0)) fail("adam_eps must be positive");
}

double lr_at(std::size_t step, const TrainConfig& c, std::size_t decays) {
  if (step < c.warmup_steps) {
    const double frac = static_cast<double>(step) / static_cast<double>(c.warmup_steps);
    return c.start_lr + (c.max_lr - c.start_lr) * frac;
  }
  return c.max_lr / std::pow(c.decay_factor, static_cast<double>(decays));
}

void adam_step(ModelParams& params, AdamState& state, double lr, const TrainConfig& config) {
  auto named = params.named();
  for (const auto& [name, t] : named) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter \"" + name + "\"");
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (auto& [name, tensor] : named) {
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() != tensor.numel()) m.assign(tensor.numel(), 0.0);
    if (v.size() != tensor.numel()) v.assign(tensor.numel(), 0.0);
    const auto grad = tensor.grad();
    auto w = tensor.mutable_data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g;
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g * g;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + config.adam_eps);
    }
    tensor.zero_grad();
  }
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   RngStream* rng) {
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (rng) rng->shuffle(order);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  if (batches.size() >= 2 && batches.back().size() < 2) {
    auto tail = std::move(batches.back());
    batches.pop_back();
    batches.back().insert(batches.back().end(), tail.begin(), tail.end());
  }
  return batches;
}

namespace {

std::vector<DocumentEncoding> encode_batch(const std::vector<const Document*>& docs,
                                           const std::vector<std::size_t>& batch,
                                           const ModelParams& params, const ModelConfig& config) {
  std::vector<DocumentEncoding> out;
  out.reserve(batch.size());
  for (auto i : batch) out.push_back(encode_document(*docs[i], params, config));
  return out;
}

void check_finite(double v, const std::string& what) {
  if (!std::isfinite(v)) throw NumericError("non-finite " + what + " loss");
}

}  // namespace

double evaluate_loss(const std::vector<const Document*>& docs, const ModelParams& params,
                     const ModelConfig& model_config, const ObjectiveConfig& objective_config,
                     const TrainConfig& train_config) {
  if (docs.size() < 2) throw ConfigError("loss evaluation needs at least 2 documents");
  NoGradGuard no_grad;
  RngStream rng = RngStream(train_config.seed).derive("validation-dropout");
  double total = 0.0;
  for (const auto& batch : make_batches(docs.size(), train_config.batch_size, nullptr)) {
    auto encoded = encode_batch(docs, batch, params, model_config);
    auto loss = total_loss(encoded, objective_config, rng, train_config.objectives);
    total += loss.mean_total.item() * static_cast<double>(batch.size());
  }
  return total / static_cast<double>(docs.size());
}

TrainState init_train_state(const Corpus& corpus, const ModelConfig& model_config,
                            const ObjectiveConfig& objective_config, const TrainConfig& train_config,
                            const PretrainedEmbeddings* pretrained) {
  validate_model_config(model_config);
  validate_objective_config(objective_config);
  validate_train_config(train_config);
  if (model_config.vocab_size < corpus.vocab_size) {
    throw ConfigError("model vocabulary " + std::to_string(model_config.vocab_size) +
                      " is smaller than the corpus vocabulary " + std::to_string(corpus.vocab_size));
  }
  TrainState state;
  RngStream init_rng = RngStream(train_config.seed).derive("init");
  state.params = init_params(model_config, init_rng, pretrained);
  return state;
}

void train(const Corpus& corpus, const ModelConfig& model_config,
           const ObjectiveConfig& objective_config, const TrainConfig& train_config,
           TrainState& state, const TrainOptions& options) {
  validate_train_config(train_config);
  const auto train_docs = corpus.split("train");
  if (train_docs.size() < 2) throw ConfigError("the train split needs at least 2 documents");
  std::vector<const Document*> val_docs;
  if (corpus.splits.count("val")) val_docs = corpus.split("val");
  const bool use_val = val_docs.size() >= 2;
  const auto& monitor_docs = use_val ? val_docs : train_docs;

  const RngStream root(train_config.seed);
  if (state.epoch == 0 && state.history.empty()) {
    state.initial_val_total =
        evaluate_loss(monitor_docs, state.params, model_config, objective_config, train_config);
  }

  std::size_t epochs_run = 0;
  while (state.epoch < train_config.max_epochs) {
    if (options.stop_after_epochs && epochs_run >= *options.stop_after_epochs) break;
    const std::size_t epoch = state.epoch + 1;
    RngStream batch_rng = root.derive("batching", epoch);
    EpochRecord record;
    record.epoch = epoch;
    double sum_cross = 0.0, sum_intra = 0.0, sum_sub = 0.0, sum_total = 0.0;
    std::size_t seen = 0;
    for (const auto& batch : make_batches(train_docs.size(), train_config.batch_size, &batch_rng)) {
      const double lr = lr_at(state.adam.step, train_config, state.decays);
      RngStream dropout_rng = root.derive("dropout", state.adam.step);
      BatchLoss loss;
      {
        auto encoded = encode_batch(train_docs, batch, state.params, model_config);
        loss = total_loss(encoded, objective_config, dropout_rng, train_config.objectives);
      }
      const double value = loss.mean_total.item();
      check_finite(value, "training");
      if (options.step_losses) options.step_losses->push_back(value);
      loss.mean_total.backward();

      const double w = static_cast<double>(batch.size());
      sum_cross += loss.mean_cross * w;
      sum_intra += loss.mean_intra * w;
      sum_sub += loss.mean_sub * w;
      sum_total += value * w;
      seen += batch.size();
      loss = BatchLoss{};  // frees the graph
      adam_step(state.params, state.adam, lr, train_config);
    }
    const double inv = 1.0 / static_cast<double>(seen);
    record.l_cross = sum_cross * inv;
    record.l_intra = sum_intra * inv;
    record.l_sub = sum_sub * inv;
    record.total = sum_total * inv;
    record.steps = state.adam.step;
    record.val_total =
        evaluate_loss(monitor_docs, state.params, model_config, objective_config, train_config);
    check_finite(record.val_total, "validation");

    if (!state.has_best || record.val_total < state.best_val - train_config.plateau_threshold) {
      state.best_val = record.val_total;
      state.has_best = true;
      state.bad_epochs = 0;
    } else if (state.adam.step >= train_config.warmup_steps) {
      if (++state.bad_epochs >= train_config.plateau_patience_epochs) {
        ++state.decays;
        state.bad_epochs = 0;
      }
    }
    record.lr = lr_at(state.adam.step, train_config, state.decays);
    state.epoch = epoch;
    state.history.push_back(record);
    ++epochs_run;
    if (options.on_epoch) options.on_epoch(record);
    if (options.checkpoint_path && train_config.checkpoint_every > 0 &&
        epoch % train_config.checkpoint_every == 0) {
      save_checkpoint(*options.checkpoint_path, model_config, objective_config, train_config, state);
    }
  }
  if (options.checkpoint_path) {
    save_checkpoint(*options.checkpoint_path, model_config, objective_config, train_config, state);
  }
}

}  // namespace docmatch
