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

#ifndef DOCMATCH_TRAINER_H_
#define DOCMATCH_TRAINER_H_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "docmatch/corpus.h"
#include "docmatch/encoder.h"
#include "docmatch/objective.h"

namespace docmatch {

struct TrainConfig {
  std::size_t batch_size = 11;
  double max_lr = 5e-5;
  std::size_t warmup_steps = 4000;
  double start_lr = 1e-7;
  std::size_t plateau_patience_epochs = 3;
  double decay_factor = 5.0;
  double plateau_threshold = 1e-6;
  std::size_t max_epochs = 10;
  std::uint64_t seed = 0;
  ObjectiveToggles objectives;
  std::size_t checkpoint_every = 1;  // epochs; 0 disables periodic checkpoints
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
};

void validate_train_config(const TrainConfig& config);

// Linear warm-up from start_lr to max_lr over warmup_steps, then max_lr
// divided by decay_factor once per plateau decay.
double lr_at(std::size_t step, const TrainConfig& config, std::size_t decays = 0);

struct AdamState {
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
  std::size_t step = 0;
};

// One bias-corrected Adam update from the gradients held by `params`,
// which are cleared afterwards. Throws NumericError naming the first
// parameter with a non-finite gradient (before touching any weight).
void adam_step(ModelParams& params, AdamState& state, double lr, const TrainConfig& config);

// Shuffled mini-batches over `count` documents. A trailing batch with a
// single document is merged into the previous one.
std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   RngStream* rng);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t steps = 0;  // optimizer steps completed so far
  double l_cross = 0.0, l_intra = 0.0, l_sub = 0.0, total = 0.0;  // training means
  double val_total = 0.0;
  double lr = 0.0;  // learning rate in effect at the end of the epoch
};

// Everything needed to continue a run exactly.
struct TrainState {
  ModelParams params;
  AdamState adam;
  std::size_t epoch = 0;  // completed epochs
  std::size_t decays = 0;
  double best_val = 0.0;
  bool has_best = false;
  std::size_t bad_epochs = 0;
  double initial_val_total = 0.0;
  std::vector<EpochRecord> history;
};

struct TrainOptions {
  // Written every checkpoint_every epochs and at the end of training.
  std::optional<std::string> checkpoint_path;
  const PretrainedEmbeddings* pretrained = nullptr;
  // Called after every epoch.
  std::function<void(const EpochRecord&)> on_epoch;
  // Total loss of every optimizer step, for diagnostics and resume checks.
  std::vector<double>* step_losses = nullptr;
  // Stop after this many epochs in this call (the run stays resumable).
  std::optional<std::size_t> stop_after_epochs;
};

// Mean total loss over a split in no-graph mode, with a fixed dropout
// stream so successive calls are comparable.
double evaluate_loss(const std::vector<const Document*>& docs, const ModelParams& params,
                     const ModelConfig& model_config, const ObjectiveConfig& objective_config,
                     const TrainConfig& train_config);

TrainState init_train_state(const Corpus& corpus, const ModelConfig& model_config,
                            const ObjectiveConfig& objective_config, const TrainConfig& train_config,
                            const PretrainedEmbeddings* pretrained = nullptr);

// Runs epochs state.epoch+1 .. max_epochs on the "train" split, validating
// on "val" when it holds at least two documents (otherwise on the training
// loss). Throws NumericError on a non-finite loss; the checkpoint on disk
// then still holds the last good epoch.
void train(const Corpus& corpus, const ModelConfig& model_config,
           const ObjectiveConfig& objective_config, const TrainConfig& train_config,
           TrainState& state, const TrainOptions& options = {});

}  // namespace docmatch

#endif  // DOCMATCH_TRAINER_H_
