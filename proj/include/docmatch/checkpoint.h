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

#ifndef DOCMATCH_CHECKPOINT_H_
#define DOCMATCH_CHECKPOINT_H_

#include <string>
#include <vector>

#include "json.hpp"

#include "docmatch/encoder.h"
#include "docmatch/objective.h"
#include "docmatch/trainer.h"

namespace docmatch {

inline constexpr const char* kCheckpointFormat = "docmatch-checkpoint/1";

struct Checkpoint {
  ModelConfig model;
  ObjectiveConfig objective;
  TrainConfig train;
  TrainState state;
};

// JSON container: format tag, config echo, every named parameter with its
// shape, Adam moments and step, schedule state and loss history. Doubles
// are written in shortest round-trip form, so a reload is bit-exact.
// Written through a temporary file and rename.
void save_checkpoint(const std::string& path, const ModelConfig& model,
                     const ObjectiveConfig& objective, const TrainConfig& train,
                     const TrainState& state);

// Throws ParseError on a wrong format tag or malformed content and
// ValidationError when a parameter is missing or has the wrong shape.
Checkpoint load_checkpoint(const std::string& path);

// Per-epoch loss history as a JSON array.
nlohmann::ordered_json history_to_json(const std::vector<EpochRecord>& history);

}  // namespace docmatch

#endif  // DOCMATCH_CHECKPOINT_H_
