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

#ifndef DOCMATCH_CONFIG_IO_H_
#define DOCMATCH_CONFIG_IO_H_

#include <string>

#include "json.hpp"

#include "docmatch/encoder.h"
#include "docmatch/objective.h"
#include "docmatch/synth.h"
#include "docmatch/trainer.h"

namespace docmatch {

using Json = nlohmann::ordered_json;

// Config <-> JSON. The `apply` functions overwrite only the keys present in
// `j` and throw ConfigError for unknown keys or wrongly typed values;
// `context` prefixes error messages.
Json to_json(const ModelConfig& c);
Json to_json(const ObjectiveConfig& c);
Json to_json(const TrainConfig& c);
Json to_json(const SynthConfig& c);

void apply(ModelConfig& c, const Json& j, const std::string& context = "model");
void apply(ObjectiveConfig& c, const Json& j, const std::string& context = "objective");
void apply(TrainConfig& c, const Json& j, const std::string& context = "train");
void apply(SynthConfig& c, const Json& j, const std::string& context = "synth");

Json read_json_file(const std::string& path);
// Pretty-printed, trailing newline, written via a temporary file and rename.
void write_json_file(const Json& j, const std::string& path);
void write_text_file(const std::string& text, const std::string& path);

}  // namespace docmatch

#endif  // DOCMATCH_CONFIG_IO_H_
