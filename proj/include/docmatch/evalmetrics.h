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

#ifndef DOCMATCH_EVALMETRICS_H_
#define DOCMATCH_EVALMETRICS_H_

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "docmatch/corpus.h"
#include "docmatch/encoder.h"

namespace docmatch {

// Row-major |S| x |V| scores for one document.
struct ScoreMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
};

// Mann-Whitney AUC over all cells, ties at half weight (average ranks).
// Empty when every cell is gold or none is.
std::optional<double> document_auc(const ScoreMatrix& scores, const std::vector<Edge>& gold);

// Fraction of the k best cells that are gold; ties go to the lower
// (row, col). Throws ConfigError when k is 0 or exceeds the cell count.
double document_precision_at_k(const ScoreMatrix& scores, const std::vector<Edge>& gold,
                               std::size_t k);

struct DocumentEval {
  std::string id;
  std::optional<double> auc;
  std::map<std::size_t, double> p_at;
  std::size_t n_pairs = 0;
  std::size_t n_positive = 0;
};

struct EvalReport {
  std::optional<double> macro_auc;  // empty when every document was skipped
  std::map<std::size_t, double> p_at;
  std::vector<DocumentEval> per_document;
  std::vector<std::string> skipped;  // ids with undefined AUC
};

using DocumentScorer = std::function<ScoreMatrix(const Document&)>;

// Scores every document with `scorer`. Macro p@k averages all documents;
// macro AUC averages the non-skipped ones. Throws ValidationError naming
// the first document without gold edges.
EvalReport evaluate(std::span<const Document* const> docs, const DocumentScorer& scorer,
                    const std::vector<std::size_t>& ks = {1, 5});

// Cosine similarities from the model, computed without a graph.
ScoreMatrix model_scores(const Document& doc, const ModelParams& params, const ModelConfig& config);
EvalReport evaluate(std::span<const Document* const> docs, const ModelParams& params,
                    const ModelConfig& config, const std::vector<std::size_t>& ks = {1, 5});

// Scores 1 on gold cells and 0 elsewhere.
ScoreMatrix gold_scores(const Document& doc);

nlohmann::ordered_json report_to_json(const EvalReport& report);

}  // namespace docmatch

#endif  // DOCMATCH_EVALMETRICS_H_
