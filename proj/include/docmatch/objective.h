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

#ifndef DOCMATCH_OBJECTIVE_H_
#define DOCMATCH_OBJECTIVE_H_

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "docmatch/encoder.h"
#include "docmatch/rng.h"
#include "docmatch/tensor.h"

namespace docmatch {

// How TK picks its "most likely" edges.
enum class EdgeSelection {
  // Each sentence's best image is one candidate sentence-to-image edge and
  // each image's best sentence one image-to-sentence edge; the k strongest of
  // each kind are averaged (2k values, duplicates counted twice).
  kRowColumnMaxima,
  // The 2k largest cells of the matrix.
  kGlobalTopEntries,
};

struct ObjectiveConfig {
  double alpha = 0.2;
  double p_sub = 0.6;
  // Replaces k = min(rows, cols) when set (clamped to the matrix size).
  std::optional<std::size_t> fixed_k;
  EdgeSelection selection = EdgeSelection::kRowColumnMaxima;
};

void validate_objective_config(const ObjectiveConfig& config);

// Which parts of the total loss are active: C(ross), I(ntra), D(ropout).
struct ObjectiveToggles {
  bool cross = true;
  bool intra = true;
  bool sub = true;

  bool any() const { return cross || intra || sub; }
  bool operator==(const ObjectiveToggles&) const = default;
};

// Parses "C,I,D" style lists (any order, case-insensitive, '+' also
// accepted). Throws ConfigError on unknown or repeated letters.
ObjectiveToggles parse_objectives(const std::string& text);
std::string format_objectives(const ObjectiveToggles& toggles);

// k for a rows x cols matrix under `config`.
std::size_t resolve_k(const ObjectiveConfig& config, std::size_t rows, std::size_t cols);

// Flat indices (with multiplicity) of the cells TK averages. Ties prefer
// the lower index. Throws ConfigError when k < 1 or k > max(rows, cols)
// (or 2k > rows*cols for kGlobalTopEntries).
std::vector<std::size_t> tk_selection(std::span<const double> values, std::size_t rows,
                                      std::size_t cols, std::size_t k,
                                      EdgeSelection mode = EdgeSelection::kRowColumnMaxima);

// Document-level positive similarity. Gradient 1/(number selected) per selection.
Tensor tk(const Tensor& m, std::size_t k, EdgeSelection mode = EdgeSelection::kRowColumnMaxima);
// Document-level negative similarity, -tk(-m, k).
Tensor neg_tk(const Tensor& m, std::size_t k, EdgeSelection mode = EdgeSelection::kRowColumnMaxima);

// h_margin(pos, neg) = max(0, neg - pos + margin).
double hinge(double pos, double neg, double margin);
Tensor hinge(const Tensor& pos, const Tensor& neg, double margin);

// Similarity matrices and TK document similarities for every
// (sentence set i, image set j) pairing in a batch.
struct BatchScores {
  std::vector<std::vector<Tensor>> matrices;  // [i][j]: S_i x V_j
  std::vector<std::vector<Tensor>> doc_sim;   // [i][j]: TK(matrices[i][j])
};
BatchScores score_batch(std::span<const DocumentEncoding> batch, const ObjectiveConfig& config);

// Hard-negative hinge loss against the rest of the batch, per document.
// Throws ConfigError for batches smaller than 2.
std::vector<Tensor> cross_document_loss(const BatchScores& scores, const ObjectiveConfig& config);
std::vector<Tensor> cross_document_loss(std::span<const DocumentEncoding> batch,
                                        const ObjectiveConfig& config);

// h_{alpha/2}(TK(m), NegTK(m)).
Tensor intra_document_loss(const Tensor& m, const ObjectiveConfig& config);

// Sub-documents keep floor(p_sub * n) sentences and floor(p_sub * m)
// images drawn uniformly without replacement; their TK similarity must beat
// the hardest full negative document by alpha/2. Documents whose
// sub-document would be empty contribute 0 and add a message to `warnings`.
std::vector<Tensor> dropout_subdoc_loss(const BatchScores& scores, const ObjectiveConfig& config,
                                        RngStream& rng, std::vector<std::string>* warnings = nullptr);
std::vector<Tensor> dropout_subdoc_loss(std::span<const DocumentEncoding> batch,
                                        const ObjectiveConfig& config, RngStream& rng,
                                        std::vector<std::string>* warnings = nullptr);

struct LossBreakdown {
  Tensor l_cross, l_intra, l_sub, total;
  double s_pos = 0.0;  // TK of the document's own matrix
  double s_neg = 0.0;  // NegTK of the document's own matrix
};

struct BatchLoss {
  std::vector<LossBreakdown> per_document;
  Tensor mean_total;  // scalar; what training differentiates
  double mean_cross = 0.0, mean_intra = 0.0, mean_sub = 0.0;
};

// L = L_c + L_intra + L_sub per document (disabled parts are constant 0),
// averaged over the batch.
BatchLoss total_loss(std::span<const DocumentEncoding> batch, const ObjectiveConfig& config,
                     RngStream& rng, const ObjectiveToggles& toggles = {},
                     std::vector<std::string>* warnings = nullptr);

}  // namespace docmatch

#endif  // DOCMATCH_OBJECTIVE_H_
