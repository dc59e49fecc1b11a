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

#ifndef DOCMATCH_DIAGNOSTICS_H_
#define DOCMATCH_DIAGNOSTICS_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "docmatch/corpus.h"
#include "docmatch/encoder.h"
#include "docmatch/rng.h"

namespace docmatch {

// Per-document feature vectors for sentences and images.
using ViewProvider = std::function<RawViews(const Document&)>;

// Mean word embedding per sentence, mean object row per image.
ViewProvider raw_view_provider(const Tensor& word_table);
// Encoder outputs, computed without a graph.
ViewProvider learned_view_provider(const ModelParams& params, const ModelConfig& config);

struct DistanceSamples {
  std::vector<double> matched;  // anchor to every gold image of the sentence (anchor itself included)
  std::vector<double> intra;    // anchor to the document's other images
  std::vector<double> cross;    // anchor to images sampled from other documents
  std::size_t sentences_used = 0;
};

// For each sentence with at least one gold image the anchor is its first
// gold image (lowest index). All distances are L2 between image vectors.
// Cross negatives are drawn uniformly without replacement from the images
// of the other documents in `docs`, `cross_per_sentence` per sentence.
// Throws ValidationError for a document without gold edges.
DistanceSamples distance_samples(std::span<const Document* const> docs, const ViewProvider& views,
                                 RngStream& rng, std::size_t cross_per_sentence = 5);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value. Throws
// ValidationError when either sample is empty.
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

// Kolmogorov survival function Q(lambda) = 2 sum_{j>=1} (-1)^{j-1} exp(-2 j^2 lambda^2).
double kolmogorov_q(double lambda);

struct Histogram {
  std::vector<double> edges;  // bins + 1 ascending edges; last bin closed
  std::vector<std::size_t> matched, intra, cross;
};
// Common edges spanning all three samples.
Histogram distance_histogram(const DistanceSamples& samples, std::size_t bins = 20);

struct BiasReport {
  KsResult ks;  // intra vs cross negatives
  std::size_t n_matched = 0, n_intra = 0, n_cross = 0;
  double mean_matched = 0.0, mean_intra = 0.0, mean_cross = 0.0;
  Histogram histogram;
};
BiasReport bias_report(const DistanceSamples& samples, std::size_t bins = 20);

// Mean squared L2 distance of the rows to their centroid; 0 for no rows.
double spread(const std::vector<std::vector<double>>& rows);

struct SpreadRow {
  std::string id;
  double image_spread = 0.0;
  double text_spread = 0.0;
  double auc = 0.0;
};

struct SpreadReport {
  double intercept = 0.0;
  double beta_image_spread = 0.0;
  double beta_text_spread = 0.0;
  std::optional<double> r_squared;  // empty when the AUC targets have no variance
  bool rank_deficient = false;      // pseudo-inverse solution was used
  std::vector<SpreadRow> per_document;
};

// OLS of auc on (1, image_spread, text_spread). Throws ValidationError for
// fewer than 3 rows.
SpreadReport spread_regression(const std::vector<SpreadRow>& rows);

// Least-squares coefficients of y on the columns of x (row-major n x p)
// via the normal equations, falling back to the pseudo-inverse when they
// are singular. Sets *rank_deficient accordingly.
std::vector<double> least_squares(const std::vector<double>& x, std::size_t p,
                                  const std::vector<double>& y, bool* rank_deficient = nullptr);

nlohmann::ordered_json bias_report_to_json(const BiasReport& report);
nlohmann::ordered_json spread_report_to_json(const SpreadReport& report);
// Per-document spreads without a regression (no AUC source available).
nlohmann::ordered_json spreads_to_json(const std::vector<SpreadRow>& rows);

}  // namespace docmatch

#endif  // DOCMATCH_DIAGNOSTICS_H_
