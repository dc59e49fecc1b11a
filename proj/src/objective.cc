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

#include "docmatch/objective.h"

#include <algorithm>
#include <cctype>
#include <numeric>

#include "docmatch/errors.h"
#include "docmatch/ops.h"

namespace docmatch {

void validate_objective_config(const ObjectiveConfig& c) {
  if (!(c.alpha > 0.0)) throw ConfigError("objective config: alpha must be positive");
  if (!(c.p_sub > 0.0 && c.p_sub <= 1.0)) throw ConfigError("objective config: p_sub must lie in (0, 1]");
  if (c.fixed_k && *c.fixed_k == 0) throw ConfigError("objective config: k must be at least 1");
}

ObjectiveToggles parse_objectives(const std::string& text) {
  ObjectiveToggles t{false, false, false};
  bool seen_any = false;
  for (char raw : text) {
    if (raw == ',' || raw == '+' || raw == ' ') continue;
    bool* slot = nullptr;
    switch (std::toupper(static_cast<unsigned char>(raw))) {
      case 'C': slot = &t.cross; break;
      case 'I': slot = &t.intra; break;
      case 'D': slot = &t.sub; break;
      default:
        throw ConfigError("unknown objective '" + std::string(1, raw) + "' in \"" + text +
                          "\" (expected letters from C, I, D)");
    }
    if (*slot) throw ConfigError("objective '" + std::string(1, raw) + "' listed twice in \"" + text + "\"");
    *slot = true;
    seen_any = true;
  }
  if (!seen_any && !text.empty()) throw ConfigError("no objectives in \"" + text + "\"");
  return t;
}

std::string format_objectives(const ObjectiveToggles& t) {
  std::string out;
  auto append = [&](bool on, const char* s) {
    if (!on) return;
    if (!out.empty()) out += ',';
    out += s;
  };
  append(t.cross, "C");
  append(t.intra, "I");
  append(t.sub, "D");
  return out;
}

std::size_t resolve_k(const ObjectiveConfig& config, std::size_t rows, std::size_t cols) {
  if (config.fixed_k) return std::min(*config.fixed_k, std::max(rows, cols));
  return std::min(rows, cols);
}

namespace {

// Indices of the k largest values, ties toward the lower index.
std::vector<std::size_t> top_k_indices(const std::vector<double>& values, std::size_t k) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  k = std::min(k, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (values[a] != values[b]) return values[a] > values[b];
                      return a < b;
                    });
  order.resize(k);
  return order;
}

}  // namespace

std::vector<std::size_t> tk_selection(std::span<const double> values, std::size_t rows,
                                      std::size_t cols, std::size_t k, EdgeSelection mode) {
  if (rows == 0 || cols == 0 || values.size() != rows * cols) {
    throw DimensionError("TK needs a non-empty matrix");
  }
  if (k < 1 || k > std::max(rows, cols)) {
    throw ConfigError("TK: k = " + std::to_string(k) + " is invalid for a " + std::to_string(rows) +
                      "x" + std::to_string(cols) + " matrix");
  }
  std::vector<std::size_t> selected;
  if (mode == EdgeSelection::kGlobalTopEntries) {
    if (2 * k > rows * cols) {
      throw ConfigError("TK: 2k = " + std::to_string(2 * k) + " exceeds the " +
                        std::to_string(rows * cols) + " matrix cells");
    }
    std::vector<double> all(values.begin(), values.end());
    return top_k_indices(all, 2 * k);
  }

  std::vector<double> row_best(rows), col_best(cols);
  std::vector<std::size_t> row_arg(rows, 0), col_arg(cols, 0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 1; c < cols; ++c)
      if (values[r * cols + c] > values[r * cols + row_arg[r]]) row_arg[r] = c;
    row_best[r] = values[r * cols + row_arg[r]];
  }
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 1; r < rows; ++r)
      if (values[r * cols + c] > values[col_arg[c] * cols + c]) col_arg[c] = r;
    col_best[c] = values[col_arg[c] * cols + c];
  }
  for (auto r : top_k_indices(row_best, k)) selected.push_back(r * cols + row_arg[r]);
  for (auto c : top_k_indices(col_best, k)) selected.push_back(col_arg[c] * cols + c);
  return selected;
}

Tensor tk(const Tensor& m, std::size_t k, EdgeSelection mode) {
  if (m.rank() != 2) throw DimensionError("TK needs a matrix, got " + shape_string(m.shape()));
  const auto picks = tk_selection(m.data(), m.dim(0), m.dim(1), k, mode);
  return select_mean(m, picks);
}

Tensor neg_tk(const Tensor& m, std::size_t k, EdgeSelection mode) {
  return neg(tk(neg(m), k, mode));
}

double hinge(double pos, double neg, double margin) {
  return std::max(0.0, neg - pos + margin);
}

Tensor hinge(const Tensor& pos, const Tensor& neg, double margin) {
  return relu(add_scalar(sub(neg, pos), margin));
}

BatchScores score_batch(std::span<const DocumentEncoding> batch, const ObjectiveConfig& config) {
  const std::size_t b = batch.size();
  BatchScores scores;
  scores.matrices.assign(b, std::vector<Tensor>(b));
  scores.doc_sim.assign(b, std::vector<Tensor>(b));
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      Tensor m = similarity_matrix(batch[i].sentences, batch[j].images);
      scores.doc_sim[i][j] = tk(m, resolve_k(config, m.dim(0), m.dim(1)), config.selection);
      scores.matrices[i][j] = std::move(m);
    }
  }
  return scores;
}

namespace {

void require_batch(std::size_t size) {
  if (size < 2) {
    throw ConfigError("hard-negative objectives need a batch of at least 2 documents, got " +
                      std::to_string(size));
  }
}

// max_{j != i} h(pos, sim(S_i, V_j)) + max_{j != i} h(pos, sim(S_j, V_i)).
Tensor hard_negative_hinge(const BatchScores& scores, std::size_t i, const Tensor& pos, double margin) {
  const std::size_t b = scores.doc_sim.size();
  std::vector<Tensor> image_side, sentence_side;
  for (std::size_t j = 0; j < b; ++j) {
    if (j == i) continue;
    image_side.push_back(hinge(pos, scores.doc_sim[i][j], margin));
    sentence_side.push_back(hinge(pos, scores.doc_sim[j][i], margin));
  }
  return add(maximum(image_side), maximum(sentence_side));
}

}  // namespace

std::vector<Tensor> cross_document_loss(const BatchScores& scores, const ObjectiveConfig& config) {
  const std::size_t b = scores.doc_sim.size();
  require_batch(b);
  std::vector<Tensor> out;
  out.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    out.push_back(hard_negative_hinge(scores, i, scores.doc_sim[i][i], config.alpha));
  }
  return out;
}

std::vector<Tensor> cross_document_loss(std::span<const DocumentEncoding> batch,
                                        const ObjectiveConfig& config) {
  require_batch(batch.size());
  return cross_document_loss(score_batch(batch, config), config);
}

Tensor intra_document_loss(const Tensor& m, const ObjectiveConfig& config) {
  const std::size_t k = resolve_k(config, m.dim(0), m.dim(1));
  return hinge(tk(m, k, config.selection), neg_tk(m, k, config.selection), config.alpha / 2.0);
}

std::vector<Tensor> dropout_subdoc_loss(const BatchScores& scores, const ObjectiveConfig& config,
                                        RngStream& rng, std::vector<std::string>* warnings) {
  const std::size_t b = scores.doc_sim.size();
  require_batch(b);
  std::vector<Tensor> out;
  out.reserve(b);
  for (std::size_t i = 0; i < b; ++i) {
    const Tensor& own = scores.matrices[i][i];
    const std::size_t n = own.dim(0), m = own.dim(1);
    const auto keep_n = static_cast<std::size_t>(config.p_sub * static_cast<double>(n));
    const auto keep_m = static_cast<std::size_t>(config.p_sub * static_cast<double>(m));
    if (keep_n == 0 || keep_m == 0) {
      if (warnings) {
        warnings->push_back("document " + std::to_string(i) + " in batch: sub-document of " +
                            std::to_string(keep_n) + " sentences x " + std::to_string(keep_m) +
                            " images is empty; skipped");
      }
      out.push_back(Tensor::scalar(0.0));
      continue;
    }
    auto rows = rng.sample_without_replacement(n, keep_n);
    auto cols = rng.sample_without_replacement(m, keep_m);
    std::sort(rows.begin(), rows.end());
    std::sort(cols.begin(), cols.end());
    const Tensor sub_matrix = select_cols(select_rows(own, rows), cols);
    const Tensor pos = tk(sub_matrix, resolve_k(config, keep_n, keep_m), config.selection);
    out.push_back(hard_negative_hinge(scores, i, pos, config.alpha / 2.0));
  }
  return out;
}

std::vector<Tensor> dropout_subdoc_loss(std::span<const DocumentEncoding> batch,
                                        const ObjectiveConfig& config, RngStream& rng,
                                        std::vector<std::string>* warnings) {
  require_batch(batch.size());
  return dropout_subdoc_loss(score_batch(batch, config), config, rng, warnings);
}

BatchLoss total_loss(std::span<const DocumentEncoding> batch, const ObjectiveConfig& config,
                     RngStream& rng, const ObjectiveToggles& toggles,
                     std::vector<std::string>* warnings) {
  require_batch(batch.size());
  const BatchScores scores = score_batch(batch, config);
  const std::size_t b = batch.size();
  std::vector<Tensor> cross, sub;
  if (toggles.cross) cross = cross_document_loss(scores, config);
  if (toggles.sub) sub = dropout_subdoc_loss(scores, config, rng, warnings);

  BatchLoss result;
  std::vector<Tensor> totals;
  for (std::size_t i = 0; i < b; ++i) {
    LossBreakdown lb;
    const Tensor& own = scores.matrices[i][i];
    const std::size_t k = resolve_k(config, own.dim(0), own.dim(1));
    lb.s_pos = scores.doc_sim[i][i].item();
    lb.s_neg = neg_tk(own, k, config.selection).item();
    lb.l_cross = toggles.cross ? cross[i] : Tensor::scalar(0.0);
    lb.l_intra = toggles.intra ? intra_document_loss(own, config) : Tensor::scalar(0.0);
    lb.l_sub = toggles.sub ? sub[i] : Tensor::scalar(0.0);
    lb.total = add(add(lb.l_cross, lb.l_intra), lb.l_sub);
    result.mean_cross += lb.l_cross.item();
    result.mean_intra += lb.l_intra.item();
    result.mean_sub += lb.l_sub.item();
    totals.push_back(lb.total);
    result.per_document.push_back(std::move(lb));
  }
  const double inv = 1.0 / static_cast<double>(b);
  result.mean_cross *= inv;
  result.mean_intra *= inv;
  result.mean_sub *= inv;
  result.mean_total = mean(stack(totals));
  return result;
}

}  // namespace docmatch
