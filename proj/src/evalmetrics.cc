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

#include "docmatch/evalmetrics.h"

#include <algorithm>
#include <numeric>
#include <set>

#include "docmatch/errors.h"

namespace docmatch {

namespace {

std::vector<char> gold_mask(const ScoreMatrix& scores, const std::vector<Edge>& gold) {
  if (scores.values.size() != scores.rows * scores.cols) {
    throw DimensionError("score matrix holds " + std::to_string(scores.values.size()) +
                         " values for " + std::to_string(scores.rows) + "x" +
                         std::to_string(scores.cols));
  }
  std::vector<char> mask(scores.values.size(), 0);
  for (const auto& e : gold) {
    if (e.sentence >= scores.rows || e.image >= scores.cols) {
      throw ValidationError("gold edge outside the score matrix");
    }
    mask[e.sentence * scores.cols + e.image] = 1;
  }
  return mask;
}

}  // namespace

std::optional<double> document_auc(const ScoreMatrix& scores, const std::vector<Edge>& gold) {
  const auto mask = gold_mask(scores, gold);
  const std::size_t n = mask.size();
  const double positives = static_cast<double>(std::count(mask.begin(), mask.end(), 1));
  const double negatives = static_cast<double>(n) - positives;
  if (positives == 0.0 || negatives == 0.0) return std::nullopt;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores.values[a] < scores.values[b]; });
  double positive_rank_sum = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && scores.values[order[j + 1]] == scores.values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based average rank
    for (std::size_t t = i; t <= j; ++t) {
      if (mask[order[t]]) positive_rank_sum += rank;
    }
    i = j + 1;
  }
  const double u = positive_rank_sum - positives * (positives + 1.0) / 2.0;
  return u / (positives * negatives);
}

double document_precision_at_k(const ScoreMatrix& scores, const std::vector<Edge>& gold,
                               std::size_t k) {
  const auto mask = gold_mask(scores, gold);
  if (k == 0 || k > mask.size()) {
    throw ConfigError("p@" + std::to_string(k) + " needs between 1 and " +
                      std::to_string(mask.size()) + " cells");
  }
  std::vector<std::size_t> order(mask.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k), order.end(),
                    [&](std::size_t a, std::size_t b) {
                      const double va = scores.values[a], vb = scores.values[b];
                      return va > vb || (va == vb && a < b);
                    });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) hits += mask[order[i]] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

EvalReport evaluate(std::span<const Document* const> docs, const DocumentScorer& scorer,
                    const std::vector<std::size_t>& ks) {
  for (const auto* doc : docs) {
    if (!doc->gold_edges) throw ValidationError("document \"" + doc->id + "\" has no gold edges");
  }
  EvalReport report;
  double auc_sum = 0.0;
  std::size_t auc_count = 0;
  std::map<std::size_t, double> p_sum;
  for (const auto* doc : docs) {
    const ScoreMatrix scores = scorer(*doc);
    if (scores.rows != doc->sentences.size() || scores.cols != doc->images.size()) {
      throw DimensionError("scores for \"" + doc->id + "\" do not match the document size");
    }
    const auto& gold = *doc->gold_edges;
    DocumentEval row;
    row.id = doc->id;
    row.n_pairs = scores.rows * scores.cols;
    row.n_positive = std::set<Edge>(gold.begin(), gold.end()).size();
    row.auc = document_auc(scores, gold);
    if (row.auc) {
      auc_sum += *row.auc;
      ++auc_count;
    } else {
      report.skipped.push_back(doc->id);
    }
    for (auto k : ks) {
      row.p_at[k] = document_precision_at_k(scores, gold, k);
      p_sum[k] += row.p_at[k];
    }
    report.per_document.push_back(std::move(row));
  }
  if (auc_count > 0) report.macro_auc = auc_sum / static_cast<double>(auc_count);
  if (!docs.empty()) {
    for (auto k : ks) report.p_at[k] = p_sum[k] / static_cast<double>(docs.size());
  }
  return report;
}

ScoreMatrix model_scores(const Document& doc, const ModelParams& params, const ModelConfig& config) {
  NoGradGuard no_grad;
  const auto enc = encode_document(doc, params, config);
  const Tensor sim = similarity_matrix(enc.sentences, enc.images);
  ScoreMatrix out;
  out.rows = sim.rows();
  out.cols = sim.cols();
  out.values.assign(sim.data().begin(), sim.data().end());
  return out;
}

EvalReport evaluate(std::span<const Document* const> docs, const ModelParams& params,
                    const ModelConfig& config, const std::vector<std::size_t>& ks) {
  return evaluate(
      docs, [&](const Document& doc) { return model_scores(doc, params, config); }, ks);
}

ScoreMatrix gold_scores(const Document& doc) {
  ScoreMatrix out;
  out.rows = doc.sentences.size();
  out.cols = doc.images.size();
  out.values.assign(out.rows * out.cols, 0.0);
  if (doc.gold_edges) {
    for (const auto& e : *doc.gold_edges) out.values[e.sentence * out.cols + e.image] = 1.0;
  }
  return out;
}

nlohmann::ordered_json report_to_json(const EvalReport& report) {
  using Json = nlohmann::ordered_json;
  auto opt = [](const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); };
  auto p_map = [](const std::map<std::size_t, double>& m) {
    Json j = Json::object();
    for (const auto& [k, v] : m) j[std::to_string(k)] = v;
    return j;
  };
  Json j;
  j["macro_auc"] = opt(report.macro_auc);
  j["p_at"] = p_map(report.p_at);
  j["n_documents"] = report.per_document.size();
  j["n_scored"] = report.per_document.size() - report.skipped.size();
  Json rows = Json::array();
  for (const auto& r : report.per_document) {
    rows.push_back({{"id", r.id},
                    {"auc", opt(r.auc)},
                    {"p_at", p_map(r.p_at)},
                    {"n_pairs", r.n_pairs},
                    {"n_positive", r.n_positive}});
  }
  j["per_document"] = std::move(rows);
  j["skipped"] = report.skipped;
  return j;
}

}  // namespace docmatch
