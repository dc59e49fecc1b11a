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

#include "docmatch/diagnostics.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Dense>

#include "docmatch/errors.h"

namespace docmatch {

namespace {

using Json = nlohmann::ordered_json;

double l2(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DimensionError("feature vectors differ in width");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> tensor_rows(const Tensor& t, std::size_t r) {
  const auto d = t.data();
  return std::vector<double>(d.begin() + static_cast<std::ptrdiff_t>(r * t.cols()),
                             d.begin() + static_cast<std::ptrdiff_t>((r + 1) * t.cols()));
}

}  // namespace

ViewProvider raw_view_provider(const Tensor& word_table) {
  return [word_table](const Document& doc) { return raw_feature_views(doc, word_table); };
}

ViewProvider learned_view_provider(const ModelParams& params, const ModelConfig& config) {
  return [&params, config](const Document& doc) {
    NoGradGuard no_grad;
    const auto enc = encode_document(doc, params, config);
    RawViews views;
    for (std::size_t r = 0; r < enc.sentences.rows(); ++r) {
      views.sentences.push_back(tensor_rows(enc.sentences, r));
    }
    for (std::size_t r = 0; r < enc.images.rows(); ++r) {
      views.images.push_back(tensor_rows(enc.images, r));
    }
    return views;
  };
}

DistanceSamples distance_samples(std::span<const Document* const> docs, const ViewProvider& views,
                                 RngStream& rng, std::size_t cross_per_sentence) {
  std::vector<RawViews> all;
  all.reserve(docs.size());
  std::vector<std::size_t> image_offset;
  std::size_t total_images = 0;
  for (const auto* doc : docs) {
    if (!doc->gold_edges) throw ValidationError("document \"" + doc->id + "\" has no gold edges");
    all.push_back(views(*doc));
    image_offset.push_back(total_images);
    total_images += doc->images.size();
  }

  DistanceSamples out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const Document& doc = *docs[d];
    const auto& images = all[d].images;
    const std::size_t pool = total_images - doc.images.size();
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      std::vector<char> matched(doc.images.size(), 0);
      for (const auto& e : *doc.gold_edges) {
        if (e.sentence == s) matched[e.image] = 1;
      }
      const auto first = std::find(matched.begin(), matched.end(), 1);
      if (first == matched.end()) continue;
      const auto& anchor = images[static_cast<std::size_t>(first - matched.begin())];
      ++out.sentences_used;
      for (std::size_t v = 0; v < images.size(); ++v) {
        (matched[v] ? out.matched : out.intra).push_back(l2(anchor, images[v]));
      }
      // Index into the images of all other documents, skipping this one.
      for (auto pick : rng.sample_without_replacement(pool, std::min(cross_per_sentence, pool))) {
        std::size_t global = pick >= image_offset[d] ? pick + doc.images.size() : pick;
        const auto it = std::upper_bound(image_offset.begin(), image_offset.end(), global);
        const std::size_t other = static_cast<std::size_t>(it - image_offset.begin()) - 1;
        out.cross.push_back(l2(anchor, all[other].images[global - image_offset[other]]));
      }
    }
  }
  return out;
}

double kolmogorov_q(double lambda) {
  if (lambda <= 0.0) return 1.0;
  constexpr double kTol = 1e-12;
  if (lambda < 1.0) {
    // Dual form; converges quickly where the alternating series does not.
    const double pi2 = std::numbers::pi * std::numbers::pi;
    double sum = 0.0;
    for (int j = 1; j < 1000; ++j) {
      const double odd = 2.0 * j - 1.0;
      const double term = std::exp(-odd * odd * pi2 / (8.0 * lambda * lambda));
      sum += term;
      if (term < kTol) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int j = 1; j < 1000; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1) ? term : -term;
    if (term < kTol) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ValidationError("KS test needs two non-empty samples");
  std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double na = static_cast<double>(x.size()), nb = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  KsResult r;
  r.statistic = d;
  if (d == 0.0) return r;
  const double ne = na * nb / (na + nb);
  const double root = std::sqrt(ne);
  r.p_value = kolmogorov_q(d * (root + 0.12 + 0.11 / root));
  return r;
}

Histogram distance_histogram(const DistanceSamples& samples, std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram needs at least one bin");
  double lo = 0.0, hi = 0.0;
  bool any = false;
  for (const auto* v : {&samples.matched, &samples.intra, &samples.cross}) {
    for (double x : *v) {
      lo = any ? std::min(lo, x) : x;
      hi = any ? std::max(hi, x) : x;
      any = true;
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t b = 0; b <= bins; ++b) {
    h.edges[b] = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins);
  }
  h.edges.back() = hi;
  auto fill = [&](const std::vector<double>& v, std::vector<std::size_t>& counts) {
    counts.assign(bins, 0);
    for (double x : v) {
      auto it = std::upper_bound(h.edges.begin(), h.edges.end(), x);
      std::size_t b = static_cast<std::size_t>(it - h.edges.begin());
      b = b == 0 ? 0 : std::min(b - 1, bins - 1);
      ++counts[b];
    }
  };
  fill(samples.matched, h.matched);
  fill(samples.intra, h.intra);
  fill(samples.cross, h.cross);
  return h;
}

BiasReport bias_report(const DistanceSamples& samples, std::size_t bins) {
  BiasReport r;
  r.ks = ks_two_sample(samples.intra, samples.cross);
  r.n_matched = samples.matched.size();
  r.n_intra = samples.intra.size();
  r.n_cross = samples.cross.size();
  r.mean_matched = mean_of(samples.matched);
  r.mean_intra = mean_of(samples.intra);
  r.mean_cross = mean_of(samples.cross);
  r.histogram = distance_histogram(samples, bins);
  return r;
}

double spread(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return 0.0;
  const std::size_t width = rows.front().size();
  std::vector<double> centroid(width, 0.0);
  for (const auto& r : rows) {
    if (r.size() != width) throw DimensionError("feature rows differ in width");
    for (std::size_t j = 0; j < width; ++j) centroid[j] += r[j];
  }
  for (double& c : centroid) c /= static_cast<double>(rows.size());
  double total = 0.0;
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < width; ++j) {
      const double d = r[j] - centroid[j];
      total += d * d;
    }
  }
  return total / static_cast<double>(rows.size());
}

std::vector<double> least_squares(const std::vector<double>& x, std::size_t p,
                                  const std::vector<double>& y, bool* rank_deficient) {
  const std::size_t n = y.size();
  if (p == 0 || x.size() != n * p) throw DimensionError("design matrix does not match targets");
  // Augmented normal equations [X'X | X'y].
  std::vector<double> a(p * (p + 1), 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t i = 0; i < p; ++i) {
      const double xi = x[r * p + i];
      for (std::size_t j = 0; j < p; ++j) a[i * (p + 1) + j] += xi * x[r * p + j];
      a[i * (p + 1) + p] += xi * y[r];
    }
  }
  double scale = 0.0;
  for (std::size_t i = 0; i < p; ++i) scale = std::max(scale, std::fabs(a[i * (p + 1) + i]));
  bool singular = scale == 0.0;
  for (std::size_t c = 0; c < p && !singular; ++c) {
    std::size_t pivot = c;
    for (std::size_t r = c + 1; r < p; ++r) {
      if (std::fabs(a[r * (p + 1) + c]) > std::fabs(a[pivot * (p + 1) + c])) pivot = r;
    }
    if (std::fabs(a[pivot * (p + 1) + c]) <= 1e-12 * scale) {
      singular = true;
      break;
    }
    for (std::size_t j = 0; j <= p; ++j) std::swap(a[c * (p + 1) + j], a[pivot * (p + 1) + j]);
    for (std::size_t r = 0; r < p; ++r) {
      if (r == c) continue;
      const double f = a[r * (p + 1) + c] / a[c * (p + 1) + c];
      for (std::size_t j = c; j <= p; ++j) a[r * (p + 1) + j] -= f * a[c * (p + 1) + j];
    }
  }
  if (rank_deficient) *rank_deficient = singular;
  std::vector<double> beta(p);
  if (!singular) {
    for (std::size_t i = 0; i < p; ++i) beta[i] = a[i * (p + 1) + p] / a[i * (p + 1) + i];
    return beta;
  }
  Eigen::MatrixXd xm(n, p);
  Eigen::VectorXd ym(n);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < p; ++j) xm(r, j) = x[r * p + j];
    ym(r) = y[r];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(xm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd b = svd.solve(ym);
  for (std::size_t j = 0; j < p; ++j) beta[j] = b(j);
  return beta;
}

SpreadReport spread_regression(const std::vector<SpreadRow>& rows) {
  if (rows.size() < 3) {
    throw ValidationError("spread regression needs at least 3 documents, got " +
                          std::to_string(rows.size()));
  }
  std::vector<double> x, y;
  for (const auto& r : rows) {
    x.insert(x.end(), {1.0, r.image_spread, r.text_spread});
    y.push_back(r.auc);
  }
  SpreadReport out;
  out.per_document = rows;
  const auto beta = least_squares(x, 3, y, &out.rank_deficient);
  out.intercept = beta[0];
  out.beta_image_spread = beta[1];
  out.beta_text_spread = beta[2];
  const double y_mean = mean_of(y);
  double ss_tot = 0.0, ss_res = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double fit = beta[0] + beta[1] * rows[i].image_spread + beta[2] * rows[i].text_spread;
    ss_res += (y[i] - fit) * (y[i] - fit);
    ss_tot += (y[i] - y_mean) * (y[i] - y_mean);
  }
  const bool constant = std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); });
  if (!constant && ss_tot > 0.0) out.r_squared = std::clamp(1.0 - ss_res / ss_tot, 0.0, 1.0);
  return out;
}

Json bias_report_to_json(const BiasReport& r) {
  Json j;
  j["ks_statistic"] = r.ks.statistic;
  j["ks_p_value"] = r.ks.p_value;
  j["n_matched"] = r.n_matched;
  j["n_intra"] = r.n_intra;
  j["n_cross"] = r.n_cross;
  j["mean_matched"] = r.mean_matched;
  j["mean_intra"] = r.mean_intra;
  j["mean_cross"] = r.mean_cross;
  j["histogram"] = {{"bin_edges", r.histogram.edges},
                    {"matched", r.histogram.matched},
                    {"intra_negative", r.histogram.intra},
                    {"cross_negative", r.histogram.cross}};
  return j;
}

Json spreads_to_json(const std::vector<SpreadRow>& rows) {
  Json out = Json::array();
  for (const auto& r : rows) {
    out.push_back({{"id", r.id},
                   {"image_spread", r.image_spread},
                   {"text_spread", r.text_spread},
                   {"auc", r.auc}});
  }
  return out;
}

Json spread_report_to_json(const SpreadReport& r) {
  Json j;
  j["coefficients"] = {{"intercept", r.intercept},
                       {"image_spread", r.beta_image_spread},
                       {"text_spread", r.beta_text_spread}};
  j["r_squared"] = r.r_squared ? Json(*r.r_squared) : Json(nullptr);
  j["rank_deficient"] = r.rank_deficient;
  j["n_documents"] = r.per_document.size();
  j["per_document"] = spreads_to_json(r.per_document);
  return j;
}

}  // namespace docmatch
