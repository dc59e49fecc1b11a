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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "docmatch/errors.h"
#include "docmatch/objective.h"
#include "docmatch/ops.h"
#include "test_support.h"

using namespace docmatch;
using testing::random_param;

namespace {

// Averages the k best row maxima and k best column maxima by exhaustive
// search over every k-subset, independent of the library's selection code.
double brute_tk(const std::vector<double>& m, std::size_t rows, std::size_t cols, std::size_t k) {
  std::vector<double> row_max(rows, -INFINITY), col_max(cols, -INFINITY);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      row_max[r] = std::max(row_max[r], m[r * cols + c]);
      col_max[c] = std::max(col_max[c], m[r * cols + c]);
    }
  auto best_subset = [k](const std::vector<double>& v) {
    const std::size_t kk = std::min(k, v.size());
    double best = -INFINITY;
    for (unsigned mask = 0; mask < (1u << v.size()); ++mask) {
      if (static_cast<std::size_t>(__builtin_popcount(mask)) != kk) continue;
      double s = 0.0;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (mask & (1u << i)) s += v[i];
      best = std::max(best, s);
    }
    return best;
  };
  const double count = static_cast<double>(std::min(k, rows) + std::min(k, cols));
  return (best_subset(row_max) + best_subset(col_max)) / count;
}

std::vector<double> values(const Tensor& t) { return {t.data().begin(), t.data().end()}; }

Tensor random_matrix(std::size_t r, std::size_t c, RngStream& rng) {
  std::vector<double> v(r * c);
  for (auto& x : v) x = 2.0 * rng.uniform() - 1.0;
  return Tensor({r, c}, v);
}

DocumentEncoding random_encoding(std::size_t n, std::size_t m, std::size_t d, RngStream& rng) {
  return {random_param({n, d}, rng), random_param({m, d}, rng)};
}

// Cosine similarity computed directly from raw values.
double cosine(const Tensor& a, std::size_t i, const Tensor& b, std::size_t j) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t k = 0; k < a.dim(1); ++k) {
    dot += a.at(i, k) * b.at(j, k);
    na += a.at(i, k) * a.at(i, k);
    nb += b.at(j, k) * b.at(j, k);
  }
  return dot / std::sqrt(na * nb);
}

double oracle_doc_sim(const DocumentEncoding& s, const DocumentEncoding& v) {
  const std::size_t n = s.sentences.dim(0), m = v.images.dim(0);
  std::vector<double> cells(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) cells[i * m + j] = cosine(s.sentences, i, v.images, j);
  return brute_tk(cells, n, m, std::min(n, m));
}

}  // namespace

TEST_CASE("hinge examples") {
  CHECK(hinge(0.5, 0.1, 0.2) == 0.0);
  CHECK(hinge(0.1, 0.5, 0.2) == doctest::Approx(0.6).epsilon(1e-15));
  for (double x : {-1.0, 0.0, 0.37, 5.0}) CHECK(hinge(x, x, 0.2) == doctest::Approx(0.2).epsilon(1e-15));
  auto pos = Tensor::parameter({}, {0.3}), neg = Tensor::parameter({}, {0.1});
  auto h = hinge(pos, neg, 0.5);
  CHECK(h.item() == doctest::Approx(0.3));
  h.backward();
  CHECK(pos.grad()[0] == -1.0);
  CHECK(neg.grad()[0] == 1.0);
}

TEST_CASE("tk and neg_tk examples") {
  Tensor m({2, 2}, {0.9, 0.1, 0.2, 0.8});
  CHECK(tk(m, 2).item() == doctest::Approx(0.85).epsilon(1e-15));
  CHECK(neg_tk(m, 2).item() == doctest::Approx(0.15).epsilon(1e-15));
  CHECK(tk(Tensor({2, 2}, {1, 0, 0, 1}), 1).item() == 1.0);
  for (double c : {-0.4, 0.0, 0.7}) {
    Tensor constant({3, 4}, std::vector<double>(12, c));
    for (std::size_t k = 1; k <= 3; ++k) {
      CHECK(tk(constant, k).item() == doctest::Approx(c).epsilon(1e-15));
      CHECK(neg_tk(constant, k).item() == doctest::Approx(c).epsilon(1e-15));
    }
  }
  // A cell that is both a row and column maximum counts twice.
  CHECK(tk_selection(std::vector<double>{0.9, 0.1, 0.2, 0.8}, 2, 2, 1) ==
        std::vector<std::size_t>{0, 0});
}

TEST_CASE("tk errors") {
  Tensor m({2, 3});
  CHECK_THROWS_AS(tk(m, 0), ConfigError);
  CHECK_THROWS_AS(tk(m, 4), ConfigError);
  CHECK_NOTHROW(tk(m, 3));
  CHECK_THROWS_AS(tk(m, 4, EdgeSelection::kGlobalTopEntries), ConfigError);
}

TEST_CASE("tk properties over 1000 random matrices") {
  RngStream rng(200);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t rows = 1 + rng.below(5), cols = 1 + rng.below(5);
    Tensor m = random_matrix(rows, cols, rng);
    const auto v = values(m);
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    Tensor negated = scale(m, -1.0);
    for (std::size_t k = 1; k <= std::max(rows, cols); ++k) {
      CAPTURE(rows);
      CAPTURE(cols);
      CAPTURE(k);
      const double t = tk(m, k).item(), n = neg_tk(m, k).item();
      CHECK(n == -tk(negated, k).item());
      CHECK(t >= n);
      CHECK(lo <= n);
      CHECK(t <= hi);
      CHECK(std::fabs(t - brute_tk(v, rows, cols, k)) < 1e-12);
    }
  }
}

TEST_CASE("tk is invariant to row and column reordering") {
  RngStream rng(201);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor m = random_matrix(4, 3, rng);
    auto rows = rng.sample_without_replacement(4, 4), cols = rng.sample_without_replacement(3, 3);
    Tensor p = select_cols(select_rows(m, rows), cols);
    for (std::size_t k = 1; k <= 3; ++k) {
      CHECK(tk(p, k).item() == doctest::Approx(tk(m, k).item()).epsilon(1e-15));
      CHECK(tk(p, k, EdgeSelection::kGlobalTopEntries).item() ==
            doctest::Approx(tk(m, k, EdgeSelection::kGlobalTopEntries).item()).epsilon(1e-15));
    }
  }
}

TEST_CASE("tk gradient is a nonnegative distribution over selected cells") {
  RngStream rng(202);
  for (auto mode : {EdgeSelection::kRowColumnMaxima, EdgeSelection::kGlobalTopEntries}) {
    auto m = random_param({4, 5}, rng);
    tk(m, 2, mode).backward();
    const auto selected = tk_selection(m.data(), 4, 5, 2, mode);
    double total = 0.0;
    for (std::size_t i = 0; i < 20; ++i) {
      const double g = m.grad()[i];
      CHECK(g >= 0.0);
      const bool chosen = std::find(selected.begin(), selected.end(), i) != selected.end();
      CHECK((g > 0.0) == chosen);
      total += g;
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("global top entries selection") {
  Tensor m({2, 2}, {0.9, 0.1, 0.2, 0.8});
  CHECK(tk(m, 1, EdgeSelection::kGlobalTopEntries).item() == doctest::Approx(0.85));
  CHECK(tk(m, 2, EdgeSelection::kGlobalTopEntries).item() == doctest::Approx(0.5));
}

TEST_CASE("resolve k") {
  ObjectiveConfig c;
  CHECK(resolve_k(c, 3, 5) == 3);
  c.fixed_k = 2;
  CHECK(resolve_k(c, 3, 5) == 2);
  c.fixed_k = 9;
  CHECK(resolve_k(c, 3, 5) == 5);
}

TEST_CASE("cross loss examples") {
  RngStream rng(203);
  ObjectiveConfig c;
  c.alpha = 0.2;
  auto doc = random_encoding(3, 2, 4, rng);
  const std::vector<DocumentEncoding> twins = {doc, doc};
  for (const auto& l : cross_document_loss(twins, c)) CHECK(l.item() == doctest::Approx(0.4).epsilon(1e-12));

  // Orthogonal documents: positives 1, negatives 0 <= 0.8 - alpha.
  DocumentEncoding a{Tensor({2, 2}, {1, 0, 1, 0}), Tensor({2, 2}, {1, 0, 1, 0})};
  DocumentEncoding b{Tensor({2, 2}, {0, 1, 0, 1}), Tensor({2, 2}, {0, 1, 0, 1})};
  const std::vector<DocumentEncoding> orth = {a, b};
  for (const auto& l : cross_document_loss(orth, c)) CHECK(l.item() == 0.0);

  const std::vector<DocumentEncoding> single = {a};
  CHECK_THROWS_AS(cross_document_loss(single, c), ConfigError);
}

TEST_CASE("cross loss matches exhaustive enumeration on a 3-document batch") {
  RngStream rng(204);
  ObjectiveConfig c;
  c.alpha = 0.3;
  const std::vector<DocumentEncoding> batch = {random_encoding(3, 2, 4, rng),
                                               random_encoding(2, 2, 4, rng),
                                               random_encoding(4, 3, 4, rng)};
  const auto loss = cross_document_loss(batch, c);
  for (std::size_t i = 0; i < 3; ++i) {
    const double pos = oracle_doc_sim(batch[i], batch[i]);
    double img_side = -INFINITY, sen_side = -INFINITY;
    for (std::size_t j = 0; j < 3; ++j) {
      if (j == i) continue;
      img_side = std::max(img_side, std::max(0.0, oracle_doc_sim(batch[i], batch[j]) - pos + c.alpha));
      sen_side = std::max(sen_side, std::max(0.0, oracle_doc_sim(batch[j], batch[i]) - pos + c.alpha));
    }
    CHECK(loss[i].item() == doctest::Approx(img_side + sen_side).epsilon(1e-12));
  }
}

TEST_CASE("intra loss examples") {
  ObjectiveConfig c;
  c.alpha = 0.2;
  Tensor constant({2, 3}, std::vector<double>(6, 0.4));
  CHECK(intra_document_loss(constant, c).item() == doctest::Approx(0.1).epsilon(1e-14));
  c.fixed_k = 1;
  CHECK(intra_document_loss(Tensor({2, 2}, {1, -1, -1, 1}), c).item() == 0.0);
  c.fixed_k.reset();
  RngStream rng(205);
  for (int trial = 0; trial < 200; ++trial) {
    Tensor m = random_matrix(3, 3, rng);
    const double gap = tk(m, 3).item() - neg_tk(m, 3).item();
    const double l = intra_document_loss(m, c).item();
    CHECK((l > 0.0) == (gap < 0.1));
    CHECK(l == doctest::Approx(std::max(0.0, 0.1 - gap)).epsilon(1e-14));
  }
}

TEST_CASE("sub-document loss with p_sub 1 is the cross loss at half margin") {
  RngStream rng(206);
  const std::vector<DocumentEncoding> batch = {random_encoding(3, 2, 4, rng),
                                               random_encoding(4, 3, 4, rng),
                                               random_encoding(2, 4, 4, rng)};
  ObjectiveConfig c;
  c.alpha = 0.4;
  c.p_sub = 1.0;
  ObjectiveConfig half = c;
  half.alpha = 0.2;
  RngStream draw(1);
  const auto sub = dropout_subdoc_loss(batch, c, draw);
  const auto cross = cross_document_loss(batch, half);
  for (std::size_t i = 0; i < 3; ++i) CHECK(sub[i].item() == doctest::Approx(cross[i].item()).epsilon(1e-14));
}

TEST_CASE("sub-document sampling keeps floor(p n) and is deterministic") {
  RngStream rng(207);
  const std::vector<DocumentEncoding> batch = {random_encoding(5, 5, 4, rng),
                                               random_encoding(5, 5, 4, rng)};
  ObjectiveConfig c;
  c.p_sub = 0.6;
  RngStream a(9), b(9), ref(9);
  const auto la = dropout_subdoc_loss(batch, c, a), lb = dropout_subdoc_loss(batch, c, b);
  for (std::size_t i = 0; i < 2; ++i) CHECK(la[i].item() == lb[i].item());
  CHECK(a.next_u64() == b.next_u64());

  // Replay the draws and recompute the first document's positive by hand.
  auto rows = ref.sample_without_replacement(5, 3);
  auto cols = ref.sample_without_replacement(5, 3);
  CHECK(rows.size() == 3);
  std::sort(rows.begin(), rows.end());
  std::sort(cols.begin(), cols.end());
  std::vector<double> cells;
  for (auto r : rows)
    for (auto col : cols) cells.push_back(cosine(batch[0].sentences, r, batch[0].images, col));
  const double pos = brute_tk(cells, 3, 3, 3);
  const double img = std::max(0.0, oracle_doc_sim(batch[0], batch[1]) - pos + c.alpha / 2);
  const double sen = std::max(0.0, oracle_doc_sim(batch[1], batch[0]) - pos + c.alpha / 2);
  CHECK(la[0].item() == doctest::Approx(img + sen).epsilon(1e-12));
}

TEST_CASE("degenerate sub-documents are skipped with a warning") {
  RngStream rng(208);
  const std::vector<DocumentEncoding> batch = {random_encoding(1, 3, 4, rng),
                                               random_encoding(4, 4, 4, rng)};
  ObjectiveConfig c;
  c.p_sub = 0.6;
  std::vector<std::string> warnings;
  RngStream draw(2);
  const auto l = dropout_subdoc_loss(batch, c, draw, &warnings);
  CHECK(l[0].item() == 0.0);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("document 0") != std::string::npos);
}

TEST_CASE("total loss is the sum of its parts") {
  RngStream rng(209);
  const std::vector<DocumentEncoding> batch = {random_encoding(3, 3, 4, rng),
                                               random_encoding(4, 2, 4, rng),
                                               random_encoding(2, 3, 4, rng)};
  ObjectiveConfig c;
  RngStream draw(5);
  const auto loss = total_loss(batch, c, draw);
  double mean = 0.0;
  for (const auto& d : loss.per_document) {
    CHECK(d.total.item() ==
          doctest::Approx(d.l_cross.item() + d.l_intra.item() + d.l_sub.item()).epsilon(1e-12));
    CHECK(d.l_cross.item() >= 0.0);
    CHECK(d.l_intra.item() >= 0.0);
    CHECK(d.l_sub.item() >= 0.0);
    CHECK(d.s_pos >= d.s_neg);
    mean += d.total.item();
  }
  CHECK(loss.mean_total.item() == doctest::Approx(mean / 3).epsilon(1e-12));

  RngStream draw2(5);
  const auto off = total_loss(batch, c, draw2, ObjectiveToggles{false, false, false});
  CHECK(off.mean_total.item() == 0.0);
  RngStream draw3(5);
  const auto cross_only = total_loss(batch, c, draw3, ObjectiveToggles{true, false, false});
  for (const auto& d : cross_only.per_document) {
    CHECK(d.l_intra.item() == 0.0);
    CHECK(d.l_sub.item() == 0.0);
  }
}

TEST_CASE("a small gradient step decreases the total loss") {
  RngStream rng(210);
  std::vector<DocumentEncoding> batch = {random_encoding(3, 3, 6, rng),
                                         random_encoding(3, 3, 6, rng)};
  ObjectiveConfig c;
  c.alpha = 1.0;
  RngStream d1(11);
  const auto before = total_loss(batch, c, d1);
  REQUIRE(before.mean_total.item() > 0.0);
  before.mean_total.backward();
  for (auto& e : batch) {
    for (Tensor* t : {&e.sentences, &e.images}) {
      auto data = t->mutable_data();
      for (std::size_t i = 0; i < data.size(); ++i) data[i] -= 1e-3 * t->grad()[i];
    }
  }
  RngStream d2(11);
  CHECK(total_loss(batch, c, d2).mean_total.item() < before.mean_total.item());
}

TEST_CASE("objective list parsing") {
  CHECK(parse_objectives("C,I,D") == ObjectiveToggles{true, true, true});
  CHECK(parse_objectives("i+d") == ObjectiveToggles{false, true, true});
  CHECK(parse_objectives("C") == ObjectiveToggles{true, false, false});
  CHECK(format_objectives(parse_objectives("D,C")) == "C,D");
  CHECK_THROWS_AS(parse_objectives("C,X"), ConfigError);
  CHECK_THROWS_AS(parse_objectives("C,C"), ConfigError);
  ObjectiveConfig bad;
  bad.p_sub = 0.0;
  CHECK_THROWS_AS(validate_objective_config(bad), ConfigError);
  bad = {};
  bad.alpha = -1.0;
  CHECK_THROWS_AS(validate_objective_config(bad), ConfigError);
}
