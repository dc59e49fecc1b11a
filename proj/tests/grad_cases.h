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

#ifndef DOCMATCH_TESTS_GRAD_CASES_H_
#define DOCMATCH_TESTS_GRAD_CASES_H_

#include <functional>
#include <string>
#include <vector>

#include "docmatch/encoder.h"
#include "docmatch/layers.h"
#include "docmatch/objective.h"
#include "docmatch/ops.h"
#include "test_support.h"

namespace docmatch::testing {

struct GradCase {
  std::string name;
  std::function<GradCheck()> run;
};

// Reduces any tensor to a scalar through fixed random weights, so that
// every output element carries a distinct gradient.
inline Tensor weighted_sum(const Tensor& t, std::uint64_t seed) {
  RngStream rng(seed);
  std::vector<double> w(t.numel());
  for (double& x : w) x = rng.normal();
  return sum(mul(t, Tensor(t.shape(), std::move(w))));
}

inline ModelConfig tiny_model_config() {
  ModelConfig c;
  c.d_multi = 8;
  c.text_layers = 1;
  c.cross_layers = 1;
  c.heads = 2;
  c.word_dim = 6;
  c.obj_dim = 5;
  c.vocab_size = 50;
  c.max_sentence_len = 8;
  return c;
}

// Tiny model with every parameter drawn at a moderate scale, so no layer
// sits at a degenerate initial point (zero biases, unit gains).
inline ModelParams tiny_model(const ModelConfig& config, std::uint64_t seed) {
  RngStream rng(seed);
  ModelParams p = init_params(config, rng);
  p.visit([&](const std::string&, Tensor& t) {
    for (double& x : t.mutable_data()) x += 0.3 * rng.normal();
  });
  return p;
}

inline Document tiny_document(const ModelConfig& config, std::size_t sentences, std::size_t images,
                              RngStream& rng) {
  Document doc;
  doc.id = "doc";
  for (std::size_t s = 0; s < sentences; ++s) {
    Sentence tokens;
    const std::size_t len = 2 + rng.below(3);
    for (std::size_t t = 0; t < len; ++t) tokens.push_back(rng.below(config.vocab_size));
    doc.sentences.push_back(tokens);
  }
  for (std::size_t i = 0; i < images; ++i) {
    ImageRecord img;
    img.obj_dim = config.obj_dim;
    const std::size_t mu = 2 + rng.below(2);
    for (std::size_t o = 0; o < mu; ++o) {
      for (std::size_t j = 0; j < config.obj_dim; ++j) img.objects.push_back(rng.normal());
      img.concepts.push_back({rng.below(config.vocab_size)});
    }
    doc.images.push_back(img);
  }
  return doc;
}

inline std::vector<Tensor> all_params(const ModelParams& p) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : p.named()) out.push_back(t);
  return out;
}

inline std::vector<GradCase> gradient_cases() {
  std::vector<GradCase> cases;
  auto add_case = [&](std::string name, std::function<GradCheck()> run) {
    cases.push_back({std::move(name), std::move(run)});
  };

  add_case("matmul", [] {
    RngStream rng(1);
    auto a = random_param({3, 4}, rng), b = random_param({4, 2}, rng);
    return check_gradients([=] { return weighted_sum(matmul(a, b), 11); }, {a, b});
  });
  add_case("transpose", [] {
    RngStream rng(2);
    auto a = random_param({3, 2}, rng);
    return check_gradients([=] { return weighted_sum(transpose(a), 12); }, {a});
  });
  add_case("linear", [] {
    RngStream rng(3);
    auto x = random_param({3, 4}, rng), w = random_param({2, 4}, rng), b = random_param({2}, rng);
    return check_gradients([=] { return weighted_sum(linear(x, w, b), 13); }, {x, w, b});
  });
  add_case("add/sub/mul", [] {
    RngStream rng(4);
    auto a = random_param({2, 3}, rng), b = random_param({2, 3}, rng);
    return check_gradients([=] { return weighted_sum(mul(add(a, b), sub(a, b)), 14); }, {a, b});
  });
  add_case("scale/add_scalar/neg", [] {
    RngStream rng(5);
    auto a = random_param({2, 3}, rng);
    return check_gradients(
        [=] { return weighted_sum(neg(add_scalar(scale(mul(a, a), 0.7), 1.5)), 15); }, {a});
  });
  add_case("add_row", [] {
    RngStream rng(6);
    auto x = random_param({3, 4}, rng), r = random_param({4}, rng);
    return check_gradients([=] { return weighted_sum(add_row(x, r), 16); }, {x, r});
  });
  add_case("relu", [] {
    RngStream rng(7);
    auto a = random_param_away_from_zero({3, 4}, rng);
    return check_gradients([=] { return weighted_sum(relu(a), 17); }, {a});
  });
  add_case("layernorm", [] {
    RngStream rng(8);
    auto x = random_param({3, 5}, rng), g = random_param({5}, rng), b = random_param({5}, rng);
    return check_gradients([=] { return weighted_sum(layernorm(x, g, b), 18); }, {x, g, b});
  });
  add_case("softmax", [] {
    RngStream rng(9);
    auto x = random_param({2, 4}, rng);
    return check_gradients([=] { return weighted_sum(softmax(x), 19); }, {x});
  });
  add_case("softmax masked", [] {
    RngStream rng(10);
    auto x = random_param({2, 4}, rng);
    static const std::vector<std::uint8_t> keep = {1, 0, 1, 1, 0, 1, 1, 0};
    return check_gradients([=] { return weighted_sum(softmax(x, keep), 20); }, {x});
  });
  add_case("sum/mean/mean_rows", [] {
    RngStream rng(11);
    auto a = random_param({3, 4}, rng);
    return check_gradients(
        [=] { return add(mul(sum(a), mean(a)), weighted_sum(mean_rows(mul(a, a)), 21)); }, {a});
  });
  add_case("gather_rows with repeats", [] {
    RngStream rng(12);
    auto table = random_param({5, 3}, rng);
    static const std::vector<std::size_t> ids = {4, 0, 4, 2};
    return check_gradients([=] { return weighted_sum(gather_rows(table, ids), 22); }, {table});
  });
  add_case("select/slice rows and cols", [] {
    RngStream rng(13);
    auto x = random_param({4, 5}, rng);
    static const std::vector<std::size_t> rows = {3, 1, 1};
    static const std::vector<std::size_t> cols = {0, 4, 2, 4};
    return check_gradients(
        [=] {
          return add(add(weighted_sum(select_rows(x, rows), 23), weighted_sum(select_cols(x, cols), 24)),
                     add(weighted_sum(slice_cols(x, 1, 3), 25), weighted_sum(slice_rows(x, 2, 2), 26)));
        },
        {x});
  });
  add_case("concat/stack", [] {
    RngStream rng(14);
    auto a = random_param({2, 3}, rng), b = random_param({2, 2}, rng), c = random_param({1, 3}, rng);
    auto u = random_param({3}, rng), v = random_param({3}, rng);
    return check_gradients(
        [=] {
          const std::vector<Tensor> cols = {a, b}, rows = {a, c}, vecs = {u, v},
                                    scalars = {sum(u), mean(v)};
          return add(add(weighted_sum(concat_cols(cols), 27), weighted_sum(concat_rows(rows), 28)),
                     add(weighted_sum(stack(vecs), 29), weighted_sum(stack(scalars), 30)));
        },
        {a, b, c, u, v});
  });
  add_case("normalize_rows", [] {
    RngStream rng(15);
    auto x = random_param({3, 4}, rng);
    return check_gradients([=] { return weighted_sum(normalize_rows(x), 31); }, {x});
  });
  add_case("cosine_similarity", [] {
    RngStream rng(16);
    auto a = random_param({3, 4}, rng), b = random_param({2, 4}, rng);
    return check_gradients([=] { return weighted_sum(cosine_similarity(a, b), 32); }, {a, b});
  });
  add_case("select_mean", [] {
    RngStream rng(17);
    auto x = random_param({3, 3}, rng);
    static const std::vector<std::size_t> idx = {0, 4, 4, 8, 2};
    return check_gradients([=] { return select_mean(x, idx); }, {x});
  });
  add_case("maximum", [] {
    RngStream rng(18);
    auto a = random_param({3}, rng);
    return check_gradients(
        [=] {
          const std::vector<Tensor> s = {sum(a), mean(mul(a, a)), neg(sum(a))};
          return maximum(s);
        },
        {a});
  });
  add_case("hinge", [] {
    auto pos = Tensor::parameter({}, {0.3}), neg_ = Tensor::parameter({}, {0.25});
    return check_gradients([=] { return hinge(pos, neg_, 0.2); }, {pos, neg_});
  });
  add_case("tk / neg_tk (row-column maxima)", [] {
    RngStream rng(19);
    auto m = random_param({3, 4}, rng);
    return check_gradients(
        [=] { return add(scale(tk(m, 3), 1.3), neg_tk(m, 2)); }, {m});
  });
  add_case("tk / neg_tk (global top entries)", [] {
    RngStream rng(20);
    auto m = random_param({3, 4}, rng);
    return check_gradients(
        [=] {
          return add(tk(m, 3, EdgeSelection::kGlobalTopEntries),
                     scale(neg_tk(m, 2, EdgeSelection::kGlobalTopEntries), 0.5));
        },
        {m});
  });
  add_case("multihead_attention", [] {
    RngStream rng(21);
    auto p = make_attention(4, rng);
    for (Tensor* b : {&p.b_query, &p.b_key, &p.b_value, &p.b_out}) {
      for (double& x : b->mutable_data()) x = 0.1 * rng.normal();
    }
    auto q = random_param({3, 4}, rng), kv = random_param({3, 4}, rng);
    std::vector<Tensor> inputs = {q, kv, p.w_query, p.b_query, p.w_key, p.b_key,
                                  p.w_value, p.b_value, p.w_out, p.b_out};
    return check_gradients([=] { return weighted_sum(multihead_attention(q, kv, kv, p, 2), 33); },
                           inputs);
  });
  add_case("multihead_attention masked", [] {
    RngStream rng(22);
    auto p = make_attention(4, rng);
    auto x = random_param({3, 4}, rng);
    static const std::vector<std::uint8_t> keep = {1, 1, 0, 1, 1, 0, 1, 1, 0};
    return check_gradients(
        [=] { return weighted_sum(multihead_attention(x, x, x, p, 2, keep), 34); },
        {x, p.w_query, p.w_key, p.w_value, p.w_out});
  });
  add_case("transformer_layer", [] {
    RngStream rng(23);
    auto p = make_transformer_layer(4, rng);
    visit(p, "layer", [&](const std::string&, Tensor& t) {
      for (double& v : t.mutable_data()) v += 0.1 * rng.normal();
    });
    auto x = random_param({3, 4}, rng);
    std::vector<Tensor> inputs = {x};
    visit(p, "layer", [&](const std::string&, Tensor& t) { inputs.push_back(t); });
    return check_gradients([=] { return weighted_sum(transformer_layer(x, p, 2), 35); }, inputs);
  });
  add_case("encode_sentence wrt word_embed", [] {
    const auto config = tiny_model_config();
    const auto params = tiny_model(config, 24);
    const Sentence tokens = {3, 17, 3, 42};
    return check_gradients(
        [=] { return weighted_sum(encode_sentence(tokens, params, config), 36); },
        {params.word_embed, params.pos_embed});
  });
  add_case("encode_image wrt w_obj", [] {
    const auto config = tiny_model_config();
    const auto params = tiny_model(config, 25);
    RngStream rng(26);
    const Document doc = tiny_document(config, 1, 1, rng);
    const ImageRecord image = doc.images[0];
    return check_gradients([=] { return weighted_sum(encode_image(image, params, config), 37); },
                           {params.w_obj, params.b_obj, params.seg_embed, params.word_embed});
  });
  add_case("total loss, tiny model, 2 documents", [] {
    const auto config = tiny_model_config();
    const auto params = tiny_model(config, 27);
    RngStream rng(28);
    const std::vector<Document> docs = {tiny_document(config, 3, 4, rng),
                                        tiny_document(config, 4, 3, rng)};
    ObjectiveConfig objective;
    objective.alpha = 2.0;  // keeps every hinge on its active branch
    return check_gradients(
        [=] {
          std::vector<DocumentEncoding> batch;
          for (const auto& d : docs) batch.push_back(encode_document(d, params, config));
          RngStream dropout(29);
          return total_loss(batch, objective, dropout).mean_total;
        },
        all_params(params));
  });
  return cases;
}

}  // namespace docmatch::testing

#endif  // DOCMATCH_TESTS_GRAD_CASES_H_
