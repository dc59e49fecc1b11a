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

#include "docmatch/layers.h"

#include <cmath>

#include "docmatch/errors.h"
#include "docmatch/ops.h"

namespace docmatch {

namespace {

Tensor zeros_param(std::size_t n) { return Tensor::parameter({n}, std::vector<double>(n, 0.0)); }

}  // namespace

Tensor make_linear_weight(std::size_t out, std::size_t in, RngStream& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::vector<double> w(out * in);
  for (double& v : w) v = rng.uniform(-bound, bound);
  return Tensor::parameter({out, in}, std::move(w));
}

LayerNormParams make_layernorm(std::size_t width) {
  return {Tensor::parameter({width}, std::vector<double>(width, 1.0)), zeros_param(width)};
}

AttentionParams make_attention(std::size_t width, RngStream& rng) {
  AttentionParams p;
  p.w_query = make_linear_weight(width, width, rng);
  p.b_query = zeros_param(width);
  p.w_key = make_linear_weight(width, width, rng);
  p.b_key = zeros_param(width);
  p.w_value = make_linear_weight(width, width, rng);
  p.b_value = zeros_param(width);
  p.w_out = make_linear_weight(width, width, rng);
  p.b_out = zeros_param(width);
  return p;
}

TransformerLayerParams make_transformer_layer(std::size_t width, RngStream& rng) {
  TransformerLayerParams p;
  p.attention = make_attention(width, rng);
  p.norm1 = make_layernorm(width);
  p.w_ff1 = make_linear_weight(4 * width, width, rng);
  p.b_ff1 = zeros_param(4 * width);
  p.w_ff2 = make_linear_weight(width, 4 * width, rng);
  p.b_ff2 = zeros_param(width);
  p.norm2 = make_layernorm(width);
  return p;
}

Tensor layernorm(const Tensor& x, const LayerNormParams& p) {
  return layernorm(x, p.gain, p.bias);
}

Tensor multihead_attention(const Tensor& query, const Tensor& key, const Tensor& value,
                           const AttentionParams& p, std::size_t heads,
                           std::span<const std::uint8_t> keep) {
  const std::size_t d = query.cols();
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("attention width " + std::to_string(d) + " is not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (key.rows() != value.rows()) {
    throw DimensionError("attention: key " + shape_string(key.shape()) + " and value " +
                         shape_string(value.shape()) + " lengths differ");
  }
  if (!keep.empty() && keep.size() != query.rows() * key.rows()) {
    throw DimensionError("attention: mask size " + std::to_string(keep.size()) +
                         " does not match " + std::to_string(query.rows()) + "x" +
                         std::to_string(key.rows()));
  }
  const std::size_t head_dim = d / heads;
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(head_dim));

  const Tensor q = linear(query, p.w_query, p.b_query);
  const Tensor k = linear(key, p.w_key, p.b_key);
  const Tensor v = linear(value, p.w_value, p.b_value);

  std::vector<Tensor> head_outputs;
  head_outputs.reserve(heads);
  for (std::size_t h = 0; h < heads; ++h) {
    const Tensor qh = slice_cols(q, h * head_dim, head_dim);
    const Tensor kh = slice_cols(k, h * head_dim, head_dim);
    const Tensor vh = slice_cols(v, h * head_dim, head_dim);
    const Tensor scores = scale(matmul(qh, transpose(kh)), scale_factor);
    head_outputs.push_back(matmul(softmax(scores, keep), vh));
  }
  const Tensor merged = heads == 1 ? head_outputs[0] : concat_cols(head_outputs);
  return linear(merged, p.w_out, p.b_out);
}

Tensor transformer_layer(const Tensor& x, const TransformerLayerParams& p, std::size_t heads,
                         std::span<const std::uint8_t> keep) {
  const Tensor attended = multihead_attention(x, x, x, p.attention, heads, keep);
  const Tensor h = layernorm(add(x, attended), p.norm1);
  const Tensor ff = linear(relu(linear(h, p.w_ff1, p.b_ff1)), p.w_ff2, p.b_ff2);
  return layernorm(add(h, ff), p.norm2);
}

void visit(LayerNormParams& p, const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".gain", p.gain);
  fn(prefix + ".bias", p.bias);
}

void visit(AttentionParams& p, const std::string& prefix, const ParamVisitor& fn) {
  fn(prefix + ".w_query", p.w_query);
  fn(prefix + ".b_query", p.b_query);
  fn(prefix + ".w_key", p.w_key);
  fn(prefix + ".b_key", p.b_key);
  fn(prefix + ".w_value", p.w_value);
  fn(prefix + ".b_value", p.b_value);
  fn(prefix + ".w_out", p.w_out);
  fn(prefix + ".b_out", p.b_out);
}

void visit(TransformerLayerParams& p, const std::string& prefix, const ParamVisitor& fn) {
  visit(p.attention, prefix + ".attention", fn);
  visit(p.norm1, prefix + ".norm1", fn);
  fn(prefix + ".w_ff1", p.w_ff1);
  fn(prefix + ".b_ff1", p.b_ff1);
  fn(prefix + ".w_ff2", p.w_ff2);
  fn(prefix + ".b_ff2", p.b_ff2);
  visit(p.norm2, prefix + ".norm2", fn);
}

}  // namespace docmatch
