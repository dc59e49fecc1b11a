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

#ifndef DOCMATCH_LAYERS_H_
#define DOCMATCH_LAYERS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "docmatch/rng.h"
#include "docmatch/tensor.h"

namespace docmatch {

struct LayerNormParams {
  Tensor gain;  // [d]
  Tensor bias;  // [d]
};

struct AttentionParams {
  Tensor w_query, b_query;
  Tensor w_key, b_key;
  Tensor w_value, b_value;
  Tensor w_out, b_out;
};

// Post-LN encoder layer:
//   x = LN1(x + MHA(x));  x = LN2(x + W2 relu(W1 x + b1) + b2),
// with a feed-forward hidden width of 4d.
struct TransformerLayerParams {
  AttentionParams attention;
  LayerNormParams norm1;
  Tensor w_ff1, b_ff1;  // [4d, d], [4d]
  Tensor w_ff2, b_ff2;  // [d, 4d], [d]
  LayerNormParams norm2;
};

LayerNormParams make_layernorm(std::size_t width);
// Weights ~ Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
AttentionParams make_attention(std::size_t width, RngStream& rng);
TransformerLayerParams make_transformer_layer(std::size_t width, RngStream& rng);
// Scaled-uniform [out, in] weight matrix as above.
Tensor make_linear_weight(std::size_t out, std::size_t in, RngStream& rng);

Tensor layernorm(const Tensor& x, const LayerNormParams& p);

// Scaled dot-product attention with `heads` heads over [L, d] inputs.
// Each head sees d/heads columns of the projected query/key/value; scores
// are scaled by 1/sqrt(d/heads). `keep` is an optional [L_q, L_k] byte mask
// (nonzero = attend). Throws ConfigError if heads does not divide d.
Tensor multihead_attention(const Tensor& query, const Tensor& key, const Tensor& value,
                           const AttentionParams& p, std::size_t heads,
                           std::span<const std::uint8_t> keep = {});

Tensor transformer_layer(const Tensor& x, const TransformerLayerParams& p, std::size_t heads,
                         std::span<const std::uint8_t> keep = {});

// Visits every parameter tensor with a stable dotted name.
using ParamVisitor = std::function<void(const std::string&, Tensor&)>;
void visit(LayerNormParams& p, const std::string& prefix, const ParamVisitor& fn);
void visit(AttentionParams& p, const std::string& prefix, const ParamVisitor& fn);
void visit(TransformerLayerParams& p, const std::string& prefix, const ParamVisitor& fn);

}  // namespace docmatch

#endif  // DOCMATCH_LAYERS_H_
