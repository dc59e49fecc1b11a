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

#ifndef DOCMATCH_OPS_H_
#define DOCMATCH_OPS_H_

#include <cstdint>
#include <span>
#include <vector>

#include "docmatch/tensor.h"

namespace docmatch {

// Differentiable primitives. Unless stated otherwise an op treats its input
// as a matrix (rows x cols, cols = last axis) and throws DimensionError on
// mismatched shapes, naming both.
//
// Non-differentiable points take the left branch: relu'(0) = 0, max ties
// pick the first maximal input.

Tensor matmul(const Tensor& a, const Tensor& b);  // [m,k] x [k,n]
Tensor transpose(const Tensor& a);                // [m,n] -> [n,m]
// x [r,in] . W^T + b with W [out,in], b [out].
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

Tensor add(const Tensor& a, const Tensor& b);  // same shape
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double factor);
Tensor add_scalar(const Tensor& a, double value);
Tensor neg(const Tensor& a);
// Adds a [cols] vector to every row of x.
Tensor add_row(const Tensor& x, const Tensor& row);
Tensor relu(const Tensor& a);

// Per-row normalization over the last axis followed by gain/bias.
// Throws DimensionError when the last axis is empty or gain/bias widths differ.
Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                 double eps = 1e-12);

// Row-wise softmax over the last axis. `keep` (optional, one byte per
// element, nonzero = attend) zeroes masked entries exactly. A row with no
// kept entry throws ConfigError.
Tensor softmax(const Tensor& x, std::span<const std::uint8_t> keep = {});

Tensor sum(const Tensor& a);        // -> scalar
Tensor mean(const Tensor& a);       // -> scalar
Tensor mean_rows(const Tensor& a);  // [r,c] -> [c]

// Rows of `table` [n,c] at `ids` -> [ids.size(), c].
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
Tensor select_rows(const Tensor& x, std::span<const std::size_t> ids);
Tensor select_cols(const Tensor& x, std::span<const std::size_t> ids);
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count);
Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count);
Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
// [c] vectors (or scalars) -> [n,c] (or [n]).
Tensor stack(std::span<const Tensor> parts);

// Divides each row by its L2 norm. A zero row throws NumericError.
Tensor normalize_rows(const Tensor& x);
// Cosine similarity of every row of a [n,d] with every row of b [m,d].
Tensor cosine_similarity(const Tensor& a, const Tensor& b);

// Mean of x's elements at the given flat indices, counted with multiplicity.
Tensor select_mean(const Tensor& x, std::span<const std::size_t> flat_indices);

// Largest of several scalars; the gradient goes to the first maximum.
Tensor maximum(std::span<const Tensor> scalars);

}  // namespace docmatch

#endif  // DOCMATCH_OPS_H_
