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

#include "docmatch/ops.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "docmatch/errors.h"

namespace docmatch {

namespace {

using detail::Node;

Tensor make_op(Shape shape, std::vector<double> data,
               std::initializer_list<const Tensor*> inputs,
               std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  if (grad_enabled()) {
    bool any = false;
    for (const Tensor* in : inputs) any = any || in->requires_grad();
    if (any) {
      node->requires_grad = true;
      node->parents.reserve(inputs.size());
      for (const Tensor* in : inputs) node->parents.push_back(in->node());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

// Same as make_op for a variable number of inputs.
Tensor make_op_n(Shape shape, std::vector<double> data, std::span<const Tensor> inputs,
                 std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  if (grad_enabled()) {
    bool any = std::any_of(inputs.begin(), inputs.end(),
                           [](const Tensor& t) { return t.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      for (const Tensor& in : inputs) node->parents.push_back(in.node());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

// Gradient buffer of parent i, or nullptr when it does not need one.
double* parent_grad(Node& self, std::size_t i) {
  Node& p = *self.parents[i];
  if (!p.requires_grad) return nullptr;
  return p.grad_buffer().data();
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " +
                       shape_string(a.shape()) + " and " + shape_string(b.shape()));
}

void require_same(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() == b.shape()) return;
  if (a.numel() == 1 && b.numel() == 1) return;
  shape_mismatch(op, a, b);
}

void require_matrix(const char* op, const Tensor& a) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_string(a.shape()));
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) shape_mismatch("matmul", a, b);
  const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n, 0.0);
  const double* A = a.data().data();
  const double* B = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = A[i * k + p];
      for (std::size_t j = 0; j < n; ++j) out[i * n + j] += aip * B[p * n + j];
    }
  }
  return make_op({m, n}, std::move(out), {&a, &b}, [m, k, n](Node& self) {
    const double* G = self.grad.data();
    const double* A = self.parents[0]->data.data();
    const double* B = self.parents[1]->data.data();
    if (double* dA = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          double s = 0.0;
          for (std::size_t j = 0; j < n; ++j) s += G[i * n + j] * B[p * n + j];
          dA[i * k + p] += s;
        }
    }
    if (double* dB = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t p = 0; p < k; ++p) {
          const double aip = A[i * k + p];
          for (std::size_t j = 0; j < n; ++j) dB[p * n + j] += aip * G[i * n + j];
        }
    }
  });
}

Tensor transpose(const Tensor& a) {
  require_matrix("transpose", a);
  const std::size_t m = a.dim(0), n = a.dim(1);
  std::vector<double> out(m * n);
  const auto x = a.data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = x[i * n + j];
  return make_op({n, m}, std::move(out), {&a}, [m, n](Node& self) {
    if (double* d = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) d[i * n + j] += self.grad[j * m + i];
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  require_matrix("linear", weight);
  const std::size_t out_dim = weight.dim(0), in_dim = weight.dim(1);
  if (x.cols() != in_dim || x.rank() == 0 || x.rank() > 2) shape_mismatch("linear", x, weight);
  if (bias.rank() != 1 || bias.dim(0) != out_dim) shape_mismatch("linear", weight, bias);
  const std::size_t r = x.rows();
  std::vector<double> out(r * out_dim);
  const double* X = x.data().data();
  const double* W = weight.data().data();
  const double* b = bias.data().data();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t o = 0; o < out_dim; ++o) {
      double s = b[o];
      for (std::size_t p = 0; p < in_dim; ++p) s += X[i * in_dim + p] * W[o * in_dim + p];
      out[i * out_dim + o] = s;
    }
  Shape shape = x.rank() == 1 ? Shape{out_dim} : Shape{r, out_dim};
  return make_op(std::move(shape), std::move(out), {&x, &weight, &bias},
                 [r, in_dim, out_dim](Node& self) {
                   const double* G = self.grad.data();
                   const double* X = self.parents[0]->data.data();
                   const double* W = self.parents[1]->data.data();
                   if (double* dX = parent_grad(self, 0)) {
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t o = 0; o < out_dim; ++o) {
                         const double g = G[i * out_dim + o];
                         for (std::size_t p = 0; p < in_dim; ++p) dX[i * in_dim + p] += g * W[o * in_dim + p];
                       }
                   }
                   if (double* dW = parent_grad(self, 1)) {
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t o = 0; o < out_dim; ++o) {
                         const double g = G[i * out_dim + o];
                         for (std::size_t p = 0; p < in_dim; ++p) dW[o * in_dim + p] += g * X[i * in_dim + p];
                       }
                   }
                   if (double* db = parent_grad(self, 2)) {
                     for (std::size_t i = 0; i < r; ++i)
                       for (std::size_t o = 0; o < out_dim; ++o) db[o] += G[i * out_dim + o];
                   }
                 });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same("add", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  return make_op(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    for (std::size_t p = 0; p < 2; ++p)
      if (double* d = parent_grad(self, p))
        for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same("sub", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  return make_op(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    if (double* d = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
    if (double* d = parent_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] -= self.grad[i];
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same("mul", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  return make_op(a.shape(), std::move(out), {&a, &b}, [](Node& self) {
    const auto& x = self.parents[0]->data;
    const auto& y = self.parents[1]->data;
    if (double* d = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * y[i];
    if (double* d = parent_grad(self, 1))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * x[i];
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * factor;
  return make_op(a.shape(), std::move(out), {&a}, [factor](Node& self) {
    if (double* d = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i] * factor;
  });
}

Tensor add_scalar(const Tensor& a, double value) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + value;
  return make_op(a.shape(), std::move(out), {&a}, [](Node& self) {
    if (double* d = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
  });
}

Tensor neg(const Tensor& a) { return scale(a, -1.0); }

Tensor add_row(const Tensor& x, const Tensor& row) {
  if (row.rank() != 1 || row.dim(0) != x.cols()) shape_mismatch("add_row", x, row);
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x.at(i * c + j) + row.at(j);
  return make_op(x.shape(), std::move(out), {&x, &row}, [r, c](Node& self) {
    if (double* d = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
    if (double* d = parent_grad(self, 1))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) d[j] += self.grad[i * c + j];
  });
}

Tensor relu(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) > 0.0 ? a.at(i) : 0.0;
  return make_op(a.shape(), std::move(out), {&a}, [](Node& self) {
    const auto& x = self.parents[0]->data;
    if (double* d = parent_grad(self, 0))
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        if (x[i] > 0.0) d[i] += self.grad[i];
  });
}

Tensor layernorm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const std::size_t c = x.cols();
  if (x.rank() == 0 || c == 0) {
    throw DimensionError("layernorm: empty normalization axis in " + shape_string(x.shape()));
  }
  if (gain.rank() != 1 || gain.dim(0) != c) shape_mismatch("layernorm", x, gain);
  if (bias.rank() != 1 || bias.dim(0) != c) shape_mismatch("layernorm", x, bias);
  const std::size_t r = x.rows();
  std::vector<double> xhat(x.numel());
  std::vector<double> inv_std(r);
  std::vector<double> out(x.numel());
  const auto in = x.data();
  for (std::size_t i = 0; i < r; ++i) {
    const double* row = in.data() + i * c;
    double mu = 0.0;
    for (std::size_t j = 0; j < c; ++j) mu += row[j];
    mu /= static_cast<double>(c);
    double var = 0.0;
    for (std::size_t j = 0; j < c; ++j) var += (row[j] - mu) * (row[j] - mu);
    var /= static_cast<double>(c);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < c; ++j) {
      xhat[i * c + j] = (row[j] - mu) * inv_std[i];
      out[i * c + j] = gain.at(j) * xhat[i * c + j] + bias.at(j);
    }
  }
  return make_op(x.shape(), std::move(out), {&x, &gain, &bias},
                 [r, c, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node& self) {
                   const double* G = self.grad.data();
                   const auto& g = self.parents[1]->data;
                   double* dx = parent_grad(self, 0);
                   double* dgain = parent_grad(self, 1);
                   double* dbias = parent_grad(self, 2);
                   const double n = static_cast<double>(c);
                   for (std::size_t i = 0; i < r; ++i) {
                     const double* gr = G + i * c;
                     const double* xh = xhat.data() + i * c;
                     if (dgain)
                       for (std::size_t j = 0; j < c; ++j) dgain[j] += gr[j] * xh[j];
                     if (dbias)
                       for (std::size_t j = 0; j < c; ++j) dbias[j] += gr[j];
                     if (!dx) continue;
                     double sum_d = 0.0, sum_dx = 0.0;
                     for (std::size_t j = 0; j < c; ++j) {
                       const double d = gr[j] * g[j];
                       sum_d += d;
                       sum_dx += d * xh[j];
                     }
                     for (std::size_t j = 0; j < c; ++j) {
                       const double d = gr[j] * g[j];
                       dx[i * c + j] += inv_std[i] / n * (n * d - sum_d - xh[j] * sum_dx);
                     }
                   }
                 });
}

Tensor softmax(const Tensor& x, std::span<const std::uint8_t> keep) {
  if (!keep.empty() && keep.size() != x.numel()) {
    throw DimensionError("softmax: mask has " + std::to_string(keep.size()) +
                         " entries, input " + shape_string(x.shape()));
  }
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> out(x.numel(), 0.0);
  for (std::size_t i = 0; i < r; ++i) {
    double mx = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t j = 0; j < c; ++j) {
      if (!keep.empty() && !keep[i * c + j]) continue;
      any = true;
      mx = std::max(mx, x.at(i * c + j));
    }
    if (!any) {
      throw ConfigError("softmax: row " + std::to_string(i) + " is fully masked");
    }
    double total = 0.0;
    for (std::size_t j = 0; j < c; ++j) {
      if (!keep.empty() && !keep[i * c + j]) continue;
      out[i * c + j] = std::exp(x.at(i * c + j) - mx);
      total += out[i * c + j];
    }
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] /= total;
  }
  return make_op(x.shape(), out, {&x}, [r, c](Node& self) {
    double* d = parent_grad(self, 0);
    if (!d) return;
    const auto& s = self.data;
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.grad[i * c + j] * s[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        d[i * c + j] += s[i * c + j] * (self.grad[i * c + j] - dot);
    }
  });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  return make_op({}, {s}, {&a}, [](Node& self) {
    if (double* d = parent_grad(self, 0)) {
      const std::size_t n = self.parents[0]->data.size();
      for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[0];
    }
  });
}

Tensor mean(const Tensor& a) {
  if (a.numel() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor mean_rows(const Tensor& a) {
  const std::size_t r = a.rows(), c = a.cols();
  if (r == 0) throw DimensionError("mean_rows: no rows in " + shape_string(a.shape()));
  std::vector<double> out(c, 0.0);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[j] += a.at(i * c + j);
  const double inv = 1.0 / static_cast<double>(r);
  for (double& v : out) v *= inv;
  return make_op({c}, std::move(out), {&a}, [r, c, inv](Node& self) {
    if (double* d = parent_grad(self, 0))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) d[i * c + j] += self.grad[j] * inv;
  });
}

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
  return select_rows(table, ids);
}

Tensor select_rows(const Tensor& x, std::span<const std::size_t> ids) {
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  std::vector<double> out(idx.size() * c);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] >= r) {
      throw DimensionError("select_rows: row " + std::to_string(idx[k]) +
                           " out of range for " + shape_string(x.shape()));
    }
    std::copy_n(x.data().begin() + idx[k] * c, c, out.begin() + k * c);
  }
  const std::size_t n = idx.size();
  return make_op({n, c}, std::move(out), {&x}, [c, idx = std::move(idx)](Node& self) {
    if (double* d = parent_grad(self, 0))
      for (std::size_t k = 0; k < idx.size(); ++k)
        for (std::size_t j = 0; j < c; ++j) d[idx[k] * c + j] += self.grad[k * c + j];
  });
}

Tensor select_cols(const Tensor& x, std::span<const std::size_t> ids) {
  require_matrix("select_cols", x);
  const std::size_t r = x.dim(0), c = x.dim(1);
  std::vector<std::size_t> idx(ids.begin(), ids.end());
  for (auto j : idx) {
    if (j >= c) {
      throw DimensionError("select_cols: column " + std::to_string(j) +
                           " out of range for " + shape_string(x.shape()));
    }
  }
  const std::size_t n = idx.size();
  std::vector<double> out(r * n);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t k = 0; k < n; ++k) out[i * n + k] = x.at(i * c + idx[k]);
  return make_op({r, n}, std::move(out), {&x}, [r, c, n, idx = std::move(idx)](Node& self) {
    if (double* d = parent_grad(self, 0))
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t k = 0; k < n; ++k) d[i * c + idx[k]] += self.grad[i * n + k];
  });
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t count) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), begin);
  return select_cols(x, idx);
}

Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t count) {
  std::vector<std::size_t> idx(count);
  std::iota(idx.begin(), idx.end(), begin);
  return select_rows(x, idx);
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    require_matrix("concat_cols", p);
    if (p.rows() != r) shape_mismatch("concat_cols", parts[0], p);
    widths.push_back(p.cols());
    total += p.cols();
  }
  std::vector<double> out(r * total);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < r; ++i)
      std::copy_n(p.data().begin() + i * w, w, out.begin() + i * total + offset);
    offset += w;
  }
  return make_op_n({r, total}, std::move(out), parts,
                   [r, total, widths = std::move(widths)](Node& self) {
                     std::size_t offset = 0;
                     for (std::size_t p = 0; p < widths.size(); ++p) {
                       const std::size_t w = widths[p];
                       if (double* d = parent_grad(self, p))
                         for (std::size_t i = 0; i < r; ++i)
                           for (std::size_t j = 0; j < w; ++j)
                             d[i * w + j] += self.grad[i * total + offset + j];
                       offset += w;
                     }
                   });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t c = parts[0].cols();
  std::size_t r = 0;
  std::vector<double> out;
  for (const auto& p : parts) {
    if (p.cols() != c || p.rank() == 0) shape_mismatch("concat_rows", parts[0], p);
    r += p.rows();
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make_op_n({r, c}, std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      const std::size_t n = self.parents[p]->data.size();
      if (double* d = parent_grad(self, p))
        for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[offset + i];
      offset += n;
    }
  });
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("stack: no inputs");
  Shape shape{parts.size()};
  const Shape& inner = parts[0].shape();
  shape.insert(shape.end(), inner.begin(), inner.end());
  std::vector<double> out;
  out.reserve(parts.size() * parts[0].numel());
  for (const auto& p : parts) {
    if (p.shape() != inner) shape_mismatch("stack", parts[0], p);
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  return make_op_n(std::move(shape), std::move(out), parts, [](Node& self) {
    std::size_t offset = 0;
    for (std::size_t p = 0; p < self.parents.size(); ++p) {
      const std::size_t n = self.parents[p]->data.size();
      if (double* d = parent_grad(self, p))
        for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[offset + i];
      offset += n;
    }
  });
}

namespace {

std::vector<double> row_norms(const Tensor& x, const char* op) {
  const std::size_t r = x.rows(), c = x.cols();
  std::vector<double> norms(r);
  for (std::size_t i = 0; i < r; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += x.at(i * c + j) * x.at(i * c + j);
    norms[i] = std::sqrt(s);
    if (!(norms[i] > 0.0)) {
      throw NumericError(std::string(op) + ": degenerate representation (row " +
                         std::to_string(i) + " has zero norm)");
    }
  }
  return norms;
}

}  // namespace

Tensor normalize_rows(const Tensor& x) {
  const std::size_t r = x.rows(), c = x.cols();
  auto norms = row_norms(x, "normalize_rows");
  std::vector<double> out(x.numel());
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = x.at(i * c + j) / norms[i];
  return make_op(x.shape(), std::move(out), {&x}, [r, c, norms = std::move(norms)](Node& self) {
    double* d = parent_grad(self, 0);
    if (!d) return;
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += self.data[i * c + j] * self.grad[i * c + j];
      for (std::size_t j = 0; j < c; ++j)
        d[i * c + j] += (self.grad[i * c + j] - self.data[i * c + j] * dot) / norms[i];
    }
  });
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
  require_matrix("cosine_similarity", a);
  require_matrix("cosine_similarity", b);
  if (a.cols() != b.cols()) shape_mismatch("cosine_similarity", a, b);
  const std::size_t n = a.rows(), m = b.rows(), d = a.cols();
  auto na = row_norms(a, "cosine_similarity");
  auto nb = row_norms(b, "cosine_similarity");
  std::vector<double> out(n * m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < d; ++p) s += a.at(i * d + p) * b.at(j * d + p);
      out[i * m + j] = std::clamp(s / (na[i] * nb[j]), -1.0, 1.0);
    }
  // Clamping only removes rounding overshoot; the gradient is the
  // unclamped cosine gradient.
  return make_op({n, m}, std::move(out), {&a, &b},
                 [n, m, d, na = std::move(na), nb = std::move(nb)](Node& self) {
                   const auto& A = self.parents[0]->data;
                   const auto& B = self.parents[1]->data;
                   double* dA = parent_grad(self, 0);
                   double* dB = parent_grad(self, 1);
                   for (std::size_t i = 0; i < n; ++i)
                     for (std::size_t j = 0; j < m; ++j) {
                       const double g = self.grad[i * m + j];
                       if (g == 0.0) continue;
                       double dot = 0.0;
                       for (std::size_t p = 0; p < d; ++p) dot += A[i * d + p] * B[j * d + p];
                       const double inv = 1.0 / (na[i] * nb[j]);
                       const double cosv = dot * inv;
                       if (dA)
                         for (std::size_t p = 0; p < d; ++p)
                           dA[i * d + p] += g * (B[j * d + p] * inv - cosv * A[i * d + p] / (na[i] * na[i]));
                       if (dB)
                         for (std::size_t p = 0; p < d; ++p)
                           dB[j * d + p] += g * (A[i * d + p] * inv - cosv * B[j * d + p] / (nb[j] * nb[j]));
                     }
                 });
}

Tensor select_mean(const Tensor& x, std::span<const std::size_t> flat_indices) {
  if (flat_indices.empty()) throw DimensionError("select_mean: empty selection");
  std::vector<std::size_t> idx(flat_indices.begin(), flat_indices.end());
  double s = 0.0;
  for (auto i : idx) {
    if (i >= x.numel()) {
      throw DimensionError("select_mean: index " + std::to_string(i) + " out of range for " +
                           shape_string(x.shape()));
    }
    s += x.at(i);
  }
  const double w = 1.0 / static_cast<double>(idx.size());
  return make_op({}, {s * w}, {&x}, [w, idx = std::move(idx)](Node& self) {
    if (double* d = parent_grad(self, 0))
      for (auto i : idx) d[i] += self.grad[0] * w;
  });
}

Tensor maximum(std::span<const Tensor> scalars) {
  if (scalars.empty()) throw DimensionError("maximum: no inputs");
  std::size_t best = 0;
  for (std::size_t i = 0; i < scalars.size(); ++i) {
    if (scalars[i].numel() != 1) {
      throw DimensionError("maximum: expected scalars, got " + shape_string(scalars[i].shape()));
    }
    if (scalars[i].item() > scalars[best].item()) best = i;
  }
  return make_op_n({}, {scalars[best].item()}, scalars, [best](Node& self) {
    if (double* d = parent_grad(self, best)) d[0] += self.grad[0];
  });
}

}  // namespace docmatch
