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

#ifndef DOCMATCH_TESTS_TEST_SUPPORT_H_
#define DOCMATCH_TESTS_TEST_SUPPORT_H_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "docmatch/rng.h"
#include "docmatch/tensor.h"

namespace docmatch::testing {

inline Tensor random_param(const Shape& shape, RngStream& rng, double scale = 1.0) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) x = scale * rng.normal();
  return Tensor::parameter(shape, std::move(v));
}

// Values bounded away from zero, for ops with a kink there.
inline Tensor random_param_away_from_zero(const Shape& shape, RngStream& rng, double gap = 0.05) {
  std::vector<double> v(shape_numel(shape));
  for (double& x : v) {
    const double u = gap + rng.uniform();
    x = rng.uniform() < 0.5 ? -u : u;
  }
  return Tensor::parameter(shape, std::move(v));
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::string worst;  // "input[i] element j"
  std::size_t checked = 0;
};

// Compares reverse-mode gradients of the scalar `f()` against central
// differences with the given step. Relative error is
// |analytic - numeric| / max(|analytic|, |numeric|, floor).
inline GradCheck check_gradients(const std::function<Tensor()>& f, std::vector<Tensor> inputs,
                                 double step = 1e-5, double floor = 1e-6) {
  for (auto& t : inputs) t.zero_grad();
  f().backward();
  std::vector<std::vector<double>> analytic;
  for (auto& t : inputs) {
    auto g = t.grad();
    analytic.emplace_back(t.numel(), 0.0);
    std::copy(g.begin(), g.end(), analytic.back().begin());
  }
  GradCheck result;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    auto data = inputs[i].mutable_data();
    for (std::size_t j = 0; j < data.size(); ++j) {
      const double saved = data[j];
      double plus = 0.0, minus = 0.0;
      {
        NoGradGuard guard;
        data[j] = saved + step;
        plus = f().item();
        data[j] = saved - step;
        minus = f().item();
      }
      data[j] = saved;
      const double numeric = (plus - minus) / (2.0 * step);
      const double a = analytic[i][j];
      const double rel =
          std::fabs(a - numeric) / std::max({std::fabs(a), std::fabs(numeric), floor});
      ++result.checked;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = "input[" + std::to_string(i) + "] element " + std::to_string(j) +
                       " analytic " + std::to_string(a) + " numeric " + std::to_string(numeric);
      }
    }
  }
  for (auto& t : inputs) t.zero_grad();
  return result;
}

}  // namespace docmatch::testing

#endif  // DOCMATCH_TESTS_TEST_SUPPORT_H_
