// Copyright 2026 The Polydef Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "polydef/neural/grad_check.h"

#include <algorithm>
#include <cmath>

namespace polydef::neural {

double RelativeError(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult GradCheck(ParamStore<double>& store, const LossBuilder& loss, bool training,
                          double eps, std::size_t stride) {
  auto eval = [&]() {
    Graph<double> g(training);
    return g.scalar(loss(g));
  };

  store.ZeroGrad();
  {
    Graph<double> g(training);
    g.Backward(loss(g));
  }

  GradCheckResult result;
  for (auto& [name, p] : store.params()) {
    if (!p.trainable) continue;
    const std::vector<double> analytic = p.grad.values;
    for (std::size_t i = 0; i < p.value.size(); i += std::max<std::size_t>(stride, 1)) {
      const double saved = p.value.values[i];
      p.value.values[i] = saved + eps;
      const double up = eval();
      p.value.values[i] = saved - eps;
      const double down = eval();
      p.value.values[i] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double err = RelativeError(analytic[i], numeric);
      ++result.checked;
      if (err > result.max_rel_error || result.worst.empty()) {
        if (err >= result.max_rel_error) {
          result.max_rel_error = err;
          result.worst = name + "[" + std::to_string(i) + "]";
        }
      }
    }
  }
  return result;
}

}  // namespace polydef::neural
