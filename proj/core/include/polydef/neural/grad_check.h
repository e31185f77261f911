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

#ifndef POLYDEF_NEURAL_GRAD_CHECK_H_
#define POLYDEF_NEURAL_GRAD_CHECK_H_

#include <functional>
#include <string>

#include "polydef/neural/graph.h"
#include "polydef/neural/tensor.h"

namespace polydef::neural {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<param>[<index>]"
  std::size_t checked = 0;
};

// |a - n| / max(|a|, |n|, 1e-6)
double RelativeError(double analytic, double numeric);

using LossBuilder = std::function<Var(Graph<double>&)>;

// Compares reverse-mode gradients of `loss` against central differences
// (f(x + eps) - f(x - eps)) / 2 eps for every trainable parameter value in
// `store`. `loss` must be a pure function of the parameter values: any
// sampling noise or dropout mask has to be frozen (e.g. reseeded) inside it.
// When `stride` > 1 only every stride-th value of each parameter is probed.
GradCheckResult GradCheck(ParamStore<double>& store, const LossBuilder& loss,
                          bool training = false, double eps = 1e-5, std::size_t stride = 1);

}  // namespace polydef::neural

#endif  // POLYDEF_NEURAL_GRAD_CHECK_H_
