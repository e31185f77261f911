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

#ifndef POLYDEF_DIAGNOSTICS_H_
#define POLYDEF_DIAGNOSTICS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "polydef/neural/grad_check.h"

namespace polydef {

struct GradCheckReport {
  std::string component;
  neural::GradCheckResult result;
};

// Finite-difference checks in double precision over small random instances
// of each differentiable block: lstm, gated_update, char_cnn, encoder,
// gumbel_softmax (frozen noise) and a full definition-model step.
std::vector<GradCheckReport> RunGradientSuite(std::uint64_t seed, double eps = 1e-5);

}  // namespace polydef

#endif  // POLYDEF_DIAGNOSTICS_H_
