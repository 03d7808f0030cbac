// Copyright 2026 The tvret Authors. All Rights Reserved.
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

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tvr/autodiff.hpp"

namespace tvr::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coordinates = 0;
  /// Coordinate with the worst error, formatted as "input[k](r,c)" or "name(r,c)".
  std::string worst;

  bool passed(double tol) const { return max_rel_error < tol; }
};

using InputFn = std::function<Var(Tape&, const std::vector<Var>&)>;
using ParamFn = std::function<Var(Tape&)>;

/// Central finite differences against reverse-mode gradients of
/// sum(R .* f(inputs)), where R is a fixed pseudo-random seed tensor.
/// Error per coordinate is |analytic - numeric| / max(1, |analytic|).
GradCheckResult check_gradients(const InputFn& f, const std::vector<Matrix>& inputs, double h = 1e-5,
                                std::uint64_t seed = 1);

/// Same check with respect to every coordinate of the listed parameters.
GradCheckResult check_parameter_gradients(const ParamFn& f, const std::vector<Parameter*>& params, double h = 1e-5,
                                          std::uint64_t seed = 1);

}  // namespace tvr::ad
