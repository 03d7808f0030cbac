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
#include <iosfwd>
#include <string>
#include <vector>

#include "tvr/gradcheck.hpp"

namespace tvr {

inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr double kGradCheckStep = 1e-5;

struct GradCheckEntry {
  std::string name;
  ad::GradCheckResult result;
  bool passed() const { return result.passed(kGradCheckTolerance); }
};

/// Finite-difference checks of every primitive and every composite block
/// (encoder layer, difference tokens, temporal encoder variants, alignment
/// paths, losses, a full model batch) at toy sizes: m <= 4, d <= 8, K <= 3.
std::vector<GradCheckEntry> run_gradient_suite(std::uint64_t seed);

void write_gradcheck_table(std::ostream& os, const std::vector<GradCheckEntry>& entries);

}  // namespace tvr
