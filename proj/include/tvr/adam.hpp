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

#include <cmath>
#include <span>
#include <vector>

#include "tvr/autodiff.hpp"

namespace tvr {

struct AdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-8;
};

/// One bias-corrected Adam update of `param` at 1-based step `t`.
template <typename P, typename G, typename M, typename V>
void adam_update(Eigen::MatrixBase<P>& param, const Eigen::MatrixBase<G>& grad, Eigen::MatrixBase<M>& m,
                 Eigen::MatrixBase<V>& v, long t, const AdamOptions& opt) {
  if (param.rows() != grad.rows() || param.cols() != grad.cols() || m.rows() != param.rows() ||
      m.cols() != param.cols() || v.rows() != param.rows() || v.cols() != param.cols()) {
    throw ShapeError("adam_update", shape_string(param.rows(), param.cols()) + " parameter with " +
                                        shape_string(grad.rows(), grad.cols()) + " gradient");
  }
  m = opt.beta1 * m + (1.0 - opt.beta1) * grad;
  v = opt.beta2 * v + (1.0 - opt.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(t));
  param.array() -= opt.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + opt.eps);
}

/// Moment buffers for a fixed list of parameters.
class Adam {
 public:
  Adam() = default;
  Adam(std::span<ad::Parameter* const> params, AdamOptions options);

  /// Applies one update from each parameter's grad buffer.
  void step(std::span<ad::Parameter* const> params);

  long steps() const { return step_; }
  const AdamOptions& options() const { return options_; }
  std::vector<Matrix>& first_moments() { return m_; }
  std::vector<Matrix>& second_moments() { return v_; }
  void set_steps(long s) { step_ = s; }

 private:
  AdamOptions options_;
  std::vector<Matrix> m_, v_;
  long step_ = 0;
};

}  // namespace tvr
