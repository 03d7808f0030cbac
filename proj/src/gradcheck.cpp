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

#include "tvr/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "tvr/random.hpp"

namespace tvr::ad {
namespace {

double weighted(const Matrix& out, const Matrix& seed) { return out.cwiseProduct(seed).sum(); }

void consider(GradCheckResult& r, double analytic, double numeric, const std::string& where) {
  const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
  ++r.coordinates;
  if (err >= r.max_rel_error) {
    r.max_rel_error = err;
    r.worst = where;
  }
}

std::string coord(const std::string& base, Eigen::Index i, Eigen::Index j) {
  return base + "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

}  // namespace

GradCheckResult check_gradients(const InputFn& f, const std::vector<Matrix>& inputs, double h, std::uint64_t seed) {
  Matrix weights;
  std::vector<Matrix> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& m : inputs) vars.push_back(tape.leaf(m));
    Var out = f(tape, vars);
    Rng rng(seed);
    weights = rng.normal_matrix(out.rows(), out.cols(), 1.0);
    tape.backward(out, weights);
    for (std::size_t k = 0; k < vars.size(); ++k) {
      const Matrix& g = tape.grad(vars[k]);
      analytic.push_back(g.size() == 0 ? Matrix::Zero(inputs[k].rows(), inputs[k].cols()) : g);
    }
  }
  auto evaluate = [&](const std::vector<Matrix>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const Matrix& m : xs) vars.push_back(tape.constant(m));
    return weighted(f(tape, vars).value(), weights);
  };

  GradCheckResult result;
  std::vector<Matrix> probe = inputs;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (Eigen::Index j = 0; j < inputs[k].cols(); ++j) {
      for (Eigen::Index i = 0; i < inputs[k].rows(); ++i) {
        const double x0 = inputs[k](i, j);
        probe[k](i, j) = x0 + h;
        const double up = evaluate(probe);
        probe[k](i, j) = x0 - h;
        const double down = evaluate(probe);
        probe[k](i, j) = x0;
        consider(result, analytic[k](i, j), (up - down) / (2.0 * h), coord("input[" + std::to_string(k) + "]", i, j));
      }
    }
  }
  return result;
}

GradCheckResult check_parameter_gradients(const ParamFn& f, const std::vector<Parameter*>& params, double h,
                                          std::uint64_t seed) {
  for (Parameter* p : params) p->zero_grad();
  Matrix weights;
  {
    Tape tape;
    Var out = f(tape);
    Rng rng(seed);
    weights = rng.normal_matrix(out.rows(), out.cols(), 1.0);
    tape.backward(out, weights);
  }
  auto evaluate = [&] {
    Tape tape;
    return weighted(f(tape).value(), weights);
  };

  GradCheckResult result;
  for (Parameter* p : params) {
    for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) {
        const double x0 = p->value(i, j);
        p->value(i, j) = x0 + h;
        const double up = evaluate();
        p->value(i, j) = x0 - h;
        const double down = evaluate();
        p->value(i, j) = x0;
        consider(result, p->grad(i, j), (up - down) / (2.0 * h), coord(p->name, i, j));
      }
    }
  }
  return result;
}

}  // namespace tvr::ad
