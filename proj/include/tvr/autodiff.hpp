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

#include <cstddef>
#include <deque>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tvr {

using Matrix = Eigen::MatrixXd;
using RowVector = Eigen::RowVectorXd;

/// Raised by any primitive whose operand shapes do not conform.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& op, const Matrix& a, const Matrix& b);
  ShapeError(const std::string& op, const std::string& what);
};

std::string shape_string(Eigen::Index rows, Eigen::Index cols);

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.allFinite();
}

namespace ad {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kNormalizeEps = 1e-12;

/// A trainable tensor. The gradient buffer is accumulated into by every tape
/// the parameter is bound to; callers zero it between steps.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;

  Parameter() = default;
  Parameter(std::string n, Matrix v)
      : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

  void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while its tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Wengert list. Nodes are appended in evaluation order, so node i only ever
/// reads nodes j < i and a reverse sweep is a valid topological order.
class Tape {
 public:
  using Adjoint = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf with no gradient tracking.
  Var constant(Matrix value);
  /// Leaf whose gradient is retrievable with grad() after backward().
  Var leaf(Matrix value);
  /// Leaf bound to a parameter; backward() adds into parameter.grad.
  Var param(Parameter& parameter);

  Var record(const char* op, Matrix value, std::vector<std::size_t> inputs, Adjoint adjoint);

  /// Reverse sweep from `output` seeded with `seed` (d(seed . output)/d leaf).
  void backward(Var output, const Matrix& seed);
  /// Shorthand for a 1x1 output seeded with 1.
  void backward(Var output);

  const Matrix& value(std::size_t id) const { return nodes_.at(id).value; }
  const Matrix& grad(Var v) const;
  /// Adds `g` into the gradient of node `id` if that node tracks gradients.
  void accumulate(std::size_t id, const Matrix& g);
  const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }
  const char* op(std::size_t id) const { return nodes_.at(id).op; }

  std::size_t size() const { return nodes_.size(); }
  bool all_values_finite() const;

  /// Number of L2 normalizations whose input norm fell under the epsilon guard.
  std::size_t guarded_normalizations() const { return guarded_; }
  void note_guarded() { ++guarded_; }

 private:
  struct Node {
    const char* op = "";
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    Adjoint adjoint;
    Parameter* parameter = nullptr;
    bool needs_grad = false;
  };

  std::deque<Node> nodes_;
  std::size_t guarded_ = 0;
};

// Primitives. Every binary primitive requires both operands on the same tape.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
/// Elementwise product.
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// a scaled by a 1x1 variable.
Var scale(Var a, Var s);
Var add_scalar(Var a, double s);
/// Adds a 1xC row to every row of an RxC matrix.
Var add_row(Var a, Var row);
/// Multiplies every row of an RxC matrix elementwise by a 1xC row.
Var mul_row(Var a, Var row);
Var concat_rows(const std::vector<Var>& parts);
Var concat_cols(const std::vector<Var>& parts);
Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count);
/// Gathers the listed rows (repeats allowed).
Var gather_rows(Var a, const std::vector<Eigen::Index>& rows);
Var transpose(Var a);
Var softmax_rows(Var a);
Var log_softmax_rows(Var a);
Var sigmoid(Var a);
/// tanh approximation.
Var gelu(Var a);
/// Per-row standardization (no affine); epsilon kLayerNormEps.
Var layer_norm_rows(Var a, double eps = kLayerNormEps);
/// Per-row x / max(||x||, eps).
Var l2_normalize_rows(Var a, double eps = kNormalizeEps);
/// Mean over rows: RxC -> 1xC. Invariant to row order bit for bit.
Var mean_rows(Var a);
/// Mean over columns: RxC -> Rx1.
Var mean_cols(Var a);
Var sum(Var a);
Var exp(Var a);
Var log(Var a);
/// Main diagonal of a square matrix as an Rx1 column.
Var diagonal(Var a);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

}  // namespace ad
}  // namespace tvr
