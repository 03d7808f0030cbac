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

#include "tvr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>

namespace tvr {

std::string shape_string(Eigen::Index rows, Eigen::Index cols) {
  std::ostringstream os;
  os << rows << "x" << cols;
  return os.str();
}

ShapeError::ShapeError(const std::string& op, const Matrix& a, const Matrix& b)
    : std::invalid_argument(op + ": shape mismatch (" + shape_string(a.rows(), a.cols()) + ") vs (" +
                            shape_string(b.rows(), b.cols()) + ")") {}

ShapeError::ShapeError(const std::string& op, const std::string& what)
    : std::invalid_argument(op + ": " + what) {}

namespace ad {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw std::logic_error("Var: use of an unbound variable");
  return tape_->value(id_);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::leaf(Matrix value) {
  Node n;
  n.op = "leaf";
  n.value = std::move(value);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::param(Parameter& parameter) {
  Node n;
  n.op = "param";
  n.value = parameter.value;
  n.needs_grad = true;
  n.parameter = &parameter;
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

Var Tape::record(const char* op, Matrix value, std::vector<std::size_t> inputs, Adjoint adjoint) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  for (std::size_t in : inputs) {
    if (in >= nodes_.size()) throw std::logic_error(std::string(op) + ": input is not on this tape");
    n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
  }
  n.inputs = std::move(inputs);
  if (n.needs_grad) n.adjoint = std::move(adjoint);
  nodes_.push_back(std::move(n));
  return {this, nodes_.size() - 1};
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.needs_grad) return;
  if (n.grad.size() == 0) {
    n.grad = g;
  } else {
    n.grad += g;
  }
}

void Tape::backward(Var output, const Matrix& seed) {
  if (nodes_.empty() || output.tape() != this || output.id() >= nodes_.size()) {
    throw std::logic_error("backward: no forward pass recorded for this output");
  }
  const Node& out = nodes_[output.id()];
  if (seed.rows() != out.value.rows() || seed.cols() != out.value.cols()) {
    throw ShapeError("backward(seed)", seed, out.value);
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  accumulate(output.id(), seed);
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.adjoint) n.adjoint(*this, i);
    if (n.parameter != nullptr) n.parameter->grad += n.grad;
  }
}

void Tape::backward(Var output) { backward(output, Matrix::Ones(1, 1)); }

const Matrix& Tape::grad(Var v) const {
  static const Matrix kEmpty;
  const Node& n = nodes_.at(v.id());
  return n.grad.size() == 0 ? kEmpty : n.grad;
}

bool Tape::all_values_finite() const {
  for (const Node& n : nodes_) {
    if (!n.value.allFinite()) return false;
  }
  return true;
}

namespace {

Tape& same_tape(const char* op, Var a, Var b) {
  if (!a.valid() || a.tape() != b.tape()) throw std::logic_error(std::string(op) + ": operands on different tapes");
  return *a.tape();
}

void require_same_shape(const char* op, Var a, Var b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError(op, a.value(), b.value());
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = same_tape("matmul", a, b);
  if (a.cols() != b.rows()) throw ShapeError("matmul", a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return t.record("matmul", a.value() * b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.needs_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
    if (tp.needs_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape("add", a, b);
  require_same_shape("add", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record("add", a.value() + b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.upstream(self));
    tp.accumulate(ib, tp.upstream(self));
  });
}

Var sub(Var a, Var b) {
  Tape& t = same_tape("sub", a, b);
  require_same_shape("sub", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record("sub", a.value() - b.value(), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.upstream(self));
    if (tp.needs_grad(ib)) tp.accumulate(ib, -tp.upstream(self));
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape("mul", a, b);
  require_same_shape("mul", a, b);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record("mul", a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.needs_grad(ia)) tp.accumulate(ia, g.cwiseProduct(tp.value(ib)));
    if (tp.needs_grad(ib)) tp.accumulate(ib, g.cwiseProduct(tp.value(ia)));
  });
}

Var scale(Var a, double s) {
  const std::size_t ia = a.id();
  return a.tape()->record("scale", a.value() * s, {ia}, [ia, s](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.upstream(self) * s);
  });
}

Var scale(Var a, Var s) {
  Tape& t = same_tape("scale", a, s);
  if (s.rows() != 1 || s.cols() != 1) throw ShapeError("scale", "scale factor must be 1x1, got " + shape_string(s.rows(), s.cols()));
  const std::size_t ia = a.id(), is = s.id();
  return t.record("scale", a.value() * s.value()(0, 0), {ia, is}, [ia, is](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.needs_grad(ia)) tp.accumulate(ia, g * tp.value(is)(0, 0));
    if (tp.needs_grad(is)) tp.accumulate(is, Matrix::Constant(1, 1, g.cwiseProduct(tp.value(ia)).sum()));
  });
}

Var add_scalar(Var a, double s) {
  const std::size_t ia = a.id();
  return a.tape()->record("add_scalar", a.value().array() + s, {ia},
                          [ia](Tape& tp, std::size_t self) { tp.accumulate(ia, tp.upstream(self)); });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape("add_row", a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("add_row", a.value(), row.value());
  const std::size_t ia = a.id(), ir = row.id();
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.record("add_row", std::move(out), {ia, ir}, [ia, ir](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    tp.accumulate(ia, g);
    if (tp.needs_grad(ir)) tp.accumulate(ir, g.colwise().sum());
  });
}

Var mul_row(Var a, Var row) {
  Tape& t = same_tape("mul_row", a, row);
  if (row.rows() != 1 || row.cols() != a.cols()) throw ShapeError("mul_row", a.value(), row.value());
  const std::size_t ia = a.id(), ir = row.id();
  Matrix out = a.value().array().rowwise() * row.value().row(0).array();
  return t.record("mul_row", std::move(out), {ia, ir}, [ia, ir](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    if (tp.needs_grad(ia)) {
      Matrix ga = g.array().rowwise() * tp.value(ir).row(0).array();
      tp.accumulate(ia, ga);
    }
    if (tp.needs_grad(ir)) tp.accumulate(ir, g.cwiseProduct(tp.value(ia)).colwise().sum());
  });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows", "no operands");
  Tape& t = *parts.front().tape();
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> offsets;
  for (const Var& p : parts) {
    same_tape("concat_rows", parts.front(), p);
    if (p.cols() != cols) throw ShapeError("concat_rows", parts.front().value(), p.value());
    offsets.push_back(rows);
    rows += p.rows();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) out.middleRows(offsets[k], parts[k].rows()) = parts[k].value();
  return t.record("concat_rows", std::move(out), ids, [ids, offsets](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.needs_grad(ids[k])) tp.accumulate(ids[k], g.middleRows(offsets[k], tp.value(ids[k]).rows()));
    }
  });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols", "no operands");
  Tape& t = *parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  std::vector<std::size_t> ids;
  std::vector<Eigen::Index> offsets;
  for (const Var& p : parts) {
    same_tape("concat_cols", parts.front(), p);
    if (p.rows() != rows) throw ShapeError("concat_cols", parts.front().value(), p.value());
    offsets.push_back(cols);
    cols += p.cols();
    ids.push_back(p.id());
  }
  Matrix out(rows, cols);
  for (std::size_t k = 0; k < parts.size(); ++k) out.middleCols(offsets[k], parts[k].cols()) = parts[k].value();
  return t.record("concat_cols", std::move(out), ids, [ids, offsets](Tape& tp, std::size_t self) {
    const Matrix& g = tp.upstream(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.needs_grad(ids[k])) tp.accumulate(ids[k], g.middleCols(offsets[k], tp.value(ids[k]).cols()));
    }
  });
}

Var slice_rows(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.rows()) {
    throw ShapeError("slice_rows", "rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                                       ") out of range for " + shape_string(a.rows(), a.cols()));
  }
  const std::size_t ia = a.id();
  return a.tape()->record("slice_rows", a.value().middleRows(begin, count), {ia},
                          [ia, begin, count](Tape& tp, std::size_t self) {
                            const Matrix& src = tp.value(ia);
                            Matrix g = Matrix::Zero(src.rows(), src.cols());
                            g.middleRows(begin, count) = tp.upstream(self);
                            tp.accumulate(ia, g);
                          });
}

Var slice_cols(Var a, Eigen::Index begin, Eigen::Index count) {
  if (begin < 0 || count < 0 || begin + count > a.cols()) {
    throw ShapeError("slice_cols", "cols [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                                       ") out of range for " + shape_string(a.rows(), a.cols()));
  }
  const std::size_t ia = a.id();
  return a.tape()->record("slice_cols", a.value().middleCols(begin, count), {ia},
                          [ia, begin, count](Tape& tp, std::size_t self) {
                            const Matrix& src = tp.value(ia);
                            Matrix g = Matrix::Zero(src.rows(), src.cols());
                            g.middleCols(begin, count) = tp.upstream(self);
                            tp.accumulate(ia, g);
                          });
}

Var gather_rows(Var a, const std::vector<Eigen::Index>& rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] < 0 || rows[k] >= a.rows()) {
      throw ShapeError("gather_rows", "row " + std::to_string(rows[k]) + " out of range for " +
                                          shape_string(a.rows(), a.cols()));
    }
    out.row(static_cast<Eigen::Index>(k)) = a.value().row(rows[k]);
  }
  const std::size_t ia = a.id();
  return a.tape()->record("gather_rows", std::move(out), {ia}, [ia, rows](Tape& tp, std::size_t self) {
    const Matrix& src = tp.value(ia);
    const Matrix& g = tp.upstream(self);
    Matrix ga = Matrix::Zero(src.rows(), src.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) ga.row(rows[k]) += g.row(static_cast<Eigen::Index>(k));
    tp.accumulate(ia, ga);
  });
}

Var transpose(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record("transpose", a.value().transpose(), {ia}, [ia](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.upstream(self).transpose());
  });
}

namespace {

Matrix softmax_of(const Matrix& x) {
  Matrix y = (x.colwise() - x.rowwise().maxCoeff()).array().exp();
  y.array().colwise() /= y.rowwise().sum().array();
  return y;
}

}  // namespace

Var softmax_rows(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record("softmax_rows", softmax_of(a.value()), {ia}, [ia](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.upstream(self);
    Eigen::VectorXd dot = g.cwiseProduct(y).rowwise().sum();
    Matrix ga = y.array() * (g.colwise() - dot).array();
    tp.accumulate(ia, ga);
  });
}

Var log_softmax_rows(Var a) {
  const Matrix& x = a.value();
  Matrix shifted = x.colwise() - x.rowwise().maxCoeff();
  Eigen::VectorXd lse = shifted.array().exp().rowwise().sum().log();
  Matrix out = shifted.colwise() - lse;
  const std::size_t ia = a.id();
  return a.tape()->record("log_softmax_rows", std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.upstream(self);
    Eigen::VectorXd gsum = g.rowwise().sum();
    Matrix ga = g - Matrix(y.array().exp().colwise() * gsum.array());
    tp.accumulate(ia, ga);
  });
}

Var sigmoid(Var a) {
  const std::size_t ia = a.id();
  Matrix y = (1.0 + (-a.value().array()).exp()).inverse();
  return a.tape()->record("sigmoid", std::move(y), {ia}, [ia](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    tp.accumulate(ia, tp.upstream(self).array() * y.array() * (1.0 - y.array()));
  });
}

namespace {

constexpr double kGeluCoeff = 0.044715;
const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

}  // namespace

Var gelu(Var a) {
  const Matrix& x = a.value();
  Matrix y = x.unaryExpr([](double v) {
    return 0.5 * v * (1.0 + std::tanh(kSqrt2OverPi * (v + kGeluCoeff * v * v * v)));
  });
  const std::size_t ia = a.id();
  return a.tape()->record("gelu", std::move(y), {ia}, [ia](Tape& tp, std::size_t self) {
    Matrix d = tp.value(ia).unaryExpr([](double v) {
      const double t = std::tanh(kSqrt2OverPi * (v + kGeluCoeff * v * v * v));
      return 0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * kSqrt2OverPi * (1.0 + 3.0 * kGeluCoeff * v * v);
    });
    tp.accumulate(ia, tp.upstream(self).cwiseProduct(d));
  });
}

Var layer_norm_rows(Var a, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("layer_norm_rows: epsilon must be positive");
  const Matrix& x = a.value();
  const auto n = static_cast<double>(x.cols());
  Eigen::VectorXd mean = x.rowwise().sum() / n;
  Matrix centered = x.colwise() - mean;
  Eigen::VectorXd inv_std = ((centered.array().square().rowwise().sum() / n) + eps).rsqrt();
  Matrix xhat = centered.array().colwise() * inv_std.array();
  const std::size_t ia = a.id();
  return a.tape()->record("layer_norm_rows", xhat, {ia}, [ia, inv_std, n](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.upstream(self);
    Eigen::VectorXd g_mean = g.rowwise().sum() / n;
    Eigen::VectorXd gy_mean = g.cwiseProduct(y).rowwise().sum() / n;
    Matrix ga = (g.colwise() - g_mean) - Matrix(y.array().colwise() * gy_mean.array());
    ga.array().colwise() *= inv_std.array();
    tp.accumulate(ia, ga);
  });
}

Var l2_normalize_rows(Var a, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("l2_normalize_rows: epsilon must be positive");
  const Matrix& x = a.value();
  Eigen::VectorXd norms = x.rowwise().norm();
  Eigen::VectorXd denom = norms.cwiseMax(eps);
  Tape& t = *a.tape();
  for (Eigen::Index r = 0; r < norms.size(); ++r) {
    if (norms(r) <= eps) t.note_guarded();
  }
  Matrix y = x.array().colwise() / denom.array();
  const std::size_t ia = a.id();
  return t.record("l2_normalize_rows", std::move(y), {ia}, [ia, norms, denom, eps](Tape& tp, std::size_t self) {
    const Matrix& y = tp.value(self);
    const Matrix& g = tp.upstream(self);
    Matrix ga(g.rows(), g.cols());
    for (Eigen::Index r = 0; r < g.rows(); ++r) {
      if (norms(r) > eps) {
        ga.row(r) = (g.row(r) - y.row(r) * y.row(r).dot(g.row(r))) / denom(r);
      } else {
        ga.row(r) = g.row(r) / eps;
      }
    }
    tp.accumulate(ia, ga);
  });
}

Var mean_rows(Var a) {
  if (a.rows() == 0) throw ShapeError("mean_rows", "empty operand");
  const std::size_t ia = a.id();
  const auto n = static_cast<double>(a.rows());
  // Each column is summed in sorted order, so the mean is bit-identical under
  // any permutation of the rows.
  Matrix mean(1, a.cols());
  std::vector<double> column(static_cast<std::size_t>(a.rows()));
  for (Eigen::Index c = 0; c < a.cols(); ++c) {
    for (Eigen::Index r = 0; r < a.rows(); ++r) column[static_cast<std::size_t>(r)] = a.value()(r, c);
    std::sort(column.begin(), column.end());
    double total = 0.0;
    for (double x : column) total += x;
    mean(0, c) = total / n;
  }
  return a.tape()->record("mean_rows", std::move(mean), {ia}, [ia, n](Tape& tp, std::size_t self) {
    const Matrix& src = tp.value(ia);
    Matrix ga = (tp.upstream(self) / n).replicate(src.rows(), 1);
    tp.accumulate(ia, ga);
  });
}

Var mean_cols(Var a) {
  if (a.cols() == 0) throw ShapeError("mean_cols", "empty operand");
  const std::size_t ia = a.id();
  const auto n = static_cast<double>(a.cols());
  return a.tape()->record("mean_cols", a.value().rowwise().mean(), {ia}, [ia, n](Tape& tp, std::size_t self) {
    const Matrix& src = tp.value(ia);
    Matrix ga = (tp.upstream(self) / n).replicate(1, src.cols());
    tp.accumulate(ia, ga);
  });
}

Var sum(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record("sum", Matrix::Constant(1, 1, a.value().sum()), {ia}, [ia](Tape& tp, std::size_t self) {
    const Matrix& src = tp.value(ia);
    tp.accumulate(ia, Matrix::Constant(src.rows(), src.cols(), tp.upstream(self)(0, 0)));
  });
}

Var exp(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record("exp", a.value().array().exp(), {ia}, [ia](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.upstream(self).cwiseProduct(tp.value(self)));
  });
}

Var log(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->record("log", a.value().array().log(), {ia}, [ia](Tape& tp, std::size_t self) {
    tp.accumulate(ia, tp.upstream(self).cwiseQuotient(tp.value(ia)));
  });
}

Var diagonal(Var a) {
  if (a.rows() != a.cols()) throw ShapeError("diagonal", "operand must be square, got " + shape_string(a.rows(), a.cols()));
  const std::size_t ia = a.id();
  return a.tape()->record("diagonal", a.value().diagonal(), {ia}, [ia](Tape& tp, std::size_t self) {
    const Matrix& src = tp.value(ia);
    Matrix ga = Matrix::Zero(src.rows(), src.cols());
    ga.diagonal() = tp.upstream(self).col(0);
    tp.accumulate(ia, ga);
  });
}

}  // namespace ad
}  // namespace tvr
