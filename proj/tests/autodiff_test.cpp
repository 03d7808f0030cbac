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

#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tvr/autodiff.hpp"
#include "tvr/gradcheck.hpp"
#include "tvr/random.hpp"

namespace tvr {
namespace {

using ad::Tape;
using ad::Var;

TEST(Primitives, SoftmaxOfEqualLogitsIsUniform) {
  Tape t;
  Var s = ad::softmax_rows(t.constant(Matrix::Zero(1, 4)));
  for (Eigen::Index j = 0; j < 4; ++j) EXPECT_DOUBLE_EQ(s.value()(0, j), 0.25);
}

TEST(Primitives, SigmoidAtZeroAndNormalizeOfUnitVector) {
  Tape t;
  EXPECT_DOUBLE_EQ(ad::sigmoid(t.constant(Matrix::Zero(1, 1))).value()(0, 0), 0.5);
  Rng rng(3);
  Matrix u = rng.unit_vector(7);
  Var n = ad::l2_normalize_rows(t.constant(u));
  EXPECT_LT((n.value() - u).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Primitives, MatmulMatchesTripleLoop) {
  Rng rng(11);
  Matrix a = rng.normal_matrix(3, 4, 1.0), b = rng.normal_matrix(4, 2, 1.0);
  Tape t;
  Var c = ad::matmul(t.constant(a), t.constant(b));
  EXPECT_LT((c.value() - oracle::matmul(a, b)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Primitives, ElementwiseForwardMatchesScalarFormulas) {
  Rng rng(5);
  Matrix x = rng.normal_matrix(3, 5, 1.0);
  Tape t;
  Var v = t.constant(x);
  const Matrix g = ad::gelu(v).value(), s = ad::sigmoid(v).value(), e = ad::exp(v).value();
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    EXPECT_NEAR(g(i), oracle::gelu(x(i)), 1e-14);
    EXPECT_NEAR(s(i), oracle::sigmoid(x(i)), 1e-15);
    EXPECT_NEAR(e(i), std::exp(x(i)), 1e-12 * std::exp(x(i)));
  }
  const Matrix ln = ad::layer_norm_rows(v).value();
  const Matrix ref = oracle::layer_norm(x, Matrix::Ones(1, 5), Matrix::Zero(1, 5));
  EXPECT_LT((ln - ref).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Primitives, ShapeMismatchNamesOperationAndShapes) {
  Tape t;
  Var a = t.constant(Matrix::Zero(3, 4)), b = t.constant(Matrix::Zero(3, 2));
  try {
    ad::matmul(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("matmul"), std::string::npos);
    EXPECT_NE(msg.find("3x4"), std::string::npos);
    EXPECT_NE(msg.find("3x2"), std::string::npos);
  }
  EXPECT_THROW(ad::add(a, b), ShapeError);
  EXPECT_THROW(ad::slice_rows(a, 2, 2), ShapeError);
  EXPECT_THROW(ad::concat_cols({a, t.constant(Matrix::Zero(2, 1))}), ShapeError);
}

TEST(Primitives, NonFiniteValuesPropagateAndAreDetectable) {
  Tape t;
  Var x = t.leaf(Matrix::Constant(1, 2, -1.0));
  Var y = ad::sum(ad::log(x));
  EXPECT_TRUE(std::isnan(y.value()(0, 0)));
  EXPECT_FALSE(t.all_values_finite());
  EXPECT_FALSE(all_finite(y.value()));
}

TEST(Backward, IdentityAndSigmoidAtZero) {
  Tape t;
  Var x = t.leaf(Matrix::Constant(1, 1, 0.0));
  t.backward(x);
  EXPECT_DOUBLE_EQ(t.grad(x)(0, 0), 1.0);

  Tape t2;
  Var z = t2.leaf(Matrix::Zero(1, 1));
  t2.backward(ad::sigmoid(z));
  EXPECT_DOUBLE_EQ(t2.grad(z)(0, 0), 0.25);
}

TEST(Backward, RejectsMissingForwardAndBadSeed) {
  Tape t;
  EXPECT_THROW(t.backward(Var()), std::logic_error);
  Tape other;
  Var y = other.leaf(Matrix::Zero(2, 3));
  EXPECT_THROW(t.backward(y), std::logic_error);
  EXPECT_THROW(other.backward(y, Matrix::Ones(3, 2)), ShapeError);
}

TEST(Backward, MultipleUsesAccumulate) {
  Tape t;
  Var x = t.leaf(Matrix::Constant(1, 1, 3.0));
  Var y = ad::add(ad::mul(x, x), x);  // x^2 + x
  t.backward(y);
  EXPECT_DOUBLE_EQ(t.grad(x)(0, 0), 7.0);
}

TEST(Backward, ParameterGradientsAddAcrossTapes) {
  ad::Parameter p("p", Matrix::Constant(1, 1, 2.0));
  for (int i = 0; i < 2; ++i) {
    Tape t;
    t.backward(ad::mul(t.param(p), t.param(p)));
  }
  EXPECT_DOUBLE_EQ(p.grad(0, 0), 8.0);
  p.zero_grad();
  EXPECT_DOUBLE_EQ(p.grad(0, 0), 0.0);
}

TEST(Backward, RepeatedBackwardDoesNotCompoundNodeGradients) {
  Tape t;
  Var x = t.leaf(Matrix::Constant(1, 1, 2.0));
  Var y = ad::exp(x);
  t.backward(y);
  t.backward(y);
  EXPECT_NEAR(t.grad(x)(0, 0), std::exp(2.0), 1e-12);
}

TEST(Properties, SoftmaxRowsSumToOneInsideUnitInterval) {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    Matrix s = ad::softmax_rows(t.constant(rng.normal_matrix(4, 9, 5.0))).value();
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      EXPECT_NEAR(s.row(i).sum(), 1.0, 1e-12);
      EXPECT_GT(s.row(i).minCoeff(), 0.0);
      EXPECT_LT(s.row(i).maxCoeff(), 1.0);
    }
  }
}

TEST(Properties, NormalizedRowsHaveUnitNorm) {
  Rng rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    Tape t;
    Matrix n = ad::l2_normalize_rows(t.constant(rng.normal_matrix(5, 6, 0.1 + trial))).value();
    for (Eigen::Index i = 0; i < n.rows(); ++i) EXPECT_NEAR(n.row(i).norm(), 1.0, 1e-10);
  }
}

TEST(Properties, NormalizeOfZeroRowIsGuardedZero) {
  Tape t;
  Var z = t.leaf(Matrix::Zero(2, 3));
  Var n = ad::l2_normalize_rows(z);
  EXPECT_EQ(n.value(), Matrix::Zero(2, 3));
  EXPECT_GT(t.guarded_normalizations(), 0u);
  t.backward(n, Matrix::Ones(2, 3));
  EXPECT_TRUE(t.grad(z).allFinite());
}

TEST(Properties, BackwardIsLinearInTheLoss) {
  Rng rng(23);
  const Matrix x0 = rng.normal_matrix(3, 3, 1.0);
  auto f = [](Var x) { return ad::sum(ad::softmax_rows(ad::matmul(x, x))); };
  auto g = [](Var x) { return ad::sum(ad::gelu(ad::exp(ad::scale(x, 0.3)))); };
  Tape tf, tg, ts;
  Var xf = tf.leaf(x0), xg = tg.leaf(x0), xs = ts.leaf(x0);
  tf.backward(f(xf));
  tg.backward(g(xg));
  ts.backward(ad::add(f(xs), g(xs)));
  EXPECT_LT((ts.grad(xs) - tf.grad(xf) - tg.grad(xg)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GradCheck, RandomCompositeOfAllPrimitives) {
  Rng rng(31);
  std::vector<Matrix> inputs = {rng.normal_matrix(3, 4, 0.7), rng.normal_matrix(4, 4, 0.7), rng.normal_matrix(1, 4, 0.7)};
  auto f = [](Tape& t, const std::vector<Var>& in) {
    Var a = in[0], w = in[1], r = in[2];
    Var h = ad::add_row(ad::matmul(a, w), r);
    Var n = ad::layer_norm_rows(ad::gelu(h));
    Var s = ad::softmax_rows(ad::scale(ad::matmul(n, ad::transpose(n)), 0.5));
    Var mixed = ad::mul_row(ad::matmul(s, ad::sigmoid(a)), ad::exp(ad::scale(r, 0.2)));
    Var stacked = ad::concat_rows({mixed, ad::slice_rows(ad::l2_normalize_rows(a), 1, 2)});
    Var wide = ad::concat_cols({stacked, ad::slice_cols(ad::gather_rows(stacked, {4, 0, 0, 2, 1}), 1, 2)});
    Var logp = ad::log_softmax_rows(ad::sub(wide, ad::add_scalar(wide, 0.1)));
    Var pos = ad::log(ad::add_scalar(ad::exp(ad::mean_cols(wide)), 1.0));
    Var sq = ad::matmul(ad::transpose(wide), wide);
    Var k = ad::scale(ad::sum(ad::diagonal(sq)), ad::mean_rows(ad::mean_cols(a)));
    return ad::add(ad::add(ad::sum(logp), ad::sum(pos)), ad::scale(k, t.constant(Matrix::Constant(1, 1, 0.5))));
  };
  const ad::GradCheckResult r = ad::check_gradients(f, inputs, 1e-5, 7);
  EXPECT_TRUE(r.passed(1e-4)) << r.max_rel_error << " at " << r.worst;
  EXPECT_EQ(r.coordinates, 12u + 16u + 4u);
}

TEST(GradCheck, DetectsAWrongAdjoint) {
  // A primitive recorded with a deliberately wrong adjoint must fail the check.
  auto f = [](Tape& t, const std::vector<Var>& in) {
    Var x = in[0];
    return t.record("bad_square", x.value().array().square().matrix(), {x.id()},
                    [](Tape& tape, std::size_t id) {
                      const std::size_t x_id = tape.inputs(id)[0];
                      tape.accumulate(x_id, tape.upstream(id).cwiseProduct(tape.value(x_id)));
                    });
  };
  const ad::GradCheckResult r = ad::check_gradients(f, {Matrix::Constant(2, 2, 1.5)});
  EXPECT_FALSE(r.passed(1e-4));
}

}  // namespace
}  // namespace tvr
