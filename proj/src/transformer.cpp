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

#include "tvr/transformer.hpp"

#include <cmath>

namespace tvr {

using ad::Parameter;
using ad::Var;

namespace {

Parameter zeros_param(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return {name, Matrix::Zero(rows, cols)};
}

Parameter ones_param(const std::string& name, Eigen::Index cols) { return {name, Matrix::Ones(1, cols)}; }

Var layer_norm_affine(ad::Tape& tape, Var x, Parameter& gain, Parameter& bias) {
  return ad::add_row(ad::mul_row(ad::layer_norm_rows(x), tape.param(gain)), tape.param(bias));
}

Var linear(ad::Tape& tape, Var x, Parameter& w, Parameter& b) {
  return ad::add_row(ad::matmul(x, tape.param(w)), tape.param(b));
}

}  // namespace

EncoderLayer EncoderLayer::random(const std::string& name, Eigen::Index dim, int heads, Rng& rng, double stddev,
                                  double residual_scale) {
  EncoderLayer l = zeros(name, dim, heads);
  l.wq.value = rng.normal_matrix(dim, dim, stddev);
  l.wk.value = rng.normal_matrix(dim, dim, stddev);
  l.wv.value = rng.normal_matrix(dim, dim, stddev);
  l.wo.value = rng.normal_matrix(dim, dim, stddev * residual_scale);
  l.w1.value = rng.normal_matrix(dim, 4 * dim, stddev);
  l.w2.value = rng.normal_matrix(4 * dim, dim, stddev * residual_scale);
  return l;
}

EncoderLayer EncoderLayer::zeros(const std::string& name, Eigen::Index dim, int heads) {
  if (heads < 1 || dim % heads != 0) {
    throw std::invalid_argument("EncoderLayer: model dim " + std::to_string(dim) + " not divisible by " +
                                std::to_string(heads) + " heads");
  }
  EncoderLayer l;
  l.heads = heads;
  l.ln1_gain = ones_param(name + ".ln1.gain", dim);
  l.ln1_bias = zeros_param(name + ".ln1.bias", 1, dim);
  l.wq = zeros_param(name + ".attn.wq", dim, dim);
  l.wk = zeros_param(name + ".attn.wk", dim, dim);
  l.wv = zeros_param(name + ".attn.wv", dim, dim);
  l.wo = zeros_param(name + ".attn.wo", dim, dim);
  l.bq = zeros_param(name + ".attn.bq", 1, dim);
  l.bk = zeros_param(name + ".attn.bk", 1, dim);
  l.bv = zeros_param(name + ".attn.bv", 1, dim);
  l.bo = zeros_param(name + ".attn.bo", 1, dim);
  l.ln2_gain = ones_param(name + ".ln2.gain", dim);
  l.ln2_bias = zeros_param(name + ".ln2.bias", 1, dim);
  l.w1 = zeros_param(name + ".mlp.w1", dim, 4 * dim);
  l.b1 = zeros_param(name + ".mlp.b1", 1, 4 * dim);
  l.w2 = zeros_param(name + ".mlp.w2", 4 * dim, dim);
  l.b2 = zeros_param(name + ".mlp.b2", 1, dim);
  return l;
}

std::vector<Parameter*> EncoderLayer::parameters() {
  return {&ln1_gain, &ln1_bias, &wq, &wk, &wv, &wo, &bq, &bk, &bv, &bo, &ln2_gain, &ln2_bias, &w1, &b1, &w2, &b2};
}

Mlp Mlp::random(const std::string& name, Eigen::Index dim, Rng& rng, double stddev) {
  Mlp m;
  m.w1 = Parameter(name + ".w1", rng.normal_matrix(dim, 4 * dim, stddev));
  m.b1 = zeros_param(name + ".b1", 1, 4 * dim);
  m.w2 = Parameter(name + ".w2", rng.normal_matrix(4 * dim, dim, stddev));
  m.b2 = zeros_param(name + ".b2", 1, dim);
  return m;
}

std::vector<Parameter*> Mlp::parameters() { return {&w1, &b1, &w2, &b2}; }

PositionalTypeEmbeddings PositionalTypeEmbeddings::random(Eigen::Index max_len, Eigen::Index dim, Rng& rng,
                                                          double stddev) {
  PositionalTypeEmbeddings e;
  e.positional = Parameter("embed.positional", rng.normal_matrix(max_len, dim, stddev));
  e.type = Parameter("embed.type", rng.normal_matrix(2, dim, stddev));
  return e;
}

PositionalTypeEmbeddings PositionalTypeEmbeddings::zeros(Eigen::Index max_len, Eigen::Index dim) {
  PositionalTypeEmbeddings e;
  e.positional = zeros_param("embed.positional", max_len, dim);
  e.type = zeros_param("embed.type", 2, dim);
  return e;
}

PositionOverflow::PositionOverflow(Eigen::Index length, Eigen::Index capacity)
    : std::length_error("sequence of " + std::to_string(length) + " tokens exceeds positional table of " +
                        std::to_string(capacity)) {}

Var self_attention(ad::Tape& tape, Var x, EncoderLayer& layer) {
  const Eigen::Index d = layer.dim();
  if (x.cols() != d) throw ShapeError("self_attention", x.value(), layer.wq.value);
  const Eigen::Index head_dim = d / layer.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Var q = linear(tape, x, layer.wq, layer.bq);
  Var k = linear(tape, x, layer.wk, layer.bk);
  Var v = linear(tape, x, layer.wv, layer.bv);
  std::vector<Var> outputs;
  outputs.reserve(static_cast<std::size_t>(layer.heads));
  for (int h = 0; h < layer.heads; ++h) {
    const Eigen::Index off = h * head_dim;
    Var qh = ad::slice_cols(q, off, head_dim);
    Var kh = ad::slice_cols(k, off, head_dim);
    Var vh = ad::slice_cols(v, off, head_dim);
    Var weights = ad::softmax_rows(ad::scale(ad::matmul(qh, ad::transpose(kh)), scale));
    outputs.push_back(ad::matmul(weights, vh));
  }
  Var merged = layer.heads == 1 ? outputs.front() : ad::concat_cols(outputs);
  return linear(tape, merged, layer.wo, layer.bo);
}

Var encoder_layer_forward(ad::Tape& tape, Var x, EncoderLayer& layer) {
  Var y = ad::add(x, self_attention(tape, layer_norm_affine(tape, x, layer.ln1_gain, layer.ln1_bias), layer));
  Var h = layer_norm_affine(tape, y, layer.ln2_gain, layer.ln2_bias);
  Var m = linear(tape, ad::gelu(linear(tape, h, layer.w1, layer.b1)), layer.w2, layer.b2);
  return ad::add(y, m);
}

Var encoder_forward(ad::Tape& tape, Var x, std::span<EncoderLayer> layers) {
  for (EncoderLayer& layer : layers) x = encoder_layer_forward(tape, x, layer);
  return x;
}

Var mlp_forward(ad::Tape& tape, Var x, Mlp& mlp) {
  return linear(tape, ad::gelu(linear(tape, x, mlp.w1, mlp.b1)), mlp.w2, mlp.b2);
}

Var add_positional_type(ad::Tape& tape, Var x, PositionalTypeEmbeddings& emb, std::span<const int> type_ids) {
  const Eigen::Index n = x.rows();
  if (static_cast<Eigen::Index>(type_ids.size()) != n) {
    throw ShapeError("add_positional_type", std::to_string(type_ids.size()) + " type ids for " +
                                                std::to_string(n) + " tokens");
  }
  if (n > emb.max_len()) throw PositionOverflow(n, emb.max_len());
  std::vector<Eigen::Index> types;
  types.reserve(type_ids.size());
  for (int t : type_ids) {
    if (t != 0 && t != 1) throw std::invalid_argument("add_positional_type: type id must be 0 or 1, got " + std::to_string(t));
    types.push_back(t);
  }
  Var pos = ad::slice_rows(tape.param(emb.positional), 0, n);
  Var typ = ad::gather_rows(tape.param(emb.type), types);
  return ad::add(ad::add(x, pos), typ);
}

Var add_positional(ad::Tape& tape, Var x, PositionalTypeEmbeddings& emb) {
  const Eigen::Index n = x.rows();
  if (n > emb.max_len()) throw PositionOverflow(n, emb.max_len());
  return ad::add(x, ad::slice_rows(tape.param(emb.positional), 0, n));
}

}  // namespace tvr
