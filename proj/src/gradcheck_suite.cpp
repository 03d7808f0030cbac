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

#include "tvr/gradcheck_suite.hpp"

#include <iomanip>
#include <ostream>

#include "tvr/model.hpp"
#include "tvr/objective.hpp"
#include "tvr/random.hpp"
#include "tvr/tab.hpp"
#include "tvr/tdb.hpp"

namespace tvr {

using ad::Tape;
using ad::Var;

namespace {

/// Spreads every parameter so the check sees non-trivial curvature.
void perturb(std::vector<ad::Parameter*> params, Rng& rng, double stddev) {
  for (ad::Parameter* p : params) {
    const bool gain = p->name.find(".gain") != std::string::npos;
    p->value = rng.normal_matrix(p->value.rows(), p->value.cols(), stddev);
    if (gain) p->value.array() += 1.0;
  }
}

}  // namespace

std::vector<GradCheckEntry> run_gradient_suite(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckEntry> out;
  auto inputs = [&](std::initializer_list<std::pair<int, int>> shapes) {
    std::vector<Matrix> xs;
    for (auto [r, c] : shapes) xs.push_back(rng.normal_matrix(r, c, 1.0));
    return xs;
  };
  auto check = [&](const std::string& name, const ad::InputFn& f, std::vector<Matrix> xs) {
    out.push_back({name, ad::check_gradients(f, xs, kGradCheckStep, seed)});
  };
  auto check_params = [&](const std::string& name, const ad::ParamFn& f, std::vector<ad::Parameter*> ps) {
    out.push_back({name, ad::check_parameter_gradients(f, ps, kGradCheckStep, seed)});
  };

  // Primitives.
  check("matmul", [](Tape&, const std::vector<Var>& v) { return ad::matmul(v[0], v[1]); }, inputs({{3, 4}, {4, 2}}));
  check("add", [](Tape&, const std::vector<Var>& v) { return ad::add(v[0], v[1]); }, inputs({{3, 4}, {3, 4}}));
  check("sub", [](Tape&, const std::vector<Var>& v) { return ad::sub(v[0], v[1]); }, inputs({{3, 4}, {3, 4}}));
  check("mul", [](Tape&, const std::vector<Var>& v) { return ad::mul(v[0], v[1]); }, inputs({{3, 4}, {3, 4}}));
  check("scale", [](Tape&, const std::vector<Var>& v) { return ad::scale(v[0], -1.7); }, inputs({{3, 4}}));
  check("scale_by_var", [](Tape&, const std::vector<Var>& v) { return ad::scale(v[0], v[1]); }, inputs({{3, 4}, {1, 1}}));
  check("add_scalar", [](Tape&, const std::vector<Var>& v) { return ad::add_scalar(v[0], 0.3); }, inputs({{2, 3}}));
  check("add_row", [](Tape&, const std::vector<Var>& v) { return ad::add_row(v[0], v[1]); }, inputs({{3, 4}, {1, 4}}));
  check("mul_row", [](Tape&, const std::vector<Var>& v) { return ad::mul_row(v[0], v[1]); }, inputs({{3, 4}, {1, 4}}));
  check("concat_rows", [](Tape&, const std::vector<Var>& v) { return ad::concat_rows({v[0], v[1]}); },
        inputs({{2, 3}, {1, 3}}));
  check("concat_cols", [](Tape&, const std::vector<Var>& v) { return ad::concat_cols({v[0], v[1]}); },
        inputs({{2, 3}, {2, 2}}));
  check("slice_rows", [](Tape&, const std::vector<Var>& v) { return ad::slice_rows(v[0], 1, 2); }, inputs({{4, 3}}));
  check("slice_cols", [](Tape&, const std::vector<Var>& v) { return ad::slice_cols(v[0], 1, 2); }, inputs({{3, 4}}));
  check("gather_rows", [](Tape&, const std::vector<Var>& v) { return ad::gather_rows(v[0], {2, 0, 2}); },
        inputs({{3, 2}}));
  check("transpose", [](Tape&, const std::vector<Var>& v) { return ad::transpose(v[0]); }, inputs({{3, 4}}));
  check("softmax_rows", [](Tape&, const std::vector<Var>& v) { return ad::softmax_rows(v[0]); }, inputs({{3, 5}}));
  check("log_softmax_rows", [](Tape&, const std::vector<Var>& v) { return ad::log_softmax_rows(v[0]); },
        inputs({{3, 5}}));
  check("sigmoid", [](Tape&, const std::vector<Var>& v) { return ad::sigmoid(v[0]); }, inputs({{3, 4}}));
  check("gelu", [](Tape&, const std::vector<Var>& v) { return ad::gelu(v[0]); }, inputs({{3, 4}}));
  check("layer_norm_rows", [](Tape&, const std::vector<Var>& v) { return ad::layer_norm_rows(v[0]); },
        inputs({{3, 6}}));
  check("l2_normalize_rows", [](Tape&, const std::vector<Var>& v) { return ad::l2_normalize_rows(v[0]); },
        inputs({{3, 4}}));
  check("mean_rows", [](Tape&, const std::vector<Var>& v) { return ad::mean_rows(v[0]); }, inputs({{3, 4}}));
  check("mean_cols", [](Tape&, const std::vector<Var>& v) { return ad::mean_cols(v[0]); }, inputs({{3, 4}}));
  check("sum", [](Tape&, const std::vector<Var>& v) { return ad::sum(v[0]); }, inputs({{3, 4}}));
  check("exp", [](Tape&, const std::vector<Var>& v) { return ad::exp(v[0]); }, inputs({{3, 4}}));
  {
    std::vector<Matrix> pos = inputs({{3, 4}});
    pos[0] = pos[0].array().abs() + 0.5;
    check("log", [](Tape&, const std::vector<Var>& v) { return ad::log(v[0]); }, pos);
  }
  check("diagonal", [](Tape&, const std::vector<Var>& v) { return ad::diagonal(v[0]); }, inputs({{4, 4}}));

  // Composite blocks.
  const Eigen::Index d = 8;
  const int heads = 2;
  const int m = 4;
  ModelConfig cfg;
  cfg.dim = d;
  cfg.heads = heads;
  cfg.temporal_layers = 2;
  cfg.frames = m;
  cfg.centers = 3;
  Model model = Model::init(cfg, seed);
  perturb(model.parameters(), rng, 0.3);
  model.log_logit_scale.value(0, 0) = std::log(2.0);
  const Matrix frames = rng.normal_matrix(m, d, 1.0);
  const Matrix text = rng.normal_matrix(5, d, 1.0);

  {
    EncoderLayer layer = EncoderLayer::random("layer", d, heads, rng, 0.3);
    perturb(layer.parameters(), rng, 0.3);
    const Matrix x = rng.normal_matrix(3, d, 1.0);
    check_params("encoder_layer(params)", [&](Tape& t) { return encoder_layer_forward(t, t.constant(x), layer); },
                 layer.parameters());
    check("encoder_layer(input)",
          [&](Tape& t, const std::vector<Var>& v) { return encoder_layer_forward(t, v[0], layer); }, {x});
  }
  for (TdbVariant variant : {TdbVariant::Tdb, TdbVariant::Sub, TdbVariant::Mlp}) {
    check("difference_tokens[" + std::string(to_string(variant)) + "]",
          [&, variant](Tape& t, const std::vector<Var>& v) { return difference_tokens(t, v[0], model.tdb, variant); },
          {frames});
  }
  check_params("difference_tokens(params)",
               [&](Tape& t) { return difference_tokens(t, t.constant(frames), model.tdb); }, model.tdb.parameters());
  for (TdbVariant variant : {TdbVariant::Tdb, TdbVariant::Sub, TdbVariant::Mlp, TdbVariant::All, TdbVariant::MeanPool,
                             TdbVariant::TemporalTransformer}) {
    check("tdb_forward[" + std::string(to_string(variant)) + "](input)",
          [&, variant](Tape& t, const std::vector<Var>& v) { return tdb_forward(t, v[0], model.tdb, variant).global; },
          {frames});
  }
  check_params("tdb_forward[tdb](params)",
               [&](Tape& t) { return tdb_forward(t, t.constant(frames), model.tdb, TdbVariant::Tdb).global; },
               model.tdb.parameters());
  for (TabVariant variant : {TabVariant::Base, TabVariant::Temporal, TabVariant::Transformer, TabVariant::Tdb}) {
    check("tab_video[" + std::string(to_string(variant)) + "](input)",
          [&, variant](Tape& t, const std::vector<Var>& v) {
            TdbOutput main = tdb_forward(t, v[0], model.tdb, TdbVariant::Tdb);
            return tab_video(t, v[0], main, model.tdb, TdbVariant::Tdb, model.tab, variant).aligned;
          },
          {frames});
  }
  {
    std::vector<ad::Parameter*> ps = model.tab.parameters();
    auto tdb_ps = model.tdb.parameters();
    ps.insert(ps.end(), tdb_ps.begin(), tdb_ps.end());
    check_params("tab_video[tdb](params)",
                 [&](Tape& t) {
                   Var f = t.constant(frames);
                   TdbOutput main = tdb_forward(t, f, model.tdb, TdbVariant::Tdb);
                   return tab_video(t, f, main, model.tdb, TdbVariant::Tdb, model.tab, TabVariant::Tdb).aligned;
                 },
                 ps);
  }
  check("tab_text(input)",
        [&](Tape& t, const std::vector<Var>& v) { return tab_text(t, v[0], 4, model.tab).aligned; }, {text});
  check_params("tab_text(params)", [&](Tape& t) { return tab_text(t, t.constant(text), 4, model.tab).aligned; },
               model.tab.shared.parameters());
  check("cosine_matrix", [](Tape&, const std::vector<Var>& v) { return cosine_matrix(v[0], v[1]); },
        inputs({{3, 4}, {3, 4}}));
  check("symmetric_loss", [](Tape&, const std::vector<Var>& v) { return symmetric_loss(v[0], v[1]); },
        {rng.normal_matrix(4, 4, 1.0), Matrix::Constant(1, 1, 2.5)});
  check("combined_loss", [](Tape&, const std::vector<Var>& v) { return combined_loss(v[0], v[1], 0.4, 3.0); },
        inputs({{3, 3}, {3, 3}}));

  {
    const std::vector<Matrix> batch_frames = {rng.normal_matrix(m, d, 1.0), rng.normal_matrix(m, d, 1.0),
                                              rng.normal_matrix(m, d, 1.0)};
    const std::vector<Matrix> batch_text = {rng.normal_matrix(5, d, 1.0), rng.normal_matrix(5, d, 1.0),
                                            rng.normal_matrix(5, d, 1.0)};
    check_params("model_batch_loss(params)",
                 [&](Tape& t) {
                   std::vector<Var> tg, ta, vg, va;
                   for (std::size_t i = 0; i < batch_frames.size(); ++i) {
                     Model::Encoded te = model.encode_text(t, batch_text[i], 4, true);
                     Model::Encoded ve = model.encode_video(t, t.constant(batch_frames[i]), true);
                     tg.push_back(te.global);
                     ta.push_back(te.aligned);
                     vg.push_back(ve.global);
                     va.push_back(ve.aligned);
                   }
                   Var scale = model.logit_scale(t);
                   return combined_loss(cosine_matrix(ad::concat_rows(tg), ad::concat_rows(vg)),
                                        cosine_matrix(ad::concat_rows(ta), ad::concat_rows(va)), scale, 0.5);
                 },
                 model.parameters());
  }
  return out;
}

void write_gradcheck_table(std::ostream& os, const std::vector<GradCheckEntry>& entries) {
  std::size_t width = 4;
  for (const GradCheckEntry& e : entries) width = std::max(width, e.name.size());
  os << std::left << std::setw(static_cast<int>(width)) << "check" << "  " << std::setw(12) << "max_rel_err"
     << "  " << std::setw(7) << "coords" << "  result\n";
  for (const GradCheckEntry& e : entries) {
    os << std::left << std::setw(static_cast<int>(width)) << e.name << "  " << std::setw(12) << std::scientific
       << std::setprecision(3) << e.result.max_rel_error << std::defaultfloat << "  " << std::setw(7)
       << e.result.coordinates << "  " << (e.passed() ? "PASS" : "FAIL") << "\n";
  }
  os << std::right;
}

}  // namespace tvr
