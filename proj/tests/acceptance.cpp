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

// Acceptance runner. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "order_experiment.hpp"
#include "test_support.hpp"
#include "tvr/embedding_file.hpp"
#include "tvr/gradcheck_suite.hpp"
#include "tvr/objective.hpp"
#include "tvr/tab.hpp"
#include "tvr/tdb.hpp"

namespace tvr {
namespace {

using ad::Tape;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
};

int failures = 0;

void report(const std::string& name, const Outcome& o) {
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail.str() << std::endl;
  if (!o.pass) ++failures;
}

void gradient_suite() {
  Outcome o;
  const auto start = Clock::now();
  const auto entries = run_gradient_suite(1);
  const double secs = seconds_since(start);
  double worst = 0.0;
  std::string worst_name;
  for (const auto& e : entries) {
    if (!e.passed()) o.pass = false;
    if (!(e.result.max_rel_error <= worst)) {
      worst = e.result.max_rel_error;
      worst_name = e.name;
    }
  }
  if (secs >= 60.0) o.pass = false;
  o.detail << entries.size() << " checks, max rel error " << worst << " (" << worst_name << ") < " << kGradCheckTolerance
           << ", " << secs << " s < 60 s";
  report("gradient suite", o);
}

void oracle_equivalence() {
  Outcome o;
  Rng rng(101);
  double agg = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index m = 2 + trial % 7, k = 1 + trial % 5, d = 4 + trial % 13;
    const Matrix x = rng.normal_matrix(m, d, 1.0), c = rng.normal_matrix(k, d, 1.0), a = rng.normal_matrix(k, d, 1.0);
    Tape t;
    ad::Var w = center_confidence(t.constant(x), t.constant(c));
    const Matrix v = aggregate(t.constant(x), w, t.constant(a)).value();
    agg = std::max(agg, testing::max_abs_diff(v, oracle::aggregate(x, oracle::confidence(x, c), a)));
  }
  double loss = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index b = 2 + trial % 15;
    const Matrix s = rng.normal_matrix(b, b, 0.5);
    const double scale = 1.0 + 99.0 * rng.uniform() * (trial % 2);
    Tape t;
    const double got = symmetric_loss(t.constant(s), scale).value()(0, 0);
    loss = std::max(loss, std::abs(got - oracle::symmetric_loss(s, scale)));
  }
  int metric_mismatch = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Eigen::MatrixXd s = rng.normal_matrix(50, 50, 1.0);
    if (trial % 2 == 1) s = s.array().round();  // coarse grid forces ties
    std::vector<Eigen::Index> truth(50);
    for (Eigen::Index i = 0; i < 50; ++i) truth[static_cast<std::size_t>(i)] = i;
    std::shuffle(truth.begin(), truth.end(), rng.engine());
    const EvalPairing p{truth, 50};
    for (bool pess : {false, true}) {
      const TieRule rule = pess ? TieRule::Pessimistic : TieRule::Optimistic;
      for (int dir = 0; dir < 2; ++dir) {
        const RetrievalReport r = dir == 0 ? evaluate_t2v(s, p, rule) : evaluate_v2t(s, p, rule);
        const oracle::Metrics m = dir == 0 ? oracle::t2v(s, truth, pess) : oracle::v2t(s, truth, pess);
        if (r.r1 != m.r1 || r.r5 != m.r5 || r.r10 != m.r10 || r.median_rank != m.mdr || r.mean_rank != m.mnr)
          ++metric_mismatch;
      }
    }
  }
  o.pass = agg <= 1e-10 && loss <= 1e-12 && metric_mismatch == 0;
  o.detail << "aggregation max diff " << agg << " <= 1e-10 over 50, loss max diff " << loss
           << " <= 1e-12 over 50, metric mismatches " << metric_mismatch << " / 400 on 100 50x50 matrices";
  report("oracle equivalence", o);
}

void analytic_identities() {
  Outcome o;
  Rng rng(202);
  int singleton = 0, transpose = 0, monotone = 0, transform = 0, meanpool = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Tape t;
    const Matrix one = rng.normal_matrix(1, 1, 2.0);
    if (symmetric_loss(t.constant(one), 1.0 + 50.0 * rng.uniform()).value()(0, 0) != 0.0) ++singleton;

    const Matrix s = rng.normal_matrix(6, 6, 1.0);
    const double l = symmetric_loss(t.constant(s), 7.0).value()(0, 0);
    const double lt = symmetric_loss(t.constant(Matrix(s.transpose())), 7.0).value()(0, 0);
    if (l != lt) ++transpose;

    Eigen::MatrixXd r = rng.normal_matrix(40, 40, 1.0);
    if (trial % 2 == 0) r = r.array().round();
    std::vector<Eigen::Index> truth(40);
    for (Eigen::Index i = 0; i < 40; ++i) truth[static_cast<std::size_t>(i)] = i;
    std::shuffle(truth.begin(), truth.end(), rng.engine());
    const EvalPairing p{truth, 40};
    for (int dir = 0; dir < 2; ++dir) {
      auto eval = [&](const Eigen::MatrixXd& m) { return dir == 0 ? evaluate_t2v(m, p) : evaluate_v2t(m, p); };
      const RetrievalReport base = eval(r);
      if (!(0.0 <= base.r1 && base.r1 <= base.r5 && base.r5 <= base.r10 && base.r10 <= 100.0)) ++monotone;
      const RetrievalReport e = eval(r.array().exp().matrix());
      const RetrievalReport a = eval((2.5 * r.array() + 3.0).matrix());
      const RetrievalReport c = eval(r.array().cube().matrix());
      for (const RetrievalReport* x : {&e, &a, &c})
        if (x->ranks != base.ranks || x->r1 != base.r1 || x->median_rank != base.median_rank ||
            x->mean_rank != base.mean_rank)
          ++transform;
    }

    Rng init(trial);
    TdbParams params = TdbParams::random(8, 2, 1, 23, init);
    const Eigen::Index m = 2 + trial % 11;
    const Matrix f = rng.normal_matrix(m, 8, 1.0);
    std::vector<Eigen::Index> perm(static_cast<std::size_t>(m));
    for (Eigen::Index i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    Matrix g(m, 8);
    for (Eigen::Index i = 0; i < m; ++i) g.row(i) = f.row(perm[static_cast<std::size_t>(i)]);
    const Matrix gf = tdb_forward(t, t.constant(f), params, TdbVariant::MeanPool).global.value();
    const Matrix gg = tdb_forward(t, t.constant(g), params, TdbVariant::MeanPool).global.value();
    if (gf != gg) ++meanpool;
  }
  o.pass = singleton + transpose + monotone + transform + meanpool == 0;
  o.detail << "violations over 100 trials: B=1 loss " << singleton << ", transpose " << transpose << ", R@K order "
           << monotone << ", monotone transforms " << transform << ", MeanPool permutation (bitwise) " << meanpool;
  report("analytic identities", o);
}

/// Central acceptance region of Binomial(n, 1/2) at 95%, in successes.
std::pair<long, long> binomial_region(long n) {
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  for (long k = 0; k <= n; ++k)
    pmf[static_cast<std::size_t>(k)] =
        std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  long lo = 0;
  double tail = 0.0;
  while (tail + pmf[static_cast<std::size_t>(lo)] <= 0.025) tail += pmf[static_cast<std::size_t>(lo++)];
  return {lo, n - lo};
}

void order_sensitivity() {
  const SyntheticData synth = synthesize_dataset(testing::order_data_config(7));

  Outcome base;
  const testing::OrderRun mp =
      testing::run_order_experiment(synth, testing::order_train_config(TdbVariant::MeanPool, TabVariant::None, 7), nullptr);
  const long n = static_cast<long>(mp.test_queries);
  const auto [lo, hi] = binomial_region(n);
  const double hits = mp.sibling_r1 / 100.0 * static_cast<double>(n);
  base.pass = hits >= static_cast<double>(lo) && hits <= static_cast<double>(hi);
  base.detail << "MeanPool sibling R@1 " << mp.sibling_r1 << "% (" << hits << " / " << n << " held-out queries), 95% region ["
              << lo << ", " << hi << "], " << mp.steps << " steps";
  report("order sensitivity: MeanPool at chance", base);

  Outcome tdb;
  const testing::OrderRun td =
      testing::run_order_experiment(synth, testing::order_train_config(TdbVariant::Tdb, TabVariant::Tdb, 7), nullptr);
  tdb.pass = td.sibling_r1 >= 90.0 && td.seconds <= 300.0;
  tdb.detail << "TDB+TAB-TDB sibling R@1 " << td.sibling_r1 << "% >= 90% over " << td.test_queries << " queries, "
             << td.steps << " steps in " << td.seconds << " s <= 300 s";
  report("order sensitivity: TDB+TAB-TDB", tdb);
}

void convergence() {
  SyntheticConfig s;
  s.num_pairs = 8;
  s.num_concepts = 16;
  s.frames = 8;
  s.tokens = 8;
  s.dim = 32;
  s.noise = 0.0;
  s.seed = 3;
  const SyntheticData synth = synthesize_dataset(s);
  const Dataset data = Dataset::from_files(synth.videos, synth.texts, synth.manifest);
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = 200;
  c.seed = 4;
  c.tokens = 8;
  c.model.dim = 32;
  c.model.heads = 4;
  c.model.temporal_layers = 1;
  c.model.frames = 8;
  c.model.centers = 5;
  Trainer a(c, data), b(c, data);
  const TrainResult ra = a.run(), rb = b.run();
  Outcome o;
  const double first = ra.step_losses.front(), last = ra.step_losses.back();
  o.pass = ra.step_losses.size() == 200 && last < 0.05 * first && ra.step_losses == rb.step_losses;
  o.detail << "loss " << first << " -> " << last << " (" << 100.0 * last / first << "% < 5%) in " << ra.step_losses.size()
           << " steps, rerun " << (ra.step_losses == rb.step_losses ? "identical" : "differs");
  report("convergence sanity", o);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void pipeline_determinism() {
  Outcome o;
  const std::string bin = TVR_CLI_PATH;
  std::string reports[2];
  for (int run = 0; run < 2; ++run) {
    testing::TempDir dir("accept_pipeline_" + std::to_string(run));
    const std::string d = (dir / "data").string(), ck = (dir / "ck.bin").string(), rep = (dir / "report.txt").string();
    const std::string cmd = bin + " synth --out " + d + " --pairs 32 --dim 32 --frames 8 --tokens 8 --test-fraction 0.25" +
                            " --seed 5 > /dev/null && " + bin + " train --data " + d + " --out " + ck +
                            " --epochs 3 --batch 8 --heads 4 --centers 3 --seed 5 > /dev/null && " + bin +
                            " eval --checkpoint " + ck + " --data " + d + " > " + rep;
    if (std::system(cmd.c_str()) != 0) o.pass = false;
    reports[run] = slurp(rep);
  }
  if (reports[0].empty() || reports[0] != reports[1]) o.pass = false;
  o.detail << "two synth/train/eval runs, report " << reports[0].size() << " bytes, "
           << (reports[0] == reports[1] ? "byte-identical" : "different");
  report("pipeline determinism", o);
}

void format_fuzz() {
  SyntheticConfig s;
  s.num_pairs = 6;
  s.frames = 5;
  s.tokens = 6;
  s.dim = 8;
  s.seed = 11;
  const SyntheticData synth = synthesize_dataset(s);
  Outcome o;
  Rng rng(303);
  int rejected = 0, accepted = 0, unexpected = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    auto bytes = encode_embeddings(trial % 2 == 0 ? synth.videos : synth.texts);
    const std::size_t pos = static_cast<std::size_t>(rng.uniform() * static_cast<double>(bytes.size()));
    const auto delta = static_cast<std::uint8_t>(1 + static_cast<int>(rng.uniform() * 255.0));
    bytes[pos] = static_cast<std::uint8_t>(bytes[pos] ^ delta);
    try {
      validate(parse_embeddings(bytes));
      ++accepted;
    } catch (const FormatError&) {
      ++rejected;
    } catch (const ValidationError&) {
      ++rejected;
    } catch (...) {
      ++unexpected;
    }
  }
  o.pass = rejected == 1000;
  o.detail << "1000 single-byte corruptions: " << rejected << " rejected, " << accepted << " accepted, " << unexpected
           << " unexpected exceptions";
  report("file-format fuzz", o);
}

}  // namespace
}  // namespace tvr

int main() {
  tvr::gradient_suite();
  tvr::oracle_equivalence();
  tvr::analytic_identities();
  tvr::order_sensitivity();
  tvr::convergence();
  tvr::pipeline_determinism();
  tvr::format_fuzz();
  std::cout << (tvr::failures == 0 ? "ALL PASS" : std::to_string(tvr::failures) + " FAILED") << std::endl;
  return tvr::failures == 0 ? 0 : 1;
}
