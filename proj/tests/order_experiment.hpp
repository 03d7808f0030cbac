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

#include <chrono>
#include <iosfwd>
#include <string>

#include "tvr/dataset.hpp"
#include "tvr/model.hpp"
#include "tvr/retrieval.hpp"
#include "tvr/synthetic.hpp"
#include "tvr/trainer.hpp"

namespace tvr::testing {

struct OrderRun {
  double sibling_r1 = 0.0;
  double seconds = 0.0;
  long steps = 0;
  std::size_t test_queries = 0;
};

/// 128 sibling sets at m=8, d=64. The last 64 sets are held out and scored.
inline SyntheticConfig order_data_config(std::uint64_t seed) {
  SyntheticConfig c;
  c.num_concepts = 16;
  c.num_pairs = 256;
  c.frames = 8;
  c.tokens = 8;
  c.dim = 64;
  c.noise = 0.1;
  c.segments = 4;
  c.order_discriminative = true;
  c.test_fraction = 0.5;
  c.seed = seed;
  return c;
}

inline TrainConfig order_train_config(TdbVariant tdb, TabVariant tab, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.batch_size = 16;
  cfg.epochs = 20;
  cfg.adam.lr = 1e-3;
  cfg.w = 0.5;
  cfg.seed = seed;
  cfg.tokens = 8;
  cfg.model.dim = 64;
  cfg.model.heads = 4;
  cfg.model.temporal_layers = 1;
  cfg.model.frames = 8;
  cfg.model.centers = 5;
  cfg.model.tdb_variant = tdb;
  cfg.model.tab_variant = tab;
  return cfg;
}

inline OrderRun run_order_experiment(const SyntheticData& synth, const TrainConfig& cfg, std::ostream* log) {
  const Dataset data = Dataset::from_files(synth.videos, synth.texts, synth.manifest);
  const auto start = std::chrono::steady_clock::now();
  Trainer trainer(cfg, data);
  trainer.run(log);
  OrderRun out;
  out.steps = trainer.optimizer().steps();

  const EvalSubset subset = select_split(data, Split::Test);
  const Eigen::MatrixXd s = build_similarity_matrix(trainer.model(), data, subset, cfg.w);
  std::vector<std::string> ids;
  for (std::size_t v : subset.videos) ids.push_back(data.videos[v].id);
  out.sibling_r1 = group_recall_at_1(s, subset.pairing, sibling_groups(ids));
  out.test_queries = subset.texts.size();
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace tvr::testing
