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

#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>

#include "test_support.hpp"
#include "tvr/config.hpp"
#include "tvr/synthetic.hpp"
#include "tvr/trainer.hpp"

namespace tvr {
namespace {

Dataset noiseless_pairs(int pairs, std::uint64_t seed) {
  SyntheticConfig s;
  s.num_pairs = pairs;
  s.num_concepts = 16;
  s.frames = 8;
  s.tokens = 8;
  s.dim = 32;
  s.noise = 0.0;
  s.seed = seed;
  const SyntheticData d = synthesize_dataset(s);
  return Dataset::from_files(d.videos, d.texts, d.manifest);
}

TrainConfig small_config() {
  TrainConfig c;
  c.batch_size = 8;
  c.epochs = 3;
  c.seed = 4;
  c.tokens = 8;
  c.model.dim = 32;
  c.model.heads = 4;
  c.model.temporal_layers = 1;
  c.model.frames = 8;
  c.model.centers = 5;
  return c;
}

TEST(Trainer, SameSeedSameLossCurve) {
  const Dataset d = noiseless_pairs(16, 1);
  Trainer a(small_config(), d), b(small_config(), d);
  std::ostringstream la, lb;
  const TrainResult ra = a.run(&la), rb = b.run(&lb);
  EXPECT_EQ(ra.step_losses, rb.step_losses);
  EXPECT_EQ(la.str(), lb.str());
  EXPECT_EQ(ra.step_losses.size(), 6u);
}

TEST(Trainer, LogLineFormat) {
  const Dataset d = noiseless_pairs(8, 1);
  Trainer t(small_config(), d);
  std::ostringstream log;
  t.run(&log);
  std::istringstream lines(log.str());
  std::string line;
  int n = 0;
  while (std::getline(lines, line)) {
    ++n;
    std::istringstream ls(line);
    std::string k[6];
    double v[5];
    std::string val;
    ls >> k[0] >> v[0] >> k[1] >> v[1] >> k[2] >> v[2] >> k[3] >> v[3] >> k[4] >> v[4] >> k[5] >> val;
    ASSERT_TRUE(ls) << line;
    EXPECT_EQ(k[0], "epoch");
    EXPECT_EQ(k[2], "loss");
    EXPECT_EQ(k[5], "val_r1");
    EXPECT_EQ(val, "-");
  }
  EXPECT_EQ(n, 3);
}

TEST(Trainer, NoiselessSetConverges) {
  const Dataset d = noiseless_pairs(8, 2);
  TrainConfig c = small_config();
  c.epochs = 200;
  Trainer t(c, d);
  const TrainResult r = t.run();
  ASSERT_EQ(r.step_losses.size(), 200u);
  EXPECT_LT(r.step_losses.back(), 0.05 * r.step_losses.front());
}

TEST(Trainer, MaxStepsStopsEarly) {
  const Dataset d = noiseless_pairs(16, 1);
  TrainConfig c = small_config();
  c.max_steps = 3;
  Trainer t(c, d);
  EXPECT_EQ(t.run().step_losses.size(), 3u);
  EXPECT_EQ(t.optimizer().steps(), 3);
}

TEST(Trainer, GlobalOnlyWeightNeverTouchesAlignment) {
  const Dataset d = noiseless_pairs(8, 3);
  TrainConfig c = small_config();
  c.w = 1.0;
  Trainer t(c, d);
  const Model before = Model::init(c.model, c.seed);
  t.run();
  for (ad::Parameter* p : t.model().tab.parameters()) {
    EXPECT_EQ(p->grad, Matrix::Zero(p->grad.rows(), p->grad.cols())) << p->name;
  }
  EXPECT_EQ(t.model().tab.shared.centers.value, before.tab.shared.centers.value);
  EXPECT_TRUE(std::isnan(t.evaluate_loss({0, 1}).aligned));
}

TEST(Trainer, NonFiniteLossNamesTheBatch) {
  const Dataset d = noiseless_pairs(8, 3);
  Trainer t(small_config(), d);
  t.model().tdb.temporal[0].w1.value(0, 0) = std::nan("");
  try {
    t.train_step({2, 5});
    FAIL();
  } catch (const TrainingError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("step 1"), std::string::npos) << msg;
    EXPECT_NE(msg.find(d.texts[d.pairs[2].text].id), std::string::npos) << msg;
    EXPECT_NE(msg.find(d.texts[d.pairs[5].text].id), std::string::npos) << msg;
  }
}

TEST(Trainer, LiteralScaleStaysAtOne) {
  const Dataset d = noiseless_pairs(8, 3);
  TrainConfig c = small_config();
  c.model.literal_eq7 = true;
  Trainer t(c, d);
  t.run();
  EXPECT_EQ(t.model().logit_scale_value(), 1.0);
}

TEST(Trainer, LogitScaleClampedAtHundred) {
  const Dataset d = noiseless_pairs(8, 3);
  Trainer t(small_config(), d);
  EXPECT_NEAR(t.model().logit_scale_value(), 1.0 / 0.07, 1e-9);
  t.model().log_logit_scale.value(0, 0) = 9.0;
  t.model().clamp_logit_scale();
  EXPECT_NEAR(t.model().logit_scale_value(), 100.0, 1e-9);
}

TEST(Trainer, EveryVariantTrainsOneStep) {
  const Dataset d = noiseless_pairs(8, 4);
  for (TdbVariant tv : {TdbVariant::Tdb, TdbVariant::Sub, TdbVariant::Mlp, TdbVariant::All, TdbVariant::MeanPool,
                        TdbVariant::TemporalTransformer}) {
    for (TabVariant av : {TabVariant::None, TabVariant::Base, TabVariant::Temporal, TabVariant::Transformer,
                          TabVariant::Tdb}) {
      TrainConfig c = small_config();
      c.model.tdb_variant = tv;
      c.model.tab_variant = av;
      Trainer t(c, d);
      const StepLoss l = t.train_step({0, 1, 2, 3});
      EXPECT_TRUE(std::isfinite(l.total)) << to_string(tv) << "/" << to_string(av);
    }
  }
}

TEST(Trainer, DimensionMismatchRejected) {
  const Dataset d = noiseless_pairs(8, 3);
  TrainConfig c = small_config();
  c.model.dim = 16;
  EXPECT_THROW(Trainer(c, d), std::invalid_argument);
}

TEST(Config, TextRoundTripAndErrors) {
  TrainConfig c = small_config();
  c.w = 0.4;
  c.adam.lr = 3e-4;
  c.model.tab_variant = TabVariant::Transformer;
  c.model.keep_difference_tokens = true;
  const TrainConfig back = TrainConfig::parse(c.to_text());
  EXPECT_EQ(back.to_text(), c.to_text());
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_NE(TrainConfig{}.hash(), c.hash());

  EXPECT_EQ(TrainConfig::parse("# comment\n\n  centers = 7  \n").model.centers, 7);
  EXPECT_THROW(TrainConfig::parse("centres = 7\n"), std::invalid_argument);
  EXPECT_THROW(TrainConfig::parse("centers 7\n"), std::invalid_argument);
  EXPECT_THROW(TrainConfig::parse("centers = seven\n"), std::invalid_argument);
  EXPECT_THROW(TrainConfig::parse("literal_eq7 = maybe\n"), std::invalid_argument);

  TrainConfig bad = small_config();
  bad.w = 1.5;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.model.heads = 3;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.model.centers = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Config, SeedFromEnvironment) {
  std::uint64_t seed = 3;
  ::unsetenv("TVE_SEED");
  EXPECT_FALSE(seed_from_env(seed));
  EXPECT_EQ(seed, 3u);
  ::setenv("TVE_SEED", "77", 1);
  EXPECT_TRUE(seed_from_env(seed));
  EXPECT_EQ(seed, 77u);
  ::setenv("TVE_SEED", "x1", 1);
  EXPECT_THROW(seed_from_env(seed), std::invalid_argument);
  ::unsetenv("TVE_SEED");
}

}  // namespace
}  // namespace tvr
