/*
 * Copyright 2026 The AMI Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "ami_lab/game.h"

#include <cmath>
#include <cstdlib>
#include <limits>

#include "gtest/gtest.h"

namespace ami_lab {
namespace {

GameConfig OneHotGame(int trials, uint64_t seed) {
  GameConfig cfg;
  cfg.batch_size = 5;
  cfg.trials = trials;
  cfg.seed = seed;
  cfg.attack.m = 30;
  cfg.attack.r = 5;
  cfg.attack.train.epochs = 200;
  cfg.threads = 1;
  return cfg;
}

// Textbook Wilson score interval, written out independently.
Interval Wilson(double k, double n) {
  const double z = 1.959963984540054;
  const double p = k / n;
  const double denom = 1 + z * z / n;
  const double center = (p + z * z / (2 * n)) / denom;
  const double half =
      z / denom * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n));
  return {center - half, center + half};
}

TEST(WilsonTest, TabulatedValue) {
  const Interval ci = WilsonInterval(5, 10);
  EXPECT_NEAR(ci.low, 0.2366, 1e-4);
  EXPECT_NEAR(ci.high, 0.7634, 1e-4);
}

TEST(WilsonTest, MatchesFormula) {
  for (int n : {1, 7, 50, 1000}) {
    for (int k = 0; k <= n; k += std::max(1, n / 9)) {
      const Interval got = WilsonInterval(k, n);
      const Interval want = Wilson(k, n);
      EXPECT_NEAR(got.low, want.low, 1e-12) << k << "/" << n;
      EXPECT_NEAR(got.high, want.high, 1e-12) << k << "/" << n;
      EXPECT_GE(got.low, 0.0);
      EXPECT_LE(got.high, 1.0);
    }
  }
}

TEST(WilsonTest, EmptyIsWholeUnitInterval) {
  const Interval ci = WilsonInterval(0, 0);
  EXPECT_EQ(ci.low, 0.0);
  EXPECT_EQ(ci.high, 1.0);
}

TEST(SummarizeTest, AdvantageIsMeanOfRates) {
  OutcomeCounts c;
  c.true_positive = 9;
  c.false_negative = 1;
  c.true_negative = 7;
  c.false_positive = 3;
  const SuccessReport r = Summarize(c, 2.0);
  EXPECT_DOUBLE_EQ(r.tpr, 0.9);
  EXPECT_DOUBLE_EQ(r.tnr, 0.7);
  EXPECT_DOUBLE_EQ(r.advantage, 0.8);
  EXPECT_EQ(r.trials, 20);
  EXPECT_EQ(r.epsilon, 2.0);
  EXPECT_DOUBLE_EQ(r.advantage_ci.low,
                   0.5 * (r.tpr_ci.low + r.tnr_ci.low));
}

TEST(SummarizeTest, AdvantageIdentityOnBalancedCounts) {
  // With equal class sizes, advantage = 1/2 + 1/2 (P[b'=1|b=1] - P[b'=1|b=0]).
  for (int tp = 0; tp <= 10; ++tp) {
    for (int fp = 0; fp <= 10; fp += 3) {
      OutcomeCounts c;
      c.true_positive = tp;
      c.false_negative = 10 - tp;
      c.false_positive = fp;
      c.true_negative = 10 - fp;
      const SuccessReport r = Summarize(c, 1.0);
      EXPECT_NEAR(r.advantage, 0.5 + 0.5 * (tp / 10.0 - fp / 10.0), 1e-12);
      EXPECT_NEAR(r.advantage,
                  static_cast<double>(tp + 10 - fp) / 20.0, 1e-12);
    }
  }
}

TEST(OutcomeCountsTest, AddAndMerge) {
  OutcomeCounts a, b;
  a.Add(1, 1);
  a.Add(1, 0);
  b.Add(0, 0);
  b.Add(0, 1);
  a.Merge(b);
  EXPECT_EQ(a.true_positive, 1);
  EXPECT_EQ(a.false_negative, 1);
  EXPECT_EQ(a.true_negative, 1);
  EXPECT_EQ(a.false_positive, 1);
  EXPECT_EQ(a.total(), 4);
}

TEST(GameTest, CoinFlipIsAtChance) {
  GameConfig cfg = OneHotGame(4000, 3);
  cfg.adversary = AdversaryKind::kCoinFlip;
  auto report = RunCampaign(cfg, DataDistribution::OneHot(8));
  ASSERT_TRUE(report.ok());
  const double sigma = 0.5 / std::sqrt(4000.0);
  EXPECT_NEAR(report->advantage, 0.5, 3 * sigma);
  EXPECT_LE(report->advantage_ci.low, 0.5);
  EXPECT_GE(report->advantage_ci.high, 0.5);
}

TEST(GameTest, OneHotMemberIsAlwaysDetected) {
  const GameConfig cfg = OneHotGame(1, 0);
  const DataDistribution dist = DataDistribution::OneHot(8);
  int members = 0;
  for (uint64_t s = 0; s < 40; ++s) {
    auto outcome = RunTrial(cfg, dist, s);
    ASSERT_TRUE(outcome.ok());
    if (outcome->b != 1) continue;
    ++members;
    EXPECT_EQ(outcome->b_prime, 1) << "seed " << s;
    EXPECT_GT(outcome->g_t_magnitude, 0.0);
  }
  EXPECT_GT(members, 5);
}

TEST(GameTest, RunTrialDeterministic) {
  const GameConfig cfg = OneHotGame(1, 0);
  const DataDistribution dist = DataDistribution::RandomMixture(8, 3, 1, 1, 4);
  for (uint64_t s : {1u, 17u, 99u}) {
    auto a = RunTrial(cfg, dist, s);
    auto b = RunTrial(cfg, dist, s);
    ASSERT_TRUE(a.ok() && b.ok());
    EXPECT_EQ(a->b, b->b);
    EXPECT_EQ(a->b_prime, b->b_prime);
    EXPECT_EQ(a->g_t_magnitude, b->g_t_magnitude);
  }
}

TEST(GameTest, ThreadCountDoesNotChangeResults) {
  GameConfig cfg = OneHotGame(24, 11);
  const DataDistribution dist = DataDistribution::RandomMixture(8, 3, 1, 1, 4);
  auto one = RunCampaign(cfg, dist);
  cfg.threads = 4;
  auto four = RunCampaign(cfg, dist);
  ASSERT_TRUE(one.ok() && four.ok());
  EXPECT_EQ(one->counts.true_positive, four->counts.true_positive);
  EXPECT_EQ(one->counts.true_negative, four->counts.true_negative);
  EXPECT_EQ(one->advantage, four->advantage);
}

TEST(GameTest, ThreadsFromEnvironment) {
  EXPECT_EQ(ResolveThreads(3), 3);
  setenv("AMI_LAB_THREADS", "5", 1);
  EXPECT_EQ(ResolveThreads(0), 5);
  setenv("AMI_LAB_THREADS", "junk", 1);
  EXPECT_GE(ResolveThreads(0), 1);
  unsetenv("AMI_LAB_THREADS");
  EXPECT_GE(ResolveThreads(0), 1);
}

TEST(GameTest, NoMechanismReportsInfiniteEpsilon) {
  auto report = RunCampaign(OneHotGame(4, 1), DataDistribution::OneHot(6));
  ASSERT_TRUE(report.ok());
  EXPECT_EQ(report->epsilon, std::numeric_limits<double>::infinity());
}

TEST(GameTest, DivergedTrainingsExcludedOrCountedAsLosses) {
  GameConfig cfg = OneHotGame(6, 2);
  cfg.attack.restarts = 0;
  cfg.attack.train.optimizer = Optimizer::kSgd;
  cfg.attack.train.learning_rate = 1.0;
  // Inputs large enough that the first forward pass overflows.
  std::vector<MixtureComponent> comps(2);
  for (int k = 0; k < 2; ++k) {
    comps[k].mean = Vector::Constant(3, k == 0 ? 1e307 : -1e307);
    comps[k].stddev = Vector::Constant(3, 1e306);
  }
  auto mixture = DataDistribution::GaussianMixture(comps);
  ASSERT_TRUE(mixture.ok());
  const DataDistribution& dist = *mixture;
  auto lenient = RunCampaign(cfg, dist);
  EXPECT_FALSE(lenient.ok());
  cfg.strict = true;
  auto strict = RunCampaign(cfg, dist);
  ASSERT_TRUE(strict.ok()) << strict.status();
  EXPECT_EQ(strict->failures, 6);
  EXPECT_EQ(strict->advantage, 0.0);
}

TEST(GameTest, SweepOfOneMatchesCampaign) {
  GameConfig cfg = OneHotGame(10, 5);
  const int d = 8;
  LdpMechanismConfig mech;
  mech.epsilon = 6.0;
  mech.encoding.features = d;
  mech.encoding.bits_per_feature = 4;
  cfg.mechanism = mech;
  cfg.attack.l_draws = 20;
  const DataDistribution dist = DataDistribution::OneHot(d);
  auto sweep = SweepEpsilon(cfg, dist, {6.0});
  auto single = RunCampaign(cfg, dist);
  ASSERT_TRUE(sweep.ok() && single.ok());
  ASSERT_EQ(sweep->size(), 1u);
  EXPECT_EQ((*sweep)[0].advantage, single->advantage);
  EXPECT_EQ((*sweep)[0].epsilon, 6.0);
}

TEST(GameTest, InvalidConfigRejected) {
  const DataDistribution dist = DataDistribution::OneHot(4);
  GameConfig cfg = OneHotGame(0, 1);
  EXPECT_FALSE(ValidateGameConfig(cfg, dist).ok());
  cfg = OneHotGame(2, 1);
  cfg.batch_size = 1;
  EXPECT_FALSE(RunCampaign(cfg, dist).ok());
}

}  // namespace
}  // namespace ami_lab
