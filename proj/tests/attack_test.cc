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

#include "ami_lab/attack.h"

#include <cmath>
#include <random>

#include "gtest/gtest.h"

namespace ami_lab {
namespace {

SampleVector Basis(int d, int i) {
  SampleVector e = SampleVector::Zero(d);
  e(i) = 1.0;
  return e;
}

Vector Vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

AttackConfig SmallAttack(int m, int r, uint64_t seed) {
  AttackConfig cfg;
  cfg.m = m;
  cfg.r = r;
  cfg.train.seed = seed;
  return cfg;
}

TEST(AmiInitTest, OneHotTargetSeparated) {
  const DataDistribution dist = DataDistribution::OneHot(8);
  const SampleVector t = Basis(8, 0);
  auto planted = AmiInit(t, dist, SmallAttack(7, 5, 1));
  ASSERT_TRUE(planted.ok());
  EXPECT_TRUE(planted->trained);
  EXPECT_TRUE(planted->separates_training_set);
  EXPECT_GT(*NeuronValue(planted->params, t), 0.0);
  EXPECT_EQ(planted->target, t);
  EXPECT_FALSE(planted->mechanism.has_value());
}

TEST(AmiInitTest, SameSeedSameModel) {
  const DataDistribution dist = DataDistribution::RandomMixture(6, 3, 1, 1, 2);
  Rng rng(5);
  const SampleVector t = dist.Sample(rng);
  auto a = AmiInit(t, dist, SmallAttack(40, 6, 9));
  auto b = AmiInit(t, dist, SmallAttack(40, 6, 9));
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_EQ(a->params.w, b->params.w);
  EXPECT_EQ(a->params.h, b->params.h);
  EXPECT_EQ(a->final_loss, b->final_loss);
}

TEST(AmiInitTest, TargetCopiesDroppedFromNegatives) {
  // Half the draws equal the target; they must not be labelled 0.
  const DataDistribution dist = DataDistribution::OneHot(2);
  auto planted = AmiInit(Basis(2, 0), dist, SmallAttack(50, 3, 4));
  ASSERT_TRUE(planted.ok());
  EXPECT_TRUE(planted->separates_training_set);
}

TEST(AmiInitTest, AllDrawsEqualTargetIsAnError) {
  std::vector<MixtureComponent> one(1);
  one[0].mean = Vec({1.0, 2.0});
  one[0].stddev = Vector::Zero(2);
  auto dist = DataDistribution::GaussianMixture(one);
  ASSERT_TRUE(dist.ok());
  EXPECT_FALSE(AmiInit(Vec({1.0, 2.0}), *dist, SmallAttack(10, 2, 1)).ok());
}

TEST(AmiInitTest, RejectsBadTarget) {
  const DataDistribution dist = DataDistribution::OneHot(4);
  EXPECT_FALSE(AmiInit(Basis(3, 0), dist, SmallAttack(5, 2, 1)).ok());
  SampleVector t = Basis(4, 0);
  t(1) = std::nan("");
  EXPECT_FALSE(AmiInit(t, dist, SmallAttack(5, 2, 1)).ok());
}

TEST(AmiInitTest, RejectsBadConfig) {
  const DataDistribution dist = DataDistribution::OneHot(4);
  AttackConfig cfg = SmallAttack(0, 2, 1);
  EXPECT_FALSE(AmiInit(Basis(4, 0), dist, cfg).ok());
  cfg = SmallAttack(5, 2, 1);
  cfg.l_draws = 0;
  EXPECT_FALSE(ValidateAttackConfig(cfg).ok());
  cfg = SmallAttack(5, 2, 1);
  cfg.zero_tolerance = -1;
  EXPECT_FALSE(ValidateAttackConfig(cfg).ok());
}

TEST(AmiInitLdpTest, FreshRandomizedTargetsClassifiedPositive) {
  const int d = 16;
  const DataDistribution dist = DataDistribution::RandomMixture(d, 4, 1, 1, 3);
  LdpMechanismConfig mech;
  mech.epsilon = 10.0;
  mech.encoding.features = d;
  mech.encoding.bits_per_feature = 8;
  const auto [lo, hi] = dist.ValueRange(1);
  mech.encoding.value_min = lo;
  mech.encoding.value_max = hi;
  Rng rng(8);
  const SampleVector t = dist.Sample(rng);
  AttackConfig cfg = SmallAttack(200, 20, 6);
  auto planted = AmiInitLdp(t, dist, mech, cfg);
  ASSERT_TRUE(planted.ok());
  ASSERT_TRUE(planted->mechanism.has_value());
  auto randomizer = LdpRandomizer::Create(mech);
  ASSERT_TRUE(randomizer.ok());
  Rng fresh(1234);
  int positive = 0;
  constexpr int kDraws = 2000;
  for (int i = 0; i < kDraws; ++i) {
    if (*NeuronValue(planted->params, randomizer->Perturb(t, fresh)) > 0) {
      ++positive;
    }
  }
  EXPECT_GE(positive, 0.9 * kDraws);
}

TEST(AmiInitLdpTest, EncodingMustCoverDistribution) {
  const DataDistribution dist = DataDistribution::OneHot(4);
  LdpMechanismConfig mech;
  mech.encoding.features = 3;
  EXPECT_FALSE(AmiInitLdp(Basis(4, 0), dist, mech, SmallAttack(5, 2, 1)).ok());
}

TEST(AmiInitLdpTest, SameSeedSameModel) {
  const DataDistribution dist = DataDistribution::OneHot(6);
  LdpMechanismConfig mech;
  mech.epsilon = 5.0;
  mech.encoding.features = 6;
  mech.encoding.bits_per_feature = 4;
  AttackConfig cfg = SmallAttack(30, 4, 2);
  cfg.l_draws = 10;
  auto a = AmiInitLdp(Basis(6, 1), dist, mech, cfg);
  auto b = AmiInitLdp(Basis(6, 1), dist, mech, cfg);
  ASSERT_TRUE(a.ok() && b.ok());
  EXPECT_EQ(a->params.w, b->params.w);
}

TEST(AmiDetectTest, ExactZeroIsNoMember) {
  PlantedModel planted;
  planted.params = InitializeParams(3, 2, 1);
  GradientBundle g;
  g.dw = Matrix::Zero(3, 2);
  g.dh = Vector::Zero(3);
  EXPECT_EQ(*AmiDetect(planted, g, 1e-12), 0);
}

TEST(AmiDetectTest, SmallNonZeroAboveToleranceIsMember) {
  PlantedModel planted;
  planted.params = InitializeParams(3, 2, 1);
  GradientBundle g;
  g.dw = Matrix::Zero(3, 2);
  g.dh = Vec({1e-3, 0, 0});
  EXPECT_EQ(*AmiDetect(planted, g, 1e-9), 1);
}

TEST(AmiDetectTest, ShapeMismatchIsAnError) {
  PlantedModel planted;
  planted.params = InitializeParams(3, 2, 1);
  GradientBundle g;
  g.dw = Matrix::Zero(2, 2);
  g.dh = Vector::Zero(2);
  EXPECT_FALSE(AmiDetect(planted, g, 0.0).ok());
}

TEST(AmiDetectTest, BatchWithoutTargetGivesExactZero) {
  const DataDistribution dist = DataDistribution::OneHot(8);
  auto planted = AmiInit(Basis(8, 0), dist, SmallAttack(40, 5, 3));
  ASSERT_TRUE(planted.ok());
  ASSERT_TRUE(planted->separates_training_set);
  Matrix batch(7, 8);
  for (int i = 1; i < 8; ++i) batch.row(i - 1) = Basis(8, i).transpose();
  auto g = ClientGradient(planted->params, batch);
  ASSERT_TRUE(g.ok());
  EXPECT_TRUE((g->dh.array() == 0.0).all());
  EXPECT_EQ(*AmiDetect(*planted, *g, 0.0), 0);
  batch.row(3) = Basis(8, 0).transpose();
  EXPECT_EQ(*AmiDetect(*planted, *ClientGradient(planted->params, batch), 0.0),
            1);
}

TEST(LinearCounterexampleTest, PlusBranch) {
  auto x = LinearCounterexample(Vec({1, 0}), Vec({1, 0}), 1.0);
  ASSERT_TRUE(x.ok());
  EXPECT_EQ(*x, Vec({2, 0}));
  EXPECT_DOUBLE_EQ(Vec({1, 0}).dot(*x), 2.0);
}

TEST(LinearCounterexampleTest, MinusBranch) {
  auto x = LinearCounterexample(Vec({-1, 2}), Vec({0, 1}), 1.0);
  ASSERT_TRUE(x.ok());
  EXPECT_EQ(*x, Vec({-1, 1}));
  EXPECT_DOUBLE_EQ(Vec({-1, 2}).dot(*x), 3.0);
}

TEST(LinearCounterexampleTest, RandomRowsAlwaysYieldCounterexample) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  int found = 0;
  int tried = 0;
  while (tried < 100) {
    const int d = 1 + static_cast<int>(rng() % 10);
    Vector w(d), t(d);
    for (int j = 0; j < d; ++j) {
      w(j) = n(rng);
      t(j) = n(rng);
    }
    if (!(w.dot(t) > 0)) continue;
    ++tried;
    auto x = LinearCounterexample(w, t, 0.5 + std::abs(n(rng)));
    if (x.ok() && w.dot(*x) > 0 && *x != t) ++found;
  }
  EXPECT_EQ(found, 100);
}

TEST(LinearCounterexampleTest, PreconditionsEnforced) {
  EXPECT_FALSE(LinearCounterexample(Vec({1, 0}), Vec({-1, 0}), 1.0).ok());
  EXPECT_FALSE(LinearCounterexample(Vec({1, 0}), Vec({1, 0}), 0.0).ok());
  EXPECT_FALSE(LinearCounterexample(Vec({1}), Vec({1, 0}), 1.0).ok());
}

TEST(PlantTest, TouchesOnlyPlantedRowsAndChosenNeuron) {
  TwoLayerWeights model;
  model.layer1 = Matrix::Random(12, 5);
  model.layer2 = Matrix::Random(4, 12);
  const TwoLayerWeights before = model;
  const ChosenNeuronParams params = InitializeParams(3, 5, 7);
  ASSERT_TRUE(PlantChosenNeuron(params, 6, 2, model).ok());
  for (int i = 0; i < 12; ++i) {
    if (i >= 6 && i < 9) {
      EXPECT_EQ(model.layer1.row(i), params.w.row(i - 6));
    } else {
      EXPECT_EQ(model.layer1.row(i), before.layer1.row(i));
    }
  }
  for (int k = 0; k < 4; ++k) {
    if (k != 2) {
      EXPECT_EQ(model.layer2.row(k), before.layer2.row(k));
      continue;
    }
    for (int j = 0; j < 12; ++j) {
      EXPECT_EQ(model.layer2(k, j), j >= 6 && j < 9 ? params.h(j - 6) : 0.0);
    }
  }
}

TEST(PlantTest, OutOfRangeRejected) {
  TwoLayerWeights model{Matrix::Zero(4, 3), Matrix::Zero(2, 4)};
  const ChosenNeuronParams params = InitializeParams(3, 3, 1);
  EXPECT_FALSE(PlantChosenNeuron(params, 2, 0, model).ok());
  EXPECT_FALSE(PlantChosenNeuron(params, 0, 2, model).ok());
}

}  // namespace
}  // namespace ami_lab
