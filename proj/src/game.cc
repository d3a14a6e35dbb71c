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
#include <string>
#include <thread>

#include "absl/status/status.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "ami_lab/parallel.h"
#include "ami_lab/seeds.h"
#include "ami_lab/status_macros.h"

namespace ami_lab {
namespace {

int UniformBit(Rng& rng) { return static_cast<int>(rng() >> 63); }

}  // namespace

absl::Status ValidateGameConfig(const GameConfig& cfg,
                                const DataDistribution& dist) {
  if (cfg.batch_size < 2) {
    return absl::InvalidArgumentError("batch size n must be >= 2");
  }
  if (cfg.trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  RETURN_IF_ERROR(ValidateAttackConfig(cfg.attack));
  if (cfg.mechanism.has_value()) {
    RETURN_IF_ERROR(ValidateMechanism(*cfg.mechanism));
    if (cfg.mechanism->encoding.features != dist.dim()) {
      return absl::InvalidArgumentError(absl::StrCat(
          "mechanism encodes ", cfg.mechanism->encoding.features,
          " features but the distribution has dimension ", dist.dim()));
    }
  }
  if (std::optional<int> support = dist.support_size();
      support.has_value() && *support <= cfg.batch_size &&
      dist.kind() == DataDistribution::Kind::kGaussianMixture) {
    // With n >= |support| a non-member target may not exist.
    return absl::InvalidArgumentError(absl::StrCat(
        "finite support of ", *support, " points is too small for n = ",
        cfg.batch_size));
  }
  if (dist.kind() == DataDistribution::Kind::kFileBacked &&
      dist.dataset().size() <= cfg.batch_size) {
    return absl::InvalidArgumentError(
        "dataset must hold more rows than the batch size");
  }
  return absl::OkStatus();
}

absl::StatusOr<GameOutcome> RunTrial(const GameConfig& cfg,
                                     const DataDistribution& dist,
                                     uint64_t trial_seed) {
  Rng client_rng = MakeRng(trial_seed, SeedStream::kClientData);
  ASSIGN_OR_RETURN(Matrix batch, dist.SampleBatch(cfg.batch_size, client_rng));

  GameOutcome outcome;
  Rng bit_rng = MakeRng(trial_seed, SeedStream::kChallengeBit);
  outcome.b = UniformBit(bit_rng);
  SampleVector target;
  if (outcome.b == 1) {
    std::uniform_int_distribution<int> pick(0, cfg.batch_size - 1);
    target = batch.row(pick(client_rng)).transpose();
  } else {
    ASSIGN_OR_RETURN(target, dist.SampleExcluding(batch, client_rng));
  }

  if (cfg.adversary == AdversaryKind::kCoinFlip) {
    Rng coin = MakeRng(trial_seed, SeedStream::kCoinFlip);
    outcome.b_prime = UniformBit(coin);
    outcome.win = outcome.b == outcome.b_prime;
    return outcome;
  }

  AttackConfig attack = cfg.attack;
  attack.train.seed = DeriveSeed(trial_seed, SeedStream::kAdversaryData);
  absl::StatusOr<PlantedModel> planted =
      cfg.mechanism.has_value()
          ? AmiInitLdp(target, dist, *cfg.mechanism, attack)
          : AmiInit(target, dist, attack);
  if (!planted.ok()) {
    if (absl::IsAborted(planted.status())) {
      outcome.failed = true;
      return outcome;
    }
    return planted.status();
  }
  outcome.trained = planted->trained;

  Matrix client_batch = std::move(batch);
  if (cfg.mechanism.has_value()) {
    ASSIGN_OR_RETURN(LdpRandomizer randomizer,
                     LdpRandomizer::Create(*cfg.mechanism));
    Rng noise_rng = MakeRng(trial_seed, SeedStream::kClientPerturbation);
    client_batch = randomizer.PerturbRows(client_batch, noise_rng);
  }
  ASSIGN_OR_RETURN(GradientBundle gradient,
                   ClientGradient(planted->params, client_batch));
  outcome.g_t_magnitude =
      gradient.dh.size() > 0 ? gradient.dh.cwiseAbs().maxCoeff() : 0.0;
  ASSIGN_OR_RETURN(outcome.b_prime,
                   AmiDetect(*planted, gradient, cfg.attack.zero_tolerance));
  outcome.win = outcome.b == outcome.b_prime;
  return outcome;
}

void OutcomeCounts::Add(int b, int b_prime) {
  if (b == 1) {
    (b_prime == 1 ? true_positive : false_negative) += 1;
  } else {
    (b_prime == 0 ? true_negative : false_positive) += 1;
  }
}

void OutcomeCounts::Merge(const OutcomeCounts& other) {
  true_positive += other.true_positive;
  false_negative += other.false_negative;
  true_negative += other.true_negative;
  false_positive += other.false_positive;
}

Interval WilsonInterval(int64_t successes, int64_t n) {
  if (n <= 0) return {0.0, 1.0};
  constexpr double kZ = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(successes) / nn;
  const double z2 = kZ * kZ;
  const double denom = 1.0 + z2 / nn;
  const double center = (p + z2 / (2.0 * nn)) / denom;
  const double half =
      kZ / denom * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

SuccessReport Summarize(const OutcomeCounts& counts, double epsilon) {
  SuccessReport report;
  report.epsilon = epsilon;
  report.counts = counts;
  report.trials = counts.total();
  const int64_t members = counts.true_positive + counts.false_negative;
  const int64_t non_members = counts.true_negative + counts.false_positive;
  report.tpr = members > 0 ? static_cast<double>(counts.true_positive) /
                                 static_cast<double>(members)
                           : 0.5;
  report.tnr = non_members > 0 ? static_cast<double>(counts.true_negative) /
                                     static_cast<double>(non_members)
                               : 0.5;
  report.tpr_ci = WilsonInterval(counts.true_positive, members);
  report.tnr_ci = WilsonInterval(counts.true_negative, non_members);
  report.advantage = 0.5 * report.tpr + 0.5 * report.tnr;
  report.advantage_ci = {0.5 * report.tpr_ci.low + 0.5 * report.tnr_ci.low,
                         0.5 * report.tpr_ci.high + 0.5 * report.tnr_ci.high};
  return report;
}

int ResolveThreads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("AMI_LAB_THREADS"); env != nullptr) {
    int value = 0;
    if (absl::SimpleAtoi(env, &value) && value > 0) return value;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

absl::StatusOr<SuccessReport> RunCampaign(const GameConfig& cfg,
                                          const DataDistribution& dist) {
  RETURN_IF_ERROR(ValidateGameConfig(cfg, dist));
  std::vector<absl::StatusOr<GameOutcome>> outcomes(
      cfg.trials, absl::UnknownError("trial not run"));
  ParallelFor(cfg.trials, ResolveThreads(cfg.threads), [&](int64_t i) {
    outcomes[i] =
        RunTrial(cfg, dist, DeriveSeed(cfg.seed, SeedStream::kTrial, i));
  });

  OutcomeCounts counts;
  int64_t failures = 0;
  int64_t untrained = 0;
  for (const absl::StatusOr<GameOutcome>& outcome : outcomes) {
    if (!outcome.ok()) return outcome.status();
    if (outcome->failed) {
      ++failures;
      if (cfg.strict) counts.Add(outcome->b, 1 - outcome->b);
      continue;
    }
    if (!outcome->trained) ++untrained;
    counts.Add(outcome->b, outcome->b_prime);
  }
  if (failures == cfg.trials && !cfg.strict) {
    return absl::AbortedError(
        absl::StrCat("all ", failures, " adversary trainings failed"));
  }
  SuccessReport report =
      Summarize(counts, cfg.mechanism.has_value()
                            ? cfg.mechanism->epsilon
                            : std::numeric_limits<double>::infinity());
  report.failures = failures;
  report.untrained = untrained;
  return report;
}

absl::StatusOr<SuccessReport> RunFixedTargetCampaign(
    const PlantedModel& planted, const GameConfig& cfg,
    const DataDistribution& dist) {
  RETURN_IF_ERROR(ValidateGameConfig(cfg, dist));
  if (planted.target.size() != dist.dim()) {
    return absl::InvalidArgumentError("shape error: planted target dimension");
  }
  std::optional<LdpRandomizer> randomizer;
  if (cfg.mechanism.has_value()) {
    ASSIGN_OR_RETURN(randomizer, LdpRandomizer::Create(*cfg.mechanism));
  }
  std::vector<absl::StatusOr<GameOutcome>> outcomes(
      cfg.trials, absl::UnknownError("trial not run"));
  ParallelFor(cfg.trials, ResolveThreads(cfg.threads), [&](int64_t i) {
    outcomes[i] = [&]() -> absl::StatusOr<GameOutcome> {
      const uint64_t trial_seed = DeriveSeed(cfg.seed, SeedStream::kTrial, i);
      Rng client_rng = MakeRng(trial_seed, SeedStream::kClientData);
      Rng bit_rng = MakeRng(trial_seed, SeedStream::kChallengeBit);
      GameOutcome outcome;
      outcome.b = UniformBit(bit_rng);
      Matrix batch(cfg.batch_size, dist.dim());
      for (int row = 0; row < cfg.batch_size; ++row) {
        ASSIGN_OR_RETURN(SampleVector x,
                         dist.SampleExcluding(planted.target.transpose(),
                                              client_rng));
        batch.row(row) = x.transpose();
      }
      if (outcome.b == 1) {
        std::uniform_int_distribution<int> pick(0, cfg.batch_size - 1);
        batch.row(pick(client_rng)) = planted.target.transpose();
      }
      if (randomizer.has_value()) {
        Rng noise_rng = MakeRng(trial_seed, SeedStream::kClientPerturbation);
        batch = randomizer->PerturbRows(batch, noise_rng);
      }
      ASSIGN_OR_RETURN(GradientBundle gradient,
                       ClientGradient(planted.params, batch));
      outcome.g_t_magnitude = gradient.dh.cwiseAbs().maxCoeff();
      ASSIGN_OR_RETURN(outcome.b_prime,
                       AmiDetect(planted, gradient, cfg.attack.zero_tolerance));
      outcome.win = outcome.b == outcome.b_prime;
      return outcome;
    }();
  });
  OutcomeCounts counts;
  for (const absl::StatusOr<GameOutcome>& outcome : outcomes) {
    if (!outcome.ok()) return outcome.status();
    counts.Add(outcome->b, outcome->b_prime);
  }
  return Summarize(counts, cfg.mechanism.has_value()
                               ? cfg.mechanism->epsilon
                               : std::numeric_limits<double>::infinity());
}

absl::StatusOr<std::vector<SuccessReport>> SweepEpsilon(
    const GameConfig& cfg, const DataDistribution& dist,
    const std::vector<double>& epsilons) {
  if (!cfg.mechanism.has_value()) {
    return absl::InvalidArgumentError("an epsilon sweep needs a mechanism");
  }
  std::vector<SuccessReport> reports;
  reports.reserve(epsilons.size());
  for (double epsilon : epsilons) {
    GameConfig point = cfg;
    point.mechanism->epsilon = epsilon;
    ASSIGN_OR_RETURN(SuccessReport report, RunCampaign(point, dist));
    reports.push_back(report);
  }
  return reports;
}

}  // namespace ami_lab
