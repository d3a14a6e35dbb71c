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

// The membership security game between a challenger (the client) and the
// adversary, and Monte-Carlo campaigns over it.

#ifndef AMI_LAB_GAME_H_
#define AMI_LAB_GAME_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/status/statusor.h"
#include "ami_lab/attack.h"
#include "ami_lab/distribution.h"
#include "ami_lab/ldp.h"

namespace ami_lab {

enum class AdversaryKind {
  kAmi,
  // Guesses b' uniformly at random; the advantage baseline.
  kCoinFlip,
};

struct GameConfig {
  int batch_size = 20;
  int trials = 1000;
  AttackConfig attack;
  // Set for the LDP game: the client randomizes its batch and the adversary
  // runs the LDP attack.
  std::optional<LdpMechanismConfig> mechanism;
  uint64_t seed = 0;
  // Count failed adversary trainings as lost trials instead of excluding them.
  bool strict = false;
  AdversaryKind adversary = AdversaryKind::kAmi;
  // Worker threads; 0 defers to AMI_LAB_THREADS, then to the hardware.
  int threads = 0;
};

absl::Status ValidateGameConfig(const GameConfig& cfg,
                                const DataDistribution& dist);

struct GameOutcome {
  int b = 0;
  int b_prime = 0;
  double g_t_magnitude = 0.0;
  bool win = false;
  // Adversary training diverged; b_prime is meaningless.
  bool failed = false;
  // The planted neuron met the training threshold.
  bool trained = true;
};

// One run of the game with all randomness derived from `trial_seed`.
absl::StatusOr<GameOutcome> RunTrial(const GameConfig& cfg,
                                     const DataDistribution& dist,
                                     uint64_t trial_seed);

struct OutcomeCounts {
  int64_t true_positive = 0;   // b = 1, b' = 1
  int64_t false_negative = 0;  // b = 1, b' = 0
  int64_t true_negative = 0;   // b = 0, b' = 0
  int64_t false_positive = 0;  // b = 0, b' = 1

  void Add(int b, int b_prime);
  void Merge(const OutcomeCounts& other);
  int64_t total() const {
    return true_positive + false_negative + true_negative + false_positive;
  }
};

struct Interval {
  double low = 0.0;
  double high = 1.0;
};

// 95% Wilson score interval for `successes` out of `n`; [0, 1] when n = 0.
Interval WilsonInterval(int64_t successes, int64_t n);

struct SuccessReport {
  // Privacy budget of the campaign, +inf without a mechanism.
  double epsilon = 0.0;
  OutcomeCounts counts;
  double advantage = 0.5;
  double tpr = 0.5;
  double tnr = 0.5;
  Interval tpr_ci;
  Interval tnr_ci;
  // 1/2 tpr_ci + 1/2 tnr_ci, endpoint-wise.
  Interval advantage_ci;
  // Trials that entered the counts.
  int64_t trials = 0;
  int64_t failures = 0;
  int64_t untrained = 0;
};

// Advantage = 1/2 TPR + 1/2 TNR from the 2x2 counts. A class with no trials
// contributes a rate of 0.5 with an uninformative interval.
SuccessReport Summarize(const OutcomeCounts& counts, double epsilon);

int ResolveThreads(int requested);

// Runs cfg.trials independent trials (trial i uses DeriveSeed(cfg.seed,
// kTrial, i)) and aggregates them. Fails only if every trial failed.
absl::StatusOr<SuccessReport> RunCampaign(const GameConfig& cfg,
                                          const DataDistribution& dist);

// The game with the adversary's side fixed: `planted` (and its target) is
// reused, and each trial only draws b and the client batch. With b = 1 the
// target takes a uniformly random slot of the batch; with b = 0 no row equals
// it. Uses cfg.batch_size, cfg.trials, cfg.mechanism and cfg.seed.
absl::StatusOr<SuccessReport> RunFixedTargetCampaign(
    const PlantedModel& planted, const GameConfig& cfg,
    const DataDistribution& dist);

// One campaign per budget. Every campaign reuses cfg.seed, so trial i sees
// the same batch, bit and target at every epsilon.
absl::StatusOr<std::vector<SuccessReport>> SweepEpsilon(
    const GameConfig& cfg, const DataDistribution& dist,
    const std::vector<double>& epsilons);

}  // namespace ami_lab

#endif  // AMI_LAB_GAME_H_
