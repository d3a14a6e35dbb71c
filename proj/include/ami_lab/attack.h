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

// The dishonest server: plants a chosen neuron that fires only on the target
// (or its randomized copies) and reads membership off the returned gradient.

#ifndef AMI_LAB_ATTACK_H_
#define AMI_LAB_ATTACK_H_

#include <optional>

#include "absl/status/statusor.h"
#include "ami_lab/distribution.h"
#include "ami_lab/ldp.h"
#include "ami_lab/tensor_core.h"

namespace ami_lab {

struct AttackConfig {
  int m = 200;        // adversary samples drawn from the distribution
  int r = 100;        // first-layer neurons feeding the chosen neuron
  int l_draws = 100;  // randomized copies of the target (LDP attack)
  TrainConfig train;
  // Detection fires when max |g_t| exceeds this.
  double zero_tolerance = 1e-12;
  // Also randomize the negatives before training (LDP attack only).
  bool perturb_negatives = false;
  bool use_bias = false;
  // A planted model counts as trained when its final loss is at most this
  // or when it separates its own training set.
  double trained_loss = 0.1;
  // Retrain from a fresh initialization while the final loss stays above
  // restart_loss, at most `restarts` extra times; the lowest loss wins.
  int restarts = 4;
  double restart_loss = 1e-3;
};

absl::Status ValidateAttackConfig(const AttackConfig& cfg);

struct PlantedModel {
  ChosenNeuronParams params;
  SampleVector target;
  std::optional<LdpMechanismConfig> mechanism;
  double final_loss = 0.0;
  // v > 0 on every positive and v <= 0 on every negative of the training set.
  bool separates_training_set = false;
  bool trained = false;
};

// True iff v(x) > 0 for every label-1 row and v(x) <= 0 for every label-0 row.
bool SeparatesTrainingSet(const ChosenNeuronParams& params,
                          const LabeledBatch& batch);

// Plain attack: label the target 1 and m fresh samples (minus the target)
// 0, then train. Randomness derives from cfg.train.seed.
absl::StatusOr<PlantedModel> AmiInit(const SampleVector& target,
                                     const DataDistribution& dist,
                                     const AttackConfig& cfg);

// LDP attack: label l_draws randomized copies of the target 1 and m samples
// disjoint from those copies 0, then train.
absl::StatusOr<PlantedModel> AmiInitLdp(const SampleVector& target,
                                        const DataDistribution& dist,
                                        const LdpMechanismConfig& mechanism,
                                        const AttackConfig& cfg);

// 1 iff the chosen neuron's gradient g_t = dh has max-abs above
// `zero_tolerance`.
absl::StatusOr<int> AmiDetect(const PlantedModel& planted,
                              const GradientBundle& gradient,
                              double zero_tolerance);

// Given a row w with w . t > 0, returns x = t +/- c e_1 with w . x > 0: a
// point other than t that the row cannot exclude.
absl::StatusOr<SampleVector> LinearCounterexample(const Vector& w_row,
                                                  const SampleVector& target,
                                                  double c);

// First two fully-connected layers of a larger model the neuron is planted
// into: layer1 is R x d, layer2 is K x R.
struct TwoLayerWeights {
  Matrix layer1;
  Matrix layer2;
};

// Overwrites layer1 rows [first_row, first_row + r) with W and layer2 row
// `chosen` with h on those columns and zero elsewhere. Nothing else changes.
absl::Status PlantChosenNeuron(const ChosenNeuronParams& params, int first_row,
                               int chosen, TwoLayerWeights& model);

}  // namespace ami_lab

#endif  // AMI_LAB_ATTACK_H_
