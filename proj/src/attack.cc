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
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "ami_lab/seeds.h"
#include "ami_lab/status_macros.h"

namespace ami_lab {
namespace {

constexpr int kMaxCollisionRedraws = 1000;

absl::StatusOr<PlantedModel> Train(const SampleVector& target,
                                   const LabeledBatch& batch,
                                   const AttackConfig& cfg) {
  absl::StatusOr<PlantedModel> best =
      absl::InternalError("no training attempt ran");
  for (int attempt = 0; attempt <= cfg.restarts; ++attempt) {
    const ChosenNeuronParams init = InitializeParams(
        cfg.r, static_cast<int>(target.size()),
        DeriveSeed(cfg.train.seed, SeedStream::kAdversaryInit, attempt),
        cfg.use_bias);
    PlantedModel planted;
    planted.target = target;
    absl::StatusOr<ChosenNeuronParams> params =
        TrainChosenNeuron(init, batch, cfg.train, &planted.final_loss);
    if (!params.ok()) {
      if (!best.ok()) best = params.status();
      continue;
    }
    planted.params = *std::move(params);
    planted.separates_training_set =
        SeparatesTrainingSet(planted.params, batch);
    planted.trained = planted.separates_training_set ||
                      planted.final_loss <= cfg.trained_loss;
    if (!best.ok() || planted.final_loss < best->final_loss) {
      best = std::move(planted);
    }
    if (best->final_loss <= cfg.restart_loss) break;
  }
  return best;
}

}  // namespace

absl::Status ValidateAttackConfig(const AttackConfig& cfg) {
  if (cfg.m < 1) return absl::InvalidArgumentError("attack m must be >= 1");
  if (cfg.r < 1) return absl::InvalidArgumentError("attack r must be >= 1");
  if (cfg.l_draws < 1) {
    return absl::InvalidArgumentError("attack l_draws must be >= 1");
  }
  if (!(cfg.zero_tolerance >= 0.0)) {
    return absl::InvalidArgumentError("zero_tolerance must be >= 0");
  }
  if (!(cfg.train.learning_rate > 0.0 && cfg.train.learning_rate <= 1.0)) {
    return absl::InvalidArgumentError("learning rate must lie in (0, 1]");
  }
  if (cfg.restarts < 0) {
    return absl::InvalidArgumentError("restarts must be >= 0");
  }
  if (cfg.train.epochs < 1) {
    return absl::InvalidArgumentError("epochs must be >= 1");
  }
  return absl::OkStatus();
}

bool SeparatesTrainingSet(const ChosenNeuronParams& params,
                          const LabeledBatch& batch) {
  const Vector v = NeuronValues(params, batch.x);
  for (int i = 0; i < batch.size(); ++i) {
    if (batch.y(i) == 1.0 ? !(v(i) > 0.0) : v(i) > 0.0) return false;
  }
  return true;
}

absl::StatusOr<PlantedModel> AmiInit(const SampleVector& target,
                                     const DataDistribution& dist,
                                     const AttackConfig& cfg) {
  RETURN_IF_ERROR(ValidateAttackConfig(cfg));
  if (target.size() != dist.dim() || !target.allFinite()) {
    return absl::InvalidArgumentError("target must be finite with dimension d");
  }
  Rng rng = MakeRng(cfg.train.seed, SeedStream::kAdversaryData);
  ASSIGN_OR_RETURN(Matrix sampled, dist.SampleBatch(cfg.m, rng));

  LabeledBatch batch;
  batch.x.resize(cfg.m + 1, target.size());
  int rows = 0;
  for (Eigen::Index i = 0; i < sampled.rows(); ++i) {
    if (sampled.row(i).transpose() == target) continue;
    batch.x.row(rows++) = sampled.row(i);
  }
  if (rows == 0) {
    return absl::FailedPreconditionError(
        "every adversary sample equals the target; no negatives to train on");
  }
  batch.x.row(rows++) = target.transpose();
  batch.x.conservativeResize(rows, Eigen::NoChange);
  batch.y = Vector::Zero(rows);
  batch.y(rows - 1) = 1.0;
  return Train(target, batch, cfg);
}

absl::StatusOr<PlantedModel> AmiInitLdp(const SampleVector& target,
                                        const DataDistribution& dist,
                                        const LdpMechanismConfig& mechanism,
                                        const AttackConfig& cfg) {
  RETURN_IF_ERROR(ValidateAttackConfig(cfg));
  if (target.size() != dist.dim() || !target.allFinite()) {
    return absl::InvalidArgumentError("target must be finite with dimension d");
  }
  if (mechanism.encoding.features != dist.dim()) {
    return absl::InvalidArgumentError(
        "mechanism encoding must cover every feature of the distribution");
  }
  ASSIGN_OR_RETURN(LdpRandomizer randomizer, LdpRandomizer::Create(mechanism));

  Rng target_rng = MakeRng(cfg.train.seed, SeedStream::kTargetPerturbation);
  Matrix copies(cfg.l_draws, target.size());
  for (int i = 0; i < cfg.l_draws; ++i) {
    copies.row(i) = randomizer.Perturb(target, target_rng).transpose();
  }

  Rng data_rng = MakeRng(cfg.train.seed, SeedStream::kAdversaryData);
  ASSIGN_OR_RETURN(Matrix negatives, dist.SampleBatch(cfg.m, data_rng));
  for (Eigen::Index i = 0; i < negatives.rows(); ++i) {
    SampleVector x = negatives.row(i).transpose();
    if (cfg.perturb_negatives) x = randomizer.Perturb(x, data_rng);
    int redraws = 0;
    while (ContainsRow(copies, x)) {
      if (++redraws > kMaxCollisionRedraws) {
        return absl::ResourceExhaustedError(
            "could not draw a negative disjoint from the target copies");
      }
      x = dist.Sample(data_rng);
      if (cfg.perturb_negatives) x = randomizer.Perturb(x, data_rng);
    }
    negatives.row(i) = x.transpose();
  }

  LabeledBatch batch;
  batch.x.resize(cfg.m + cfg.l_draws, target.size());
  batch.x << negatives, copies;
  batch.y = Vector::Zero(cfg.m + cfg.l_draws);
  batch.y.tail(cfg.l_draws).setOnes();
  ASSIGN_OR_RETURN(PlantedModel planted, Train(target, batch, cfg));
  planted.mechanism = mechanism;
  return planted;
}

absl::StatusOr<int> AmiDetect(const PlantedModel& planted,
                              const GradientBundle& gradient,
                              double zero_tolerance) {
  if (gradient.dh.size() != planted.params.h.size() ||
      gradient.dw.rows() != planted.params.w.rows() ||
      gradient.dw.cols() != planted.params.w.cols()) {
    return absl::InvalidArgumentError(
        "shape error: gradient does not match the planted parameters");
  }
  if (gradient.dh.size() == 0) return 0;
  return gradient.dh.cwiseAbs().maxCoeff() > zero_tolerance ? 1 : 0;
}

absl::StatusOr<SampleVector> LinearCounterexample(const Vector& w_row,
                                                  const SampleVector& target,
                                                  double c) {
  if (w_row.size() != target.size() || target.size() < 1) {
    return absl::InvalidArgumentError(
        "shape error: row and target must share a positive dimension");
  }
  if (!(c > 0.0)) return absl::InvalidArgumentError("usage error: c must be > 0");
  if (!(w_row.dot(target) > 0.0)) {
    return absl::InvalidArgumentError(
        "usage error: the row must activate on the target (w . t > 0)");
  }
  SampleVector x = target;
  // Move along e_1 in the direction that does not decrease w . x.
  x(0) += w_row(0) >= 0.0 ? c : -c;
  return x;
}

absl::Status PlantChosenNeuron(const ChosenNeuronParams& params, int first_row,
                               int chosen, TwoLayerWeights& model) {
  const int r = params.neurons();
  if (model.layer1.cols() != params.dim()) {
    return absl::InvalidArgumentError("shape error: layer1 width != d");
  }
  if (first_row < 0 || first_row + r > model.layer1.rows()) {
    return absl::InvalidArgumentError("planted rows fall outside layer1");
  }
  if (model.layer2.cols() != model.layer1.rows() || chosen < 0 ||
      chosen >= model.layer2.rows()) {
    return absl::InvalidArgumentError("chosen neuron falls outside layer2");
  }
  model.layer1.middleRows(first_row, r) = params.w;
  model.layer2.row(chosen).setZero();
  model.layer2.row(chosen).segment(first_row, r) = params.h.transpose();
  return absl::OkStatus();
}

}  // namespace ami_lab
