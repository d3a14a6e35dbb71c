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

// Certified guarantee of attack success under LDP: Monte-Carlo estimates of
// the chosen neuron's expected value and one-sided Hoeffding bounds on them.

#ifndef AMI_LAB_CERTIFY_H_
#define AMI_LAB_CERTIFY_H_

#include <optional>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/types/span.h"
#include "ami_lab/attack.h"
#include "ami_lab/ldp.h"

namespace ami_lab {

// How Range(v) is obtained from the draws.
struct RangeOptions {
  double inflation = 1.5;
  double floor = 1e-6;
  // Use this range verbatim (e.g. for analytically clipped networks).
  std::optional<double> known_range;
};

struct ExpectationEstimate {
  double mean = 0.0;
  int64_t draws = 0;
  double range = 0.0;
  double min = 0.0;
  double max = 0.0;
};

ExpectationEstimate EstimateFromValues(absl::Span<const double> values,
                                       const RangeOptions& options = {});

struct CertifyConfig {
  int p = 4000;  // randomized copies of the target
  int q = 100;   // randomized copies of each non-target pool sample
  RangeOptions range;
  uint64_t seed = 0;
  int threads = 0;
};

// Mean of v over p fresh draws of M(t, eps).
absl::StatusOr<ExpectationEstimate> EstimateTargetExpectation(
    const PlantedModel& planted, const SampleVector& target,
    const LdpMechanismConfig& mechanism, int p, uint64_t seed,
    const RangeOptions& options = {});

// range * sqrt(-ln(delta) / (2 draws)).
absl::StatusOr<double> HoeffdingOffset(double range, int64_t draws,
                                       double delta);
absl::StatusOr<double> HoeffdingLower(const ExpectationEstimate& est,
                                      double delta);
absl::StatusOr<double> HoeffdingUpper(const ExpectationEstimate& est,
                                      double delta);

struct CertificationReport {
  double epsilon = 0.0;
  double delta = 0.0;
  double target_mean = 0.0;
  double lb_target = 0.0;
  double nontarget_max_mean = 0.0;
  // Max over the pool of each sample's upper bound.
  double ub_nontarget = 0.0;
  bool certified = false;
  int p = 0;
  int q = 0;
  int pool_size = 0;
  double target_range = 0.0;
};

// Draw-dependent part of a certification; independent of delta.
struct CertificationEvidence {
  double epsilon = 0.0;
  ExpectationEstimate target;
  std::vector<ExpectationEstimate> pool;
  int p = 0;
  int q = 0;
};

absl::StatusOr<CertificationEvidence> GatherEvidence(
    const PlantedModel& planted, const SampleVector& target,
    const Matrix& nontarget_pool, const LdpMechanismConfig& mechanism,
    const CertifyConfig& cfg);

// certified <=> lb_target > 0 and ub_nontarget <= 0.
absl::StatusOr<CertificationReport> Certify(
    const CertificationEvidence& evidence, double delta);

absl::StatusOr<CertificationReport> CheckCertified(
    const PlantedModel& planted, const SampleVector& target,
    const Matrix& nontarget_pool, const LdpMechanismConfig& mechanism,
    double delta, const CertifyConfig& cfg);

// Smallest delta of the ascending grid at which the condition holds, with
// its report; nullopt when it holds nowhere on the grid.
absl::StatusOr<std::optional<CertificationReport>> MinDeltaSearch(
    const PlantedModel& planted, const SampleVector& target,
    const Matrix& nontarget_pool, const LdpMechanismConfig& mechanism,
    const std::vector<double>& delta_grid, const CertifyConfig& cfg);
absl::StatusOr<std::optional<CertificationReport>> MinDeltaSearch(
    const CertificationEvidence& evidence,
    const std::vector<double>& delta_grid);

// One report per budget, for a fixed planted model.
absl::StatusOr<std::vector<CertificationReport>> BoundSweep(
    const PlantedModel& planted, const SampleVector& target,
    const Matrix& nontarget_pool, const LdpMechanismConfig& mechanism,
    const std::vector<double>& epsilons, double delta,
    const CertifyConfig& cfg);

}  // namespace ami_lab

#endif  // AMI_LAB_CERTIFY_H_
