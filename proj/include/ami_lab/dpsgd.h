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

// Gaussian gradient noise (DPSGD) against the chosen neuron, and how many
// rounds of averaging over K chosen neurons cancel it.

#ifndef AMI_LAB_DPSGD_H_
#define AMI_LAB_DPSGD_H_

#include <cstdint>

#include "absl/status/statusor.h"

namespace ami_lab {

struct DpSgdConfig {
  double epsilon = 8.0;
  double delta = 1e-2;
  int k = 1;  // chosen neurons averaged per round
  // The decision threshold |g_t| / 2 must sit this many averaged-noise
  // standard deviations away from both 0 and g_t.
  double detection_z = 3.0;
  // True gradient magnitude of the chosen neuron (calibration input).
  double signal = 0.25;
};

absl::Status ValidateDpSgdConfig(const DpSgdConfig& cfg);

// sqrt(2 ln(1.25 / delta)) / epsilon, for delta in (0, 1.25].
absl::StatusOr<double> DpSigma(double epsilon, double delta);

// Smallest P >= 1 with sigma / sqrt(P K) <= (|g_t| / 2) / z, i.e.
// P = max(1, ceil((2 z sigma / g_t)^2 / K)).
absl::StatusOr<int64_t> RoundsToCancel(const DpSgdConfig& cfg);

struct RecoveryResult {
  // Fraction of (member, non-member) decisions that match the truth.
  double frequency = 0.0;
  double member_detection_rate = 0.0;
  double non_member_rejection_rate = 0.0;
  int64_t trials = 0;
  // Sample variance of the averaged noise over the non-member trials.
  double averaged_noise_variance = 0.0;
};

// Per trial: average P K draws of g_t + N(0, sigma^2) (member) and of
// N(0, sigma^2) (non-member). Detection means |avg| > |g_t| / 2 with the sign
// of g_t.
absl::StatusOr<RecoveryResult> SimulateRecovery(const DpSgdConfig& cfg,
                                                int64_t rounds, int64_t trials,
                                                uint64_t seed);

}  // namespace ami_lab

#endif  // AMI_LAB_DPSGD_H_
