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

#include "ami_lab/dpsgd.h"

#include <cmath>
#include <random>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "ami_lab/seeds.h"
#include "ami_lab/status_macros.h"

namespace ami_lab {

absl::Status ValidateDpSgdConfig(const DpSgdConfig& cfg) {
  if (cfg.k < 1) return absl::InvalidArgumentError("K must be >= 1");
  if (!(cfg.detection_z > 0.0)) {
    return absl::InvalidArgumentError("detection_z must be > 0");
  }
  if (!(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    return absl::InvalidArgumentError("delta must lie in (0, 1)");
  }
  if (!(cfg.epsilon > 0.0)) {
    return absl::InvalidArgumentError("epsilon must be > 0");
  }
  return absl::OkStatus();
}

absl::StatusOr<double> DpSigma(double epsilon, double delta) {
  if (!(epsilon > 0.0)) {
    return absl::InvalidArgumentError("usage error: epsilon must be > 0");
  }
  if (!(delta > 0.0 && delta <= 1.25)) {
    return absl::InvalidArgumentError(
        absl::StrCat("usage error: delta must lie in (0, 1.25], got ", delta));
  }
  return std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

absl::StatusOr<int64_t> RoundsToCancel(const DpSgdConfig& cfg) {
  if (cfg.k < 1) return absl::InvalidArgumentError("K must be >= 1");
  if (!(cfg.detection_z > 0.0)) {
    return absl::InvalidArgumentError("detection_z must be > 0");
  }
  if (cfg.signal == 0.0 || !std::isfinite(cfg.signal)) {
    return absl::InvalidArgumentError(
        "usage error: the chosen neuron's gradient g_t must be non-zero");
  }
  ASSIGN_OR_RETURN(double sigma, DpSigma(cfg.epsilon, cfg.delta));
  const double ratio = 2.0 * cfg.detection_z * sigma / std::abs(cfg.signal);
  const double rounds = std::ceil(ratio * ratio / static_cast<double>(cfg.k));
  return std::max<int64_t>(1, static_cast<int64_t>(rounds));
}

absl::StatusOr<RecoveryResult> SimulateRecovery(const DpSgdConfig& cfg,
                                                int64_t rounds, int64_t trials,
                                                uint64_t seed) {
  if (rounds < 1) return absl::InvalidArgumentError("P must be >= 1");
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  if (cfg.k < 1) return absl::InvalidArgumentError("K must be >= 1");
  if (cfg.signal == 0.0) {
    return absl::InvalidArgumentError("g_t must be non-zero");
  }
  ASSIGN_OR_RETURN(double sigma, DpSigma(cfg.epsilon, cfg.delta));
  const int64_t draws = rounds * cfg.k;
  const double threshold = std::abs(cfg.signal) / 2.0;
  const double sign = cfg.signal > 0.0 ? 1.0 : -1.0;

  Rng rng = MakeRng(seed, SeedStream::kDpsgdNoise);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  auto averaged_noise = [&]() {
    if (sigma == 0.0) return 0.0;
    double sum = 0.0;
    for (int64_t i = 0; i < draws; ++i) sum += noise(rng);
    return sum / static_cast<double>(draws);
  };
  auto detects = [&](double avg) {
    return std::abs(avg) > threshold && avg * sign > 0.0;
  };

  int64_t member_hits = 0;
  int64_t non_member_rejections = 0;
  double noise_sum = 0.0;
  double noise_sum_sq = 0.0;
  for (int64_t t = 0; t < trials; ++t) {
    if (detects(cfg.signal + averaged_noise())) ++member_hits;
    const double z = averaged_noise();
    noise_sum += z;
    noise_sum_sq += z * z;
    if (!detects(z)) ++non_member_rejections;
  }
  RecoveryResult result;
  result.trials = trials;
  result.member_detection_rate =
      static_cast<double>(member_hits) / static_cast<double>(trials);
  result.non_member_rejection_rate =
      static_cast<double>(non_member_rejections) / static_cast<double>(trials);
  result.frequency =
      0.5 * (result.member_detection_rate + result.non_member_rejection_rate);
  if (trials > 1) {
    const double n = static_cast<double>(trials);
    const double mean = noise_sum / n;
    result.averaged_noise_variance = (noise_sum_sq - n * mean * mean) / (n - 1);
  }
  return result;
}

}  // namespace ami_lab
