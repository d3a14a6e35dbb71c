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

// JSON experiment configuration: one file drives a whole run.
//
// {
//   "seed": 7,
//   "output_dir": "results",
//   "distribution": {"kind": "mixture" | "one-hot" | "file", "dim": 64,
//                    "components": 10, "mean_scale": 1.0,
//                    "component_stddev": 1.0, "path": "...",
//                    "format": "csv" | "raw-f32"},
//   "game": {"batch_size": 20, "trials": 1000, "strict": false,
//            "adversary": "ami" | "coin-flip"},
//   "attack": {"m": 200, "r": 100, "l_draws": 100, "zero_tolerance": 1e-12,
//              "perturb_negatives": false, "use_bias": false,
//              "trained_loss": 0.1, "restarts": 4, "restart_loss": 1e-3,
//              "train": {"learning_rate": 0.01, "epochs": 300,
//                        "optimizer": "adam" | "sgd", "positive_weight": 0,
//                        "target_loss": 0}},
//   "mechanism": {"kind": "bitrand" | "ome", "epsilon": 5, "alpha": 2.0,
//                 "bits_per_feature": 8, "value_min": -4, "value_max": 4,
//                 "bit_order": "msb-first" | "lsb-first"},
//   "epsilons": [1, 3, 5, 10],
//   "certify": {"p": 4000, "q": 100, "pool_size": 0, "delta": 1e-6,
//               "delta_grid": [1e-8, 1e-7], "range_inflation": 1.5,
//               "range_floor": 1e-6, "known_range": 2.0},
//   "dpsgd": {"delta": 0.01, "k": [1, 2, 4, 8],
//             "epsilons": [7.5, 8, 9, 10], "detection_z": 3,
//             "signal": 0.25, "trials": 10000}
// }
//
// Every section and field is optional; unknown keys are rejected. Without
// value_min / value_max the encoding range comes from the distribution.

#ifndef AMI_LAB_CONFIG_H_
#define AMI_LAB_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "ami_lab/certify.h"
#include "ami_lab/distribution.h"
#include "ami_lab/dpsgd.h"
#include "ami_lab/game.h"
#include "ami_lab/io.h"
#include "ami_lab/ldp.h"

namespace ami_lab {

struct DistributionSpec {
  enum class Kind { kMixture, kOneHot, kFile };
  Kind kind = Kind::kMixture;
  int dim = 64;
  int components = 10;
  double mean_scale = 1.0;
  double component_stddev = 1.0;
  std::string path;
  DatasetFormat format = DatasetFormat::kCsv;
};

struct MechanismSpec {
  LdpMechanismConfig config;
  // Take value_min / value_max from the distribution.
  bool auto_range = true;
};

struct CertifySpec {
  CertifyConfig config;
  // Non-target samples; 0 means the whole finite support (minus the
  // target) or 1000 draws.
  int pool_size = 0;
  double delta = 1e-6;
  std::vector<double> delta_grid = {1e-8, 1e-7, 1e-6, 1e-5, 1e-4,
                                    1e-3, 1e-2, 1e-1};
};

struct DpsgdSpec {
  DpSgdConfig base;
  std::vector<int> ks = {1, 2, 4, 8};
  std::vector<double> epsilons = {7.5, 8.0, 9.0, 10.0};
  int64_t trials = 10000;
};

struct ExperimentConfig {
  uint64_t seed = 0;
  std::string output_dir = "results";
  DistributionSpec distribution;
  GameConfig game;
  std::optional<MechanismSpec> mechanism;
  std::vector<double> epsilons;
  CertifySpec certify;
  DpsgdSpec dpsgd;
};

absl::StatusOr<ExperimentConfig> ParseExperimentConfig(absl::string_view text);
absl::StatusOr<ExperimentConfig> LoadExperimentConfig(const std::string& path);

// Field-level and cross-field checks that need no data (grids sorted,
// n >= 2, ranges).
absl::Status ValidateExperimentConfig(const ExperimentConfig& cfg);

absl::StatusOr<DataDistribution> BuildDistribution(const ExperimentConfig& cfg);

// Fills the encoding from the distribution and checks alpha against its
// bound at `epsilon` (or the configured epsilon).
absl::StatusOr<LdpMechanismConfig> ResolveMechanism(
    const ExperimentConfig& cfg, const DataDistribution& dist,
    std::optional<double> epsilon = std::nullopt);

// "1,3,5.5" -> {1, 3, 5.5}.
absl::StatusOr<std::vector<double>> ParseDoubleList(absl::string_view text);
absl::StatusOr<std::vector<int>> ParseIntList(absl::string_view text);
// "1e-8:1e-1" -> every decade from 1e-8 to 1e-1 inclusive.
absl::StatusOr<std::vector<double>> ParseDeltaGrid(absl::string_view text);

}  // namespace ami_lab

#endif  // AMI_LAB_CONFIG_H_
