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

#ifndef AMI_LAB_DISTRIBUTION_H_
#define AMI_LAB_DISTRIBUTION_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/status/statusor.h"
#include "ami_lab/seeds.h"
#include "ami_lab/tensor_core.h"

namespace ami_lab {

// Precomputed embeddings, one row per sample.
struct EmbeddingDataset {
  Matrix rows;
  // Optional per-row group id, e.g. one per identity.
  std::vector<int64_t> groups;

  int size() const { return static_cast<int>(rows.rows()); }
  int dim() const { return static_cast<int>(rows.cols()); }
};

struct MixtureComponent {
  Vector mean;
  // Per-coordinate standard deviation (diagonal covariance).
  Vector stddev;
  double weight = 1.0;
};

// The data distribution both the client and the adversary sample from.
class DataDistribution {
 public:
  enum class Kind { kGaussianMixture, kFileBacked };

  static absl::StatusOr<DataDistribution> GaussianMixture(
      std::vector<MixtureComponent> components);
  static absl::StatusOr<DataDistribution> FileBacked(EmbeddingDataset dataset);

  // `k` components with means ~ N(0, mean_scale^2 I) and isotropic
  // `component_stddev`, equal weights. The means are drawn from `seed`.
  static DataDistribution RandomMixture(int d, int k, double mean_scale,
                                        double component_stddev,
                                        uint64_t seed);
  // Uniform over the d standard basis vectors: pairwise disjoint supports.
  static DataDistribution OneHot(int d);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  // Number of distinct points for finite supports, nullopt otherwise.
  std::optional<int> support_size() const;

  SampleVector Sample(Rng& rng) const;
  // n samples, one per row. Mixtures sample i.i.d.; file-backed sampling
  // is without replacement and fails when n exceeds the dataset.
  absl::StatusOr<Matrix> SampleBatch(int n, Rng& rng) const;
  // A sample not equal to any row of `exclude`, by rejection.
  absl::StatusOr<SampleVector> SampleExcluding(const Matrix& exclude,
                                               Rng& rng) const;

  // Per-dataset quantization range used for LDP encoding: the empirical
  // min / max over the file rows, or over `probe` mixture draws.
  std::pair<double, double> ValueRange(uint64_t seed, int probe = 4096) const;

  const std::vector<MixtureComponent>& components() const {
    return components_;
  }
  const EmbeddingDataset& dataset() const { return dataset_; }

 private:
  DataDistribution() = default;

  Kind kind_ = Kind::kGaussianMixture;
  int dim_ = 0;
  std::vector<MixtureComponent> components_;
  std::vector<double> cumulative_weights_;
  EmbeddingDataset dataset_;
};

// True when some row of `rows` equals `x` exactly.
bool ContainsRow(const Matrix& rows, const SampleVector& x);

}  // namespace ami_lab

#endif  // AMI_LAB_DISTRIBUTION_H_
