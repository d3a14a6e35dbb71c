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

#include "ami_lab/distribution.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"

namespace ami_lab {
namespace {

constexpr int kMaxRejections = 100000;

}  // namespace

bool ContainsRow(const Matrix& rows, const SampleVector& x) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    if (rows.row(i).transpose() == x) return true;
  }
  return false;
}

absl::StatusOr<DataDistribution> DataDistribution::GaussianMixture(
    std::vector<MixtureComponent> components) {
  if (components.empty()) {
    return absl::InvalidArgumentError("mixture needs at least one component");
  }
  const Eigen::Index d = components.front().mean.size();
  if (d < 1) return absl::InvalidArgumentError("mixture dimension must be >= 1");
  double total = 0.0;
  for (size_t c = 0; c < components.size(); ++c) {
    const MixtureComponent& comp = components[c];
    if (comp.mean.size() != d || comp.stddev.size() != d) {
      return absl::InvalidArgumentError(
          absl::StrCat("mixture component ", c, " has inconsistent dimension"));
    }
    if (!comp.mean.allFinite() || !comp.stddev.allFinite() ||
        (comp.stddev.array() < 0.0).any()) {
      return absl::InvalidArgumentError(
          absl::StrCat("mixture component ", c, " has invalid parameters"));
    }
    if (!(comp.weight > 0.0)) {
      return absl::InvalidArgumentError(
          absl::StrCat("mixture component ", c, " needs a positive weight"));
    }
    total += comp.weight;
  }
  DataDistribution dist;
  dist.kind_ = Kind::kGaussianMixture;
  dist.dim_ = static_cast<int>(d);
  double running = 0.0;
  for (const MixtureComponent& comp : components) {
    running += comp.weight / total;
    dist.cumulative_weights_.push_back(running);
  }
  dist.cumulative_weights_.back() = 1.0;
  dist.components_ = std::move(components);
  return dist;
}

absl::StatusOr<DataDistribution> DataDistribution::FileBacked(
    EmbeddingDataset dataset) {
  if (dataset.size() < 1 || dataset.dim() < 1) {
    return absl::InvalidArgumentError("file-backed distribution is empty");
  }
  if (!dataset.rows.allFinite()) {
    return absl::InvalidArgumentError("dataset contains non-finite values");
  }
  DataDistribution dist;
  dist.kind_ = Kind::kFileBacked;
  dist.dim_ = dataset.dim();
  dist.dataset_ = std::move(dataset);
  return dist;
}

DataDistribution DataDistribution::RandomMixture(int d, int k,
                                                 double mean_scale,
                                                 double component_stddev,
                                                 uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<MixtureComponent> components(k);
  for (MixtureComponent& comp : components) {
    comp.mean.resize(d);
    for (int j = 0; j < d; ++j) comp.mean(j) = mean_scale * normal(rng);
    comp.stddev = Vector::Constant(d, component_stddev);
    comp.weight = 1.0;
  }
  return *GaussianMixture(std::move(components));
}

DataDistribution DataDistribution::OneHot(int d) {
  std::vector<MixtureComponent> components(d);
  for (int c = 0; c < d; ++c) {
    components[c].mean = Vector::Unit(d, c);
    components[c].stddev = Vector::Zero(d);
  }
  return *GaussianMixture(std::move(components));
}

std::optional<int> DataDistribution::support_size() const {
  if (kind_ == Kind::kFileBacked) return dataset_.size();
  for (const MixtureComponent& comp : components_) {
    if (!comp.stddev.isZero(0.0)) return std::nullopt;
  }
  return static_cast<int>(components_.size());
}

SampleVector DataDistribution::Sample(Rng& rng) const {
  if (kind_ == Kind::kFileBacked) {
    std::uniform_int_distribution<int> pick(0, dataset_.size() - 1);
    return dataset_.rows.row(pick(rng)).transpose();
  }
  const double u = UniformUnit(rng);
  const auto it = std::upper_bound(cumulative_weights_.begin(),
                                   cumulative_weights_.end(), u);
  const size_t c = std::min<size_t>(it - cumulative_weights_.begin(),
                                    components_.size() - 1);
  const MixtureComponent& comp = components_[c];
  SampleVector x = comp.mean;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int j = 0; j < dim_; ++j) {
    if (comp.stddev(j) != 0.0) x(j) += comp.stddev(j) * normal(rng);
  }
  return x;
}

absl::StatusOr<Matrix> DataDistribution::SampleBatch(int n, Rng& rng) const {
  if (n < 0) return absl::InvalidArgumentError("negative batch size");
  Matrix batch(n, dim_);
  if (kind_ == Kind::kFileBacked) {
    if (n > dataset_.size()) {
      return absl::InvalidArgumentError(
          absl::StrCat("cannot draw ", n, " rows without replacement from ",
                       dataset_.size()));
    }
    // Partial Fisher-Yates over row indices.
    std::vector<int> index(dataset_.size());
    std::iota(index.begin(), index.end(), 0);
    for (int i = 0; i < n; ++i) {
      std::uniform_int_distribution<int> pick(i, dataset_.size() - 1);
      std::swap(index[i], index[pick(rng)]);
      batch.row(i) = dataset_.rows.row(index[i]);
    }
    return batch;
  }
  for (int i = 0; i < n; ++i) batch.row(i) = Sample(rng).transpose();
  return batch;
}

absl::StatusOr<SampleVector> DataDistribution::SampleExcluding(
    const Matrix& exclude, Rng& rng) const {
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    SampleVector x = Sample(rng);
    if (!ContainsRow(exclude, x)) return x;
  }
  return absl::ResourceExhaustedError(
      "rejection sampling found no point outside the excluded set");
}

std::pair<double, double> DataDistribution::ValueRange(uint64_t seed,
                                                       int probe) const {
  Matrix rows;
  if (kind_ == Kind::kFileBacked) {
    rows = dataset_.rows;
  } else {
    Rng rng(seed);
    rows = *SampleBatch(probe, rng);
  }
  double lo = rows.minCoeff();
  double hi = rows.maxCoeff();
  if (!(lo < hi)) hi = lo + 1.0;
  return {lo, hi};
}

}  // namespace ami_lab
