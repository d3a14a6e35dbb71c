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

#include "ami_lab/certify.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "ami_lab/game.h"
#include "ami_lab/parallel.h"
#include "ami_lab/seeds.h"
#include "ami_lab/status_macros.h"

namespace ami_lab {
namespace {

absl::Status CheckDelta(double delta) {
  if (!(delta > 0.0 && delta < 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("usage error: delta must lie in (0, 1), got ", delta));
  }
  return absl::OkStatus();
}

ExpectationEstimate EstimateWith(const ChosenNeuronParams& params,
                                 const LdpRandomizer& randomizer,
                                 const SampleVector& x, int draws, Rng& rng,
                                 const RangeOptions& options) {
  Matrix copies(draws, x.size());
  for (int i = 0; i < draws; ++i) {
    copies.row(i) = randomizer.Perturb(x, rng).transpose();
  }
  const Vector values = NeuronValues(params, copies);
  return EstimateFromValues(
      absl::MakeConstSpan(values.data(), static_cast<size_t>(values.size())),
      options);
}

}  // namespace

ExpectationEstimate EstimateFromValues(absl::Span<const double> values,
                                       const RangeOptions& options) {
  ExpectationEstimate est;
  est.draws = static_cast<int64_t>(values.size());
  if (values.empty()) return est;
  est.mean = std::accumulate(values.begin(), values.end(), 0.0) /
             static_cast<double>(values.size());
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  est.min = *lo;
  est.max = *hi;
  est.range = options.known_range.has_value()
                  ? *options.known_range
                  : std::max(options.inflation * (est.max - est.min),
                             options.floor);
  return est;
}

absl::StatusOr<ExpectationEstimate> EstimateTargetExpectation(
    const PlantedModel& planted, const SampleVector& target,
    const LdpMechanismConfig& mechanism, int p, uint64_t seed,
    const RangeOptions& options) {
  if (p < 1) return absl::InvalidArgumentError("p must be >= 1");
  if (target.size() != planted.params.dim()) {
    return absl::InvalidArgumentError("shape error: target dimension");
  }
  ASSIGN_OR_RETURN(LdpRandomizer randomizer, LdpRandomizer::Create(mechanism));
  Rng rng = MakeRng(seed, SeedStream::kCertifyTarget);
  return EstimateWith(planted.params, randomizer, target, p, rng, options);
}

absl::StatusOr<double> HoeffdingOffset(double range, int64_t draws,
                                       double delta) {
  RETURN_IF_ERROR(CheckDelta(delta));
  if (draws < 1) return absl::InvalidArgumentError("draws must be >= 1");
  if (!(range >= 0.0)) return absl::InvalidArgumentError("range must be >= 0");
  return range * std::sqrt(-std::log(delta) / (2.0 * static_cast<double>(draws)));
}

absl::StatusOr<double> HoeffdingLower(const ExpectationEstimate& est,
                                      double delta) {
  ASSIGN_OR_RETURN(double offset, HoeffdingOffset(est.range, est.draws, delta));
  return est.mean - offset;
}

absl::StatusOr<double> HoeffdingUpper(const ExpectationEstimate& est,
                                      double delta) {
  ASSIGN_OR_RETURN(double offset, HoeffdingOffset(est.range, est.draws, delta));
  return est.mean + offset;
}

absl::StatusOr<CertificationEvidence> GatherEvidence(
    const PlantedModel& planted, const SampleVector& target,
    const Matrix& nontarget_pool, const LdpMechanismConfig& mechanism,
    const CertifyConfig& cfg) {
  if (nontarget_pool.rows() == 0) {
    return absl::InvalidArgumentError("usage error: empty non-target pool");
  }
  if (cfg.q < 1) return absl::InvalidArgumentError("q must be >= 1");
  if (nontarget_pool.cols() != planted.params.dim()) {
    return absl::InvalidArgumentError("shape error: pool dimension");
  }
  CertificationEvidence evidence;
  evidence.epsilon = mechanism.epsilon;
  evidence.p = cfg.p;
  evidence.q = cfg.q;
  ASSIGN_OR_RETURN(evidence.target,
                   EstimateTargetExpectation(planted, target, mechanism, cfg.p,
                                             cfg.seed, cfg.range));
  ASSIGN_OR_RETURN(LdpRandomizer randomizer, LdpRandomizer::Create(mechanism));
  evidence.pool.resize(nontarget_pool.rows());
  ParallelFor(nontarget_pool.rows(), ResolveThreads(cfg.threads),
              [&](int64_t i) {
                Rng rng = MakeRng(cfg.seed, SeedStream::kCertifyPool, i);
                evidence.pool[i] =
                    EstimateWith(planted.params, randomizer,
                                 nontarget_pool.row(i).transpose(), cfg.q, rng,
                                 cfg.range);
              });
  return evidence;
}

absl::StatusOr<CertificationReport> Certify(
    const CertificationEvidence& evidence, double delta) {
  RETURN_IF_ERROR(CheckDelta(delta));
  if (evidence.pool.empty()) {
    return absl::InvalidArgumentError("usage error: empty non-target pool");
  }
  CertificationReport report;
  report.epsilon = evidence.epsilon;
  report.delta = delta;
  report.p = evidence.p;
  report.q = evidence.q;
  report.pool_size = static_cast<int>(evidence.pool.size());
  report.target_mean = evidence.target.mean;
  report.target_range = evidence.target.range;
  ASSIGN_OR_RETURN(report.lb_target, HoeffdingLower(evidence.target, delta));
  report.nontarget_max_mean = -std::numeric_limits<double>::infinity();
  report.ub_nontarget = -std::numeric_limits<double>::infinity();
  for (const ExpectationEstimate& est : evidence.pool) {
    ASSIGN_OR_RETURN(double ub, HoeffdingUpper(est, delta));
    report.ub_nontarget = std::max(report.ub_nontarget, ub);
    report.nontarget_max_mean = std::max(report.nontarget_max_mean, est.mean);
  }
  report.certified = report.lb_target > 0.0 && report.ub_nontarget <= 0.0;
  return report;
}

absl::StatusOr<CertificationReport> CheckCertified(
    const PlantedModel& planted, const SampleVector& target,
    const Matrix& nontarget_pool, const LdpMechanismConfig& mechanism,
    double delta, const CertifyConfig& cfg) {
  RETURN_IF_ERROR(CheckDelta(delta));
  ASSIGN_OR_RETURN(
      CertificationEvidence evidence,
      GatherEvidence(planted, target, nontarget_pool, mechanism, cfg));
  return Certify(evidence, delta);
}

absl::StatusOr<std::optional<CertificationReport>> MinDeltaSearch(
    const CertificationEvidence& evidence,
    const std::vector<double>& delta_grid) {
  if (delta_grid.empty()) {
    return absl::InvalidArgumentError("usage error: empty delta grid");
  }
  for (size_t i = 0; i < delta_grid.size(); ++i) {
    RETURN_IF_ERROR(CheckDelta(delta_grid[i]));
    if (i > 0 && !(delta_grid[i - 1] < delta_grid[i])) {
      return absl::InvalidArgumentError(
          "usage error: delta grid must be strictly ascending");
    }
  }
  for (double delta : delta_grid) {
    ASSIGN_OR_RETURN(CertificationReport report, Certify(evidence, delta));
    if (report.certified) return report;
  }
  return std::nullopt;
}

absl::StatusOr<std::optional<CertificationReport>> MinDeltaSearch(
    const PlantedModel& planted, const SampleVector& target,
    const Matrix& nontarget_pool, const LdpMechanismConfig& mechanism,
    const std::vector<double>& delta_grid, const CertifyConfig& cfg) {
  if (delta_grid.empty()) {
    return absl::InvalidArgumentError("usage error: empty delta grid");
  }
  ASSIGN_OR_RETURN(
      CertificationEvidence evidence,
      GatherEvidence(planted, target, nontarget_pool, mechanism, cfg));
  return MinDeltaSearch(evidence, delta_grid);
}

absl::StatusOr<std::vector<CertificationReport>> BoundSweep(
    const PlantedModel& planted, const SampleVector& target,
    const Matrix& nontarget_pool, const LdpMechanismConfig& mechanism,
    const std::vector<double>& epsilons, double delta,
    const CertifyConfig& cfg) {
  RETURN_IF_ERROR(CheckDelta(delta));
  std::vector<CertificationReport> rows;
  for (double epsilon : epsilons) {
    LdpMechanismConfig point = mechanism;
    point.epsilon = epsilon;
    ASSIGN_OR_RETURN(CertificationReport report,
                     CheckCertified(planted, target, nontarget_pool, point,
                                    delta, cfg));
    rows.push_back(report);
  }
  return rows;
}

}  // namespace ami_lab
