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

#include "ami_lab/ldp.h"

#include <algorithm>
#include <cmath>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "ami_lab/status_macros.h"

namespace ami_lab {
namespace {

double Softplus(double v) {
  return std::max(v, 0.0) + std::log1p(std::exp(-std::abs(v)));
}

double LogSigmoid(double z) { return -Softplus(-z); }

// Logits of Pr[out = 1 | in = 1] and Pr[out = 1 | in = 0] at bit i.
struct BitLogits {
  double given_one;
  double given_zero;
};

BitLogits BitRandLogits(int i, double epsilon, double log_alpha,
                        const EncodingConfig& cfg) {
  const int l = cfg.bits_per_feature;
  const double a =
      log_alpha + static_cast<double>(i % l) / static_cast<double>(l) * epsilon;
  return {-a, a};
}

BitLogits OmeLogits(int i, double epsilon, double log_alpha,
                    const EncodingConfig& cfg) {
  const double given_one = (i % 2 == 0) ? log_alpha : -3.0 * log_alpha;
  const double given_zero =
      -(log_alpha + epsilon / static_cast<double>(cfg.total_bits()));
  return {given_one, given_zero};
}

BitLogits MechanismLogits(const LdpMechanismConfig& cfg, double log_alpha,
                          int i) {
  return cfg.mechanism == Mechanism::kBitRand
             ? BitRandLogits(i, cfg.epsilon, log_alpha, cfg.encoding)
             : OmeLogits(i, cfg.epsilon, log_alpha, cfg.encoding);
}

uint64_t MaxCode(const EncodingConfig& cfg) {
  return (uint64_t{1} << cfg.bits_per_feature) - 1;
}

uint64_t Quantize(double value, const EncodingConfig& cfg) {
  const double clipped = std::clamp(value, cfg.value_min, cfg.value_max);
  const double scaled = (clipped - cfg.value_min) /
                        (cfg.value_max - cfg.value_min) *
                        static_cast<double>(MaxCode(cfg));
  return static_cast<uint64_t>(std::llround(scaled));
}

double Dequantize(uint64_t code, const EncodingConfig& cfg) {
  return cfg.value_min + static_cast<double>(code) *
                             (cfg.value_max - cfg.value_min) /
                             static_cast<double>(MaxCode(cfg));
}

// Bit position within the code for slot index j.
int CodeBit(int j, const EncodingConfig& cfg) {
  return cfg.bit_order == BitOrder::kMsbFirst ? cfg.bits_per_feature - 1 - j
                                              : j;
}

}  // namespace

absl::Status ValidateEncoding(const EncodingConfig& cfg) {
  if (cfg.features < 1) {
    return absl::InvalidArgumentError("encoding needs at least one feature");
  }
  if (cfg.bits_per_feature < 1 || cfg.bits_per_feature > 32) {
    return absl::InvalidArgumentError(absl::StrCat(
        "bits_per_feature must lie in [1, 32], got ", cfg.bits_per_feature));
  }
  if (!(std::isfinite(cfg.value_min) && std::isfinite(cfg.value_max) &&
        cfg.value_min < cfg.value_max)) {
    return absl::InvalidArgumentError(
        absl::StrCat("quantization range [", cfg.value_min, ", ",
                     cfg.value_max, "] is empty or non-finite"));
  }
  return absl::OkStatus();
}

absl::Status ValidateMechanism(const LdpMechanismConfig& cfg) {
  if (absl::Status s = ValidateEncoding(cfg.encoding); !s.ok()) return s;
  if (!(cfg.epsilon > 0.0) || !std::isfinite(cfg.epsilon)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be finite and > 0, got ", cfg.epsilon));
  }
  if (cfg.alpha.has_value() &&
      (!(*cfg.alpha > 0.0) || !std::isfinite(*cfg.alpha))) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must be finite and > 0, got ", *cfg.alpha));
  }
  if (cfg.mechanism == Mechanism::kBitRand && cfg.alpha.has_value()) {
    const double log_bound = LogAlphaBound(cfg.epsilon, cfg.encoding);
    if (std::log(*cfg.alpha) > log_bound + 1e-12) {
      return absl::InvalidArgumentError(absl::StrCat(
          "BitRand alpha ", *cfg.alpha, " exceeds its bound ",
          std::exp(log_bound), " at epsilon ", cfg.epsilon));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<BitVector> Encode(const SampleVector& x,
                                 const EncodingConfig& cfg) {
  if (absl::Status s = ValidateEncoding(cfg); !s.ok()) return s;
  if (x.size() != cfg.features) {
    return absl::InvalidArgumentError(
        absl::StrCat("shape error: sample has ", x.size(),
                     " features, encoding expects ", cfg.features));
  }
  const int l = cfg.bits_per_feature;
  BitVector bits(cfg.total_bits());
  for (int f = 0; f < cfg.features; ++f) {
    const uint64_t code = Quantize(x(f), cfg);
    for (int j = 0; j < l; ++j) {
      bits[f * l + j] = static_cast<uint8_t>((code >> CodeBit(j, cfg)) & 1);
    }
  }
  return bits;
}

absl::StatusOr<SampleVector> Decode(const BitVector& bits,
                                    const EncodingConfig& cfg) {
  if (absl::Status s = ValidateEncoding(cfg); !s.ok()) return s;
  if (static_cast<int>(bits.size()) != cfg.total_bits()) {
    return absl::InvalidArgumentError(
        absl::StrCat("shape error: ", bits.size(), " bits, encoding expects ",
                     cfg.total_bits()));
  }
  const int l = cfg.bits_per_feature;
  SampleVector x(cfg.features);
  for (int f = 0; f < cfg.features; ++f) {
    uint64_t code = 0;
    for (int j = 0; j < l; ++j) {
      if (bits[f * l + j] > 1) {
        return absl::InvalidArgumentError("bit values must be 0 or 1");
      }
      code |= static_cast<uint64_t>(bits[f * l + j]) << CodeBit(j, cfg);
    }
    x(f) = Dequantize(code, cfg);
  }
  return x;
}

double BitRandProbability(int i, int bit, double epsilon, double alpha,
                          const EncodingConfig& cfg) {
  const BitLogits logits = BitRandLogits(i, epsilon, std::log(alpha), cfg);
  return Sigmoid(bit ? logits.given_one : logits.given_zero);
}

double OmeProbability(int i, int bit, double epsilon, double alpha,
                      const EncodingConfig& cfg) {
  const BitLogits logits = OmeLogits(i, epsilon, std::log(alpha), cfg);
  return Sigmoid(bit ? logits.given_one : logits.given_zero);
}

double LogAlphaBound(double epsilon, const EncodingConfig& cfg) {
  const double r = cfg.features;
  const double l = cfg.bits_per_feature;
  // log-sum-exp of 2 eps k / l over k = 0 .. l-1.
  const double top = 2.0 * epsilon * (l - 1.0) / l;
  double sum = 0.0;
  for (int k = 0; k < cfg.bits_per_feature; ++k) {
    sum += std::exp(2.0 * epsilon * k / l - top);
  }
  const double log_sum = top + std::log(sum);
  return 0.5 * (std::log(epsilon + r * l) - std::log(2.0 * r) - log_sum);
}

double AlphaBound(double epsilon, const EncodingConfig& cfg) {
  return std::exp(LogAlphaBound(epsilon, cfg));
}

double EffectiveLogAlpha(const LdpMechanismConfig& cfg) {
  if (cfg.alpha.has_value()) return std::log(*cfg.alpha);
  if (cfg.mechanism == Mechanism::kBitRand) {
    return LogAlphaBound(cfg.epsilon, cfg.encoding);
  }
  return 0.0;
}

absl::StatusOr<LdpRandomizer> LdpRandomizer::Create(
    const LdpMechanismConfig& cfg) {
  if (absl::Status s = ValidateMechanism(cfg); !s.ok()) return s;
  LdpRandomizer randomizer;
  randomizer.cfg_ = cfg;
  const int total = cfg.encoding.total_bits();
  const double log_alpha = EffectiveLogAlpha(cfg);
  randomizer.p_one_given_one_.resize(total);
  randomizer.p_one_given_zero_.resize(total);
  for (int i = 0; i < total; ++i) {
    const BitLogits logits = MechanismLogits(cfg, log_alpha, i);
    randomizer.p_one_given_one_[i] = Sigmoid(logits.given_one);
    randomizer.p_one_given_zero_[i] = Sigmoid(logits.given_zero);
  }
  return randomizer;
}

BitVector LdpRandomizer::RandomizeBits(const BitVector& bits, Rng& rng) const {
  BitVector out(bits.size());
  for (size_t i = 0; i < bits.size(); ++i) {
    out[i] = UniformUnit(rng) < ProbabilityOfOne(static_cast<int>(i), bits[i])
                 ? 1
                 : 0;
  }
  return out;
}

SampleVector LdpRandomizer::Perturb(const SampleVector& x, Rng& rng) const {
  const EncodingConfig& enc = cfg_.encoding;
  const int l = enc.bits_per_feature;
  SampleVector out(enc.features);
  for (int f = 0; f < enc.features; ++f) {
    const uint64_t code = Quantize(x(f), enc);
    uint64_t noisy = 0;
    for (int j = 0; j < l; ++j) {
      const int pos = CodeBit(j, enc);
      const int bit = static_cast<int>((code >> pos) & 1);
      if (UniformUnit(rng) < ProbabilityOfOne(f * l + j, bit)) {
        noisy |= uint64_t{1} << pos;
      }
    }
    out(f) = Dequantize(noisy, enc);
  }
  return out;
}

Matrix LdpRandomizer::PerturbRows(const Matrix& x, Rng& rng) const {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    out.row(i) = Perturb(x.row(i).transpose(), rng).transpose();
  }
  return out;
}

absl::StatusOr<SampleVector> Perturb(const SampleVector& x,
                                     const LdpMechanismConfig& cfg, Rng& rng) {
  absl::StatusOr<LdpRandomizer> randomizer = LdpRandomizer::Create(cfg);
  if (!randomizer.ok()) return randomizer.status();
  if (x.size() != cfg.encoding.features) {
    return absl::InvalidArgumentError(
        absl::StrCat("shape error: sample has ", x.size(),
                     " features, encoding expects ", cfg.encoding.features));
  }
  return randomizer->Perturb(x, rng);
}

absl::StatusOr<RatioReport> LdpRatioReport(const LdpMechanismConfig& cfg) {
  if (absl::Status s = ValidateEncoding(cfg.encoding); !s.ok()) return s;
  if (!(cfg.epsilon >= 0.0) ||
      (cfg.alpha.has_value() && !(*cfg.alpha > 0.0))) {
    return absl::InvalidArgumentError("ratio report needs eps >= 0, alpha > 0");
  }
  const double log_alpha = EffectiveLogAlpha(cfg);
  RatioReport report;
  const int total = cfg.encoding.total_bits();
  report.bits.reserve(total);
  for (int i = 0; i < total; ++i) {
    const BitLogits logits = MechanismLogits(cfg, log_alpha, i);
    BitRatio ratio;
    ratio.index = i;
    ratio.ln_ratio_output_one =
        std::abs(LogSigmoid(logits.given_one) - LogSigmoid(logits.given_zero));
    ratio.ln_ratio_output_zero = std::abs(LogSigmoid(-logits.given_one) -
                                          LogSigmoid(-logits.given_zero));
    ratio.ln_max_ratio =
        std::max(ratio.ln_ratio_output_one, ratio.ln_ratio_output_zero);
    report.total_ln_ratio += ratio.ln_max_ratio;
    report.bits.push_back(ratio);
  }
  return report;
}

absl::StatusOr<std::vector<MarginalCheck>> CheckMarginals(
    const LdpMechanismConfig& cfg, int64_t draws) {
  if (draws < 1) return absl::InvalidArgumentError("draws must be >= 1");
  ASSIGN_OR_RETURN(LdpRandomizer randomizer, LdpRandomizer::Create(cfg));
  const int n = cfg.encoding.total_bits();
  const BitVector ones(n, 1);
  const BitVector zeros(n, 0);
  std::vector<int64_t> count_one(n, 0);
  std::vector<int64_t> count_zero(n, 0);
  Rng rng = MakeRng(cfg.seed, SeedStream::kClientPerturbation);
  for (int64_t k = 0; k < draws; ++k) {
    const BitVector a = randomizer.RandomizeBits(ones, rng);
    const BitVector b = randomizer.RandomizeBits(zeros, rng);
    for (int i = 0; i < n; ++i) {
      count_one[i] += a[i];
      count_zero[i] += b[i];
    }
  }
  const double total = static_cast<double>(draws);
  auto within = [total](double p, double empirical) {
    return std::abs(empirical - p) <=
           3.0 * std::sqrt(p * (1.0 - p) / total) + 1e-12;
  };
  std::vector<MarginalCheck> rows(n);
  for (int i = 0; i < n; ++i) {
    MarginalCheck& row = rows[i];
    row.index = i;
    row.p_one_given_one = randomizer.ProbabilityOfOne(i, 1);
    row.p_one_given_zero = randomizer.ProbabilityOfOne(i, 0);
    row.empirical_one_given_one = count_one[i] / total;
    row.empirical_one_given_zero = count_zero[i] / total;
    row.within_3sigma = within(row.p_one_given_one,
                               row.empirical_one_given_one) &&
                        within(row.p_one_given_zero,
                               row.empirical_one_given_zero);
  }
  return rows;
}

}  // namespace ami_lab
