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

// Bit encoding of embeddings and the BitRand / OME randomizers.

#ifndef AMI_LAB_LDP_H_
#define AMI_LAB_LDP_H_

#include <cstdint>
#include <optional>
#include <vector>

#include "absl/status/statusor.h"
#include "ami_lab/seeds.h"
#include "ami_lab/tensor_core.h"

namespace ami_lab {

// Which end of a feature's bit slot carries slot index 0. BitRand's
// exponent (i % l) / l * eps is evaluated on the slot index, so this decides
// which bits receive the exponent-0 probabilities.
enum class BitOrder { kMsbFirst, kLsbFirst };

struct EncodingConfig {
  int features = 1;
  int bits_per_feature = 8;
  double value_min = 0.0;
  double value_max = 1.0;
  BitOrder bit_order = BitOrder::kMsbFirst;

  int total_bits() const { return features * bits_per_feature; }
};

using BitVector = std::vector<uint8_t>;

enum class Mechanism { kBitRand, kOme };

struct LdpMechanismConfig {
  Mechanism mechanism = Mechanism::kBitRand;
  double epsilon = 1.0;
  // Temperature. Unset means the BitRand bound (BitRand) or 1.0 (OME).
  std::optional<double> alpha;
  EncodingConfig encoding;
  uint64_t seed = 0;
};

absl::Status ValidateEncoding(const EncodingConfig& cfg);
absl::Status ValidateMechanism(const LdpMechanismConfig& cfg);

// Clip, quantize to 2^l - 1 levels and write each feature into its slot.
absl::StatusOr<BitVector> Encode(const SampleVector& x,
                                 const EncodingConfig& cfg);
absl::StatusOr<SampleVector> Decode(const BitVector& bits,
                                    const EncodingConfig& cfg);

// Pr[output bit = 1] for input `bit` at vector index `i`.
double BitRandProbability(int i, int bit, double epsilon, double alpha,
                          const EncodingConfig& cfg);
double OmeProbability(int i, int bit, double epsilon, double alpha,
                      const EncodingConfig& cfg);

// Upper bound on the BitRand temperature:
//   sqrt((eps + r l) / (2 r sum_{k<l} exp(2 eps k / l))).
double AlphaBound(double epsilon, const EncodingConfig& cfg);
// Natural log of AlphaBound, finite even where the bound underflows.
double LogAlphaBound(double epsilon, const EncodingConfig& cfg);

// ln(alpha) actually used by `cfg` after applying defaults.
double EffectiveLogAlpha(const LdpMechanismConfig& cfg);

// Per-bit output probabilities of a validated mechanism, precomputed so that
// perturbing a sample costs one uniform draw per bit.
class LdpRandomizer {
 public:
  static absl::StatusOr<LdpRandomizer> Create(const LdpMechanismConfig& cfg);

  const LdpMechanismConfig& config() const { return cfg_; }

  // Pr[output = 1 | input = bit] at index i.
  double ProbabilityOfOne(int i, int bit) const {
    return bit ? p_one_given_one_[i] : p_one_given_zero_[i];
  }

  BitVector RandomizeBits(const BitVector& bits, Rng& rng) const;

  // decode(randomize(encode(x))). `x` must have cfg.encoding.features
  // entries; callers validate once.
  SampleVector Perturb(const SampleVector& x, Rng& rng) const;
  Matrix PerturbRows(const Matrix& x, Rng& rng) const;

 private:
  LdpRandomizer() = default;

  LdpMechanismConfig cfg_;
  std::vector<double> p_one_given_one_;
  std::vector<double> p_one_given_zero_;
};

// One-shot helper over LdpRandomizer.
absl::StatusOr<SampleVector> Perturb(const SampleVector& x,
                                     const LdpMechanismConfig& cfg, Rng& rng);

struct BitRatio {
  int index = 0;
  // ln of max over inputs (v, v') of Pr[O | v] / Pr[O | v'], per output O.
  double ln_ratio_output_one = 0.0;
  double ln_ratio_output_zero = 0.0;
  double ln_max_ratio = 0.0;
};

struct RatioReport {
  std::vector<BitRatio> bits;
  // Sum of the per-bit maxima: the ln-ratio bound of the whole vector when
  // bits are randomized independently.
  double total_ln_ratio = 0.0;
};

// Reports the exact ratios for any alpha > 0; the BitRand alpha bound is not
// enforced here so that out-of-bound temperatures can be inspected.
absl::StatusOr<RatioReport> LdpRatioReport(const LdpMechanismConfig& cfg);

struct MarginalCheck {
  int index = 0;
  double p_one_given_one = 0.0;
  double p_one_given_zero = 0.0;
  double empirical_one_given_one = 0.0;
  double empirical_one_given_zero = 0.0;
  // Both empirical rates lie within 3 binomial standard deviations.
  bool within_3sigma = false;
};

// Randomizes an all-ones and an all-zeros bit vector `draws` times each and
// compares per-bit output frequencies with the closed forms.
absl::StatusOr<std::vector<MarginalCheck>> CheckMarginals(
    const LdpMechanismConfig& cfg, int64_t draws);

}  // namespace ami_lab

#endif  // AMI_LAB_LDP_H_
