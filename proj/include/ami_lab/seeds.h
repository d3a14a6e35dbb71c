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

#ifndef AMI_LAB_SEEDS_H_
#define AMI_LAB_SEEDS_H_

#include <cstdint>
#include <random>

namespace ami_lab {

// All randomness in the library flows through this engine type.
using Rng = std::mt19937_64;

// Stream identifiers for DeriveSeed. Values are part of the reproducibility
// contract: changing one changes every downstream number.
enum class SeedStream : uint64_t {
  kTrial = 1,
  kClientData = 2,
  kAdversaryData = 3,
  kAdversaryInit = 4,
  kClientPerturbation = 5,
  kCertifyTarget = 6,
  kCertifyPool = 7,
  kDpsgdNoise = 8,
  kSynth = 9,
  kChallengeBit = 10,
  kCoinFlip = 11,
  kTargetPerturbation = 12,
};

uint64_t SplitMix64(uint64_t x);

// Counter-based seed splitting: the child seed depends only on
// (parent, stream, index), so adding trials never shifts earlier ones.
uint64_t DeriveSeed(uint64_t parent, SeedStream stream, uint64_t index = 0);

inline Rng MakeRng(uint64_t parent, SeedStream stream, uint64_t index = 0) {
  return Rng(DeriveSeed(parent, stream, index));
}

// Uniform double in [0, 1) using the top 53 bits of one engine draw.
inline double UniformUnit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace ami_lab

#endif  // AMI_LAB_SEEDS_H_
