// Copyright 2026 The cce_forge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CCE_FORGE_RNG_H_
#define CCE_FORGE_RNG_H_

#include <cstdint>
#include <random>
#include <span>

namespace cce_forge {

// Purpose tags for child streams. Values are part of the reproducibility
// contract: changing them changes every trace.
enum class StreamTag : std::uint64_t {
  kRollout = 1,       // AVLPR per-iteration episode of pi^t
  kCceInit = 2,       // D_init collection inside CCE-approx
  kCceExplore = 3,    // exploration episodes inside CCE-approx
  kVExplore = 4,      // exploration episodes inside V-approx
  kLearner = 5,       // learner-internal randomness (FTPL perturbations)
  kRegress = 6,       // Monte-Carlo marginals inside Optimistic-Regress
  kEvaluation = 7,    // Monte-Carlo materialization for diagnostics
  kOutput = 8,        // final uniform draw of pi^out
  kPolicySample = 9,  // DOPMD line-3 policy draws
  kApe = 10,          // APE episodes
  kTest = 99,
};

// Thin wrapper around std::mt19937_64. All distributions are implemented
// here from raw engine output so that draws are identical across standard
// library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double Uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Uniform on {0, ..., n-1}; n must be positive.
  int UniformInt(int n);

  // Standard normal via Box-Muller; caches the second variate.
  double Normal();

  // Inverse-CDF draw from an unnormalized nonnegative weight vector.
  int Categorical(std::span<const double> weights);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 finalizer.
std::uint64_t MixBits(std::uint64_t x);

// Child stream for (tag, iteration, index) under one root seed. Distinct ids
// give statistically independent streams; no two subroutines share one.
Rng MakeStream(std::uint64_t root_seed, StreamTag tag, std::uint64_t iteration,
               std::uint64_t index = 0);

// Derives a child seed (rather than an engine) from a parent seed.
std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t a,
                         std::uint64_t b = 0);

}  // namespace cce_forge

#endif  // CCE_FORGE_RNG_H_
