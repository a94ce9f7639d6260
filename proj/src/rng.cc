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

#include "cce_forge/rng.h"

#include <cmath>
#include <numbers>

namespace cce_forge {

int Rng::UniformInt(int n) {
  // Lemire's multiply-shift; the bias is below 2^-32 for the n used here.
  const std::uint64_t x = engine_() >> 32;
  return static_cast<int>((x * static_cast<std::uint64_t>(n)) >> 32);
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = Uniform();
  while (u1 <= 0.0) u1 = Uniform();
  const double u2 = Uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

int Rng::Categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  const double target = Uniform() * total;
  double acc = 0.0;
  int last_positive = 0;
  for (int a = 0; a < static_cast<int>(weights.size()); ++a) {
    if (weights[a] <= 0.0) continue;
    acc += weights[a];
    last_positive = a;
    if (target < acc) return a;
  }
  return last_positive;
}

std::uint64_t MixBits(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t DeriveSeed(std::uint64_t parent, std::uint64_t a,
                         std::uint64_t b) {
  std::uint64_t h = MixBits(parent);
  h = MixBits(h ^ MixBits(a + 0x632be59bd9b4e019ULL));
  h = MixBits(h ^ MixBits(b + 0x85157af5ULL));
  return h;
}

Rng MakeStream(std::uint64_t root_seed, StreamTag tag, std::uint64_t iteration,
               std::uint64_t index) {
  const std::uint64_t tagged =
      DeriveSeed(root_seed, static_cast<std::uint64_t>(tag));
  return Rng(DeriveSeed(tagged, iteration, index));
}

}  // namespace cce_forge
