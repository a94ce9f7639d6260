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

#ifndef CCE_FORGE_VLPR_H_
#define CCE_FORGE_VLPR_H_

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "cce_forge/meta.h"

namespace cce_forge {

using PolicyPtr = std::shared_ptr<const LearnedJointPolicy>;
using ValuePtr = std::shared_ptr<const ValueFunction>;

struct CceApproxResult {
  StepJointPolicy policy;        // (1/K) sum_k mu^k_h
  std::vector<int> init_states;  // step-h states of D_init
  std::int64_t episodes = 0;     // K + K |Gamma_explore|
};

// Algorithm-2 step: D_init from K episodes of pibar, then K rounds over
// Gamma_explore with per-player no-regret updates. `next` holds
// Vbar_{i,h+1} for every player. Streams are derived from (seed, tag).
CceApproxResult CceApprox(const TabularMarkovGame& game,
                          const std::vector<PolicyPtr>& history, int h, int K,
                          const std::vector<ValuePtr>& next,
                          SubroutineBundle& bundle, std::uint64_t seed);

struct VApproxResult {
  std::vector<ValuePtr> values;  // Vbar_{i,h}
  std::int64_t episodes = 0;     // K |Gamma_explore|
};

// Algorithm-3 step: K rounds over Gamma_explore(pibar, pi_h), then
// Optimistic-Regress per player.
VApproxResult VApprox(const TabularMarkovGame& game,
                      const std::vector<PolicyPtr>& history, int h, int K,
                      const StepJointPolicy& pi_h,
                      const std::vector<ValuePtr>& next,
                      std::span<const int> init_states,
                      SubroutineBundle& bundle, std::uint64_t seed);

// Executes one exploration episode: roll in with a uniformly drawn member
// of `history` before step h, play `entry` at step h with `step` supplying
// the non-uniform players, uniform afterwards. Public for tests.
Trajectory ExploreEpisode(const TabularMarkovGame& game,
                          const std::vector<PolicyPtr>& history, int h,
                          const ExploreEntry& entry,
                          const StepJointPolicy& step, Rng& rng);

struct VlprOptions {
  int T = 1;
  double budget_multiplier = 1.0;  // K = max(1, round(multiplier * t))
  int eval_every = 10;             // 0 disables trace evaluation
  int n_mc = 10000;                // per-(h, s) draws for sampled policies
  std::int64_t max_episodes = 0;   // 0: unlimited
  int max_replays = 0;             // AVLPR hard cap, 0: unlimited
};

struct ReplayEvent {
  int t = 0;
  std::vector<std::pair<int, int>> fired;  // (player, step) pairs
  std::vector<double> psi;                 // Psi_{i,h}(B^t_h), [i * H + h]
  std::vector<double> psi_at_last;         // Psi_{i,h}(B^{I_t}_h)
};

struct TraceRow {
  int t = 0;
  bool evaluated = false;
  double gap = 0.0;
  std::int64_t episodes = 0;  // cumulative, after iteration t
  bool replay = false;
  double ms = 0.0;            // wall time of iteration t
};

struct RunTrace {
  std::vector<TraceRow> rows;
  std::vector<ReplayEvent> replays;
  bool truncated = false;
  std::string truncation_reason;
  int suppressed_replays = 0;
  // Largest Monte-Carlo standard error of a materialized row entry.
  double mc_resolution = 0.0;
};

struct RunResult {
  std::vector<PolicyPtr> history;  // pi^1, ..., pi^T (fewer if truncated)
  int output_index = 0;            // uniform draw over history
  RunTrace trace;
  std::int64_t episodes = 0;
};

// Evaluates the exact CCE gap of a learned policy. Sampled policies are
// materialized with n_mc draws per (h, s) using `seed`.
double LearnedPolicyGap(const TabularMarkovGame& game,
                        const LearnedJointPolicy& policy, int n_mc,
                        std::uint64_t seed);

// Per-iteration K.
int InnerBudget(int t, double multiplier);

// Episodes consumed by one replay at budget K: H (K (1 + G) + K G) with
// G = |Gamma_explore|.
std::int64_t ReplayEpisodes(int horizon, int K, int explore_size);

RunResult RunVlpr(const TabularMarkovGame& game, SubroutineBundle& bundle,
                  const VlprOptions& options, std::uint64_t seed);
RunResult RunAvlpr(const TabularMarkovGame& game, SubroutineBundle& bundle,
                   const VlprOptions& options, std::uint64_t seed);

}  // namespace cce_forge

#endif  // CCE_FORGE_VLPR_H_
