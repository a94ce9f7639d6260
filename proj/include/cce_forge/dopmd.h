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

#ifndef CCE_FORGE_DOPMD_H_
#define CCE_FORGE_DOPMD_H_

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "cce_forge/evaluation.h"
#include "cce_forge/policy.h"
#include "cce_forge/vlpr.h"

namespace cce_forge {

// Finite marginal-Q class F_i = F_{i,1} x ... x F_{i,H}; each layer is a
// list of S x A_i tables indexed [s * A + a] with range [0, H - h].
class FunctionClass {
 public:
  FunctionClass(int player, int num_states, int num_actions,
                std::vector<std::vector<std::vector<double>>> layers);

  int Player() const { return player_; }
  int Horizon() const { return static_cast<int>(layers_.size()); }
  int NumStates() const { return num_states_; }
  int NumActions() const { return num_actions_; }
  int LayerSize(int h) const { return static_cast<int>(layers_[h].size()); }
  // Number of tuples (f_1, ..., f_H).
  std::int64_t NumTuples() const;
  // Layer-h index of tuple `tuple` (row-major, layer 0 most significant).
  int LayerIndex(std::int64_t tuple, int h) const;
  double At(int h, int index, int s, int a) const {
    return layers_[h][index][static_cast<std::size_t>(s) * num_actions_ + a];
  }
  const std::vector<double>& Table(int h, int index) const {
    return layers_[h][index];
  }

 private:
  int player_;
  int num_states_;
  int num_actions_;
  std::vector<std::vector<std::vector<double>>> layers_;
  std::vector<std::int64_t> strides_;
};

// Square-loss confidence set over F_i x Pi_i, stored as a membership mask
// with incrementally maintained per-layer losses.
class ApeConfidenceSet {
 public:
  ApeConfidenceSet(const FunctionClass& functions,
                   const std::vector<StagePolicy>& policies, double beta,
                   int initial_state);

  // Adds (s_h, a_{i,h}, r_{i,h}, s_{h+1}) for every h, then intersects the
  // set with the new loss constraints.
  void AddEpisode(const Trajectory& traj, int player);

  bool Contains(std::int64_t tuple, int policy) const {
    return member_[static_cast<std::size_t>(tuple) * num_policies_ + policy];
  }
  std::int64_t RetainedCount() const;
  std::int64_t RetainedCount(int policy) const;
  // max / min over retained f of sum_a pi_{i,1}(a|s_1) f_1(s_1, a).
  double Upper(int policy) const;
  double Lower(int policy) const;
  double Width(int policy) const { return Upper(policy) - Lower(policy); }
  // L_h(f_h, f_{h+1}, pi) for layer indices (f_h, f_next); f_next is ignored
  // at the last layer.
  double Loss(int h, int f_h, int f_next, int policy) const;

 private:
  std::size_t LossIndex(int h, int f_h, int f_next, int policy) const;
  void Recompute();

  const FunctionClass& functions_;
  const std::vector<StagePolicy>& policies_;
  double beta_;
  int initial_state_;
  int num_policies_;
  std::vector<std::size_t> loss_offsets_;
  std::vector<double> losses_;
  std::vector<char> member_;
  std::vector<double> start_values_;  // [f_1 index * |Pi| + policy]
};

struct ApeResult {
  std::vector<double> upper;          // per pi_i, from the set at round K
  std::vector<double> lower;
  std::vector<int> chosen;            // pi^k_i per round
  std::vector<double> chosen_width;   // width of pi^k_i at round k
  std::vector<std::int64_t> retained;  // |B^k| per round
  std::int64_t episodes = 0;
};

// beta = c H^2 log(|Pi_i| |F_i| K H / delta).
double ApeBeta(const FunctionClass& functions, int num_policies, int K,
               double delta, double c = 1.0);

// Explorative all-policy evaluation for player i against the fixed product
// opponents policy `opponents` (entries for j != i are used; entry i is
// ignored). Consumes exactly K episodes.
ApeResult Ape(const TabularMarkovGame& game, int player,
              const FunctionClass& functions,
              const std::vector<StagePolicy>& policies,
              const std::vector<StagePolicy>& opponents, int K, double beta,
              Rng& rng);

struct HedgeState {
  std::vector<double> weights;
  double eta = 0.0;
};

HedgeState HedgeInit(int size, double eta);
// weights ∝ weights * exp(eta * values), shifted by max(values).
void HedgeUpdate(HedgeState& state, std::span<const double> values);
// eta_i = scale * sqrt(log |Pi_i| / (H^2 T)).
double HedgeLearningRate(int class_size, int horizon, int T,
                         double scale = 1.0);

struct DopmdOptions {
  int T = 1;
  std::vector<int> K;        // per player
  std::vector<double> beta;  // per player; empty -> ApeBeta with beta_c
  double beta_c = 1.0;
  double delta = 0.05;
  double eta_scale = 1.0;
  int eval_every = 10;
  std::int64_t max_episodes = 0;
  std::int64_t max_profiles = 1 << 20;
};

struct DopmdResult {
  // lambdas[t][i] is Lambda^{t+1}_i; lambdas[0] is uniform.
  std::vector<std::vector<std::vector<double>>> lambdas;
  std::vector<double> average_profile_weights;  // Lambda-bar over profiles
  RunTrace trace;
  std::int64_t episodes = 0;
  double final_gap = 0.0;
};

DopmdResult RunDopmd(const TabularMarkovGame& game,
                     const std::vector<FunctionClass>& functions,
                     const std::vector<std::vector<StagePolicy>>& policies,
                     const DopmdOptions& options, std::uint64_t seed);

// Every deterministic Markov policy of player i (A_i^{H S} of them, so only
// for tiny games). Throws ResourceError above `limit`.
std::vector<StagePolicy> AllDeterministicPolicies(const TabularMarkovGame& game,
                                                  int player,
                                                  std::int64_t limit = 4096);

// Realizable class: for every profile of the policy classes, player i's
// exact marginal Q-tables are added to the layers.
std::vector<FunctionClass> ExactMarginalQClasses(
    const TabularMarkovGame& game,
    const std::vector<std::vector<StagePolicy>>& policies);

// Class files:
//   {"policy_classes": {"generator": "all_deterministic"} |
//                      [i] -> list of [h][s][a],
//    "function_classes": {"generator": "exact_marginal_q"} |
//                        [i] -> [h] -> list of [s][a]}
struct ClassSet {
  std::vector<std::vector<StagePolicy>> policies;
  std::vector<FunctionClass> functions;
};
ClassSet ClassesFromJson(const nlohmann::json& j, const TabularMarkovGame& game);

}  // namespace cce_forge

#endif  // CCE_FORGE_DOPMD_H_
