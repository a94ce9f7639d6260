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

#ifndef CCE_FORGE_EVALUATION_H_
#define CCE_FORGE_EVALUATION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "cce_forge/game.h"
#include "cce_forge/policy.h"

namespace cce_forge {

// V_{i,h}(s) for h = 0..H (layer H is the zero terminal layer).
struct ValueVector {
  int num_players = 0;
  int horizon = 0;
  int num_states = 0;
  int initial_state = 0;
  std::vector<double> values;  // [(i * (H + 1) + h) * S + s]

  double At(int player, int h, int s) const {
    return values[(static_cast<std::size_t>(player) * (horizon + 1) + h) *
                      num_states +
                  s];
  }
  double& At(int player, int h, int s) {
    return values[(static_cast<std::size_t>(player) * (horizon + 1) + h) *
                      num_states +
                  s];
  }
  // V_{i,1}(s_1).
  double Initial(int player) const { return At(player, 0, initial_state); }
};

ValueVector ExactValue(const TabularMarkovGame& game,
                       const JointPolicyTable& policy);
ValueVector ExactValue(const TabularMarkovGame& game,
                       const MarkovJointPolicy& policy);
// Accepts any Markov policy type known to the evaluator; an episode mixture
// is rejected with ConfigError.
ValueVector ExactValue(const TabularMarkovGame& game,
                       const EpisodePolicy& policy);

struct BestResponse {
  double value = 0.0;          // V^{dagger}_{i,1}(s_1)
  std::vector<double> values;  // [h * S + s], h = 0..H
  StagePolicy policy;          // deterministic maximizer, lowest-index ties
};

// Backward DP against the opponents' per-(h, s) marginals.
BestResponse ComputeBestResponse(const TabularMarkovGame& game,
                                 const JointPolicyTable& policy, int player);
double BestResponseValue(const TabularMarkovGame& game,
                         const JointPolicyTable& policy, int player);
double BestResponseValue(const TabularMarkovGame& game,
                         const EpisodePolicy& policy, int player);

struct GapReport {
  double gap = 0.0;
  std::vector<double> values;          // V_{i,1}(s_1)
  std::vector<double> best_responses;  // V^{dagger}_{i,1}(s_1)

  double PlayerGap(int i) const { return best_responses[i] - values[i]; }
};

GapReport CceGapReport(const TabularMarkovGame& game,
                       const JointPolicyTable& policy);
double CceGap(const TabularMarkovGame& game, const JointPolicyTable& policy);
double CceGap(const TabularMarkovGame& game, const MarkovJointPolicy& policy);
double CceGap(const TabularMarkovGame& game, const EpisodePolicy& policy);

// Player i's marginal Q against the opponents' per-(h, s) marginals:
// Q_{i,h}(s, a_i) = E_{a_{-i}}[r_{i,h} + P_h V^pi_{i,h+1}](s, a_i, a_{-i}),
// indexed [(h * S + s) * A_i + a_i] for h < H. For product policies this is
// the marginal Q-function of the policy itself.
std::vector<double> MarginalQ(const TabularMarkovGame& game,
                              const JointPolicyTable& policy, int player);

// Explicit table for any evaluable Markov policy; throws ConfigError for an
// EpisodeMixturePolicy.
JointPolicyTable ToJointTable(const EpisodePolicy& policy);

// Visitation probabilities P(s_h = s) for h = 0..H, indexed [h * S + s].
std::vector<double> Occupancy(const TabularMarkovGame& game,
                              const JointPolicyTable& policy);

// Exact value of every profile of a finite per-player policy-class list.
// Profiles are flattened row-major by player, like joint actions.
class RestrictedPayoffs {
 public:
  // Throws ResourceError when the profile count exceeds max_profiles.
  RestrictedPayoffs(const TabularMarkovGame& game,
                    std::vector<std::vector<StagePolicy>> classes,
                    std::int64_t max_profiles = 1 << 20);

  int NumPlayers() const { return static_cast<int>(classes_.size()); }
  int ClassSize(int player) const {
    return static_cast<int>(classes_[player].size());
  }
  int NumProfiles() const { return num_profiles_; }
  const std::vector<int>& Strides() const { return strides_; }
  // V_{i,1}(s_1) under the product policy of `profile`.
  double Value(int player, int profile) const {
    return values_[static_cast<std::size_t>(profile) * NumPlayers() + player];
  }
  const std::vector<std::vector<StagePolicy>>& Classes() const {
    return classes_;
  }

 private:
  std::vector<std::vector<StagePolicy>> classes_;
  std::vector<int> strides_;
  int num_profiles_ = 0;
  std::vector<double> values_;
};

struct RestrictedGapReport {
  double gap = 0.0;
  std::vector<double> player_gaps;
  std::vector<double> values;           // V^Lambda_i
  std::vector<int> best_deviation;      // argmax over Pi_i, lowest index
  std::vector<double> deviation_values;  // V^{pi_dagger x Lambda_{-i}}
};

// Gap of a distribution over class profiles (weights sum to 1, indexed
// like RestrictedPayoffs profiles). The deviating player replaces only its
// own draw, so correlation among the others is preserved.
RestrictedGapReport RestrictedCceGapReport(const RestrictedPayoffs& payoffs,
                                           std::span<const double> weights);

// Gap of a product Lambda = prod_i Lambda_i over the classes.
double RestrictedCceGap(const TabularMarkovGame& game,
                        const std::vector<std::vector<StagePolicy>>& classes,
                        const std::vector<std::vector<double>>& lambdas,
                        std::int64_t max_profiles = 1 << 20);

// Running average of products prod_i Lambda^t_i, i.e. the DOPMD output
// mixture, kept as a profile distribution for cheap repeated gap queries.
class RestrictedGapAccumulator {
 public:
  explicit RestrictedGapAccumulator(const RestrictedPayoffs& payoffs);

  void AddProduct(const std::vector<std::vector<double>>& lambdas);
  int Count() const { return count_; }
  std::vector<double> ProfileWeights() const;
  RestrictedGapReport Report() const;

 private:
  const RestrictedPayoffs& payoffs_;
  std::vector<double> mass_;
  int count_ = 0;
};

}  // namespace cce_forge

#endif  // CCE_FORGE_EVALUATION_H_
