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

#ifndef CCE_FORGE_POLICY_H_
#define CCE_FORGE_POLICY_H_

#include <memory>
#include <span>
#include <vector>

#include "cce_forge/game.h"
#include "cce_forge/rng.h"

namespace cce_forge {

// Tolerance used when validating externally supplied probability rows. Rows
// passing the check are renormalized so that they sum to 1 within 1e-12.
inline constexpr double kInputProbTolerance = 1e-9;

// One player's Markov policy: a distribution over own actions for every
// (step, state).
class StagePolicy {
 public:
  // probs is indexed [(h * S + s) * A + a]. Throws ConfigError on bad rows.
  StagePolicy(int player, int horizon, int num_states, int num_actions,
              std::vector<double> probs);

  static StagePolicy Uniform(const TabularMarkovGame& game, int player);
  // choice is indexed [h * S + s].
  static StagePolicy Deterministic(const TabularMarkovGame& game, int player,
                                   std::span<const int> choice);
  static StagePolicy Constant(const TabularMarkovGame& game, int player,
                              int action);

  int Player() const { return player_; }
  int Horizon() const { return horizon_; }
  int NumStates() const { return num_states_; }
  int NumActions() const { return num_actions_; }
  std::span<const double> Row(int h, int s) const {
    return {probs_.data() + (static_cast<std::size_t>(h) * num_states_ + s) *
                                num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }
  const std::vector<double>& Probs() const { return probs_; }

  void CheckCompatible(const TabularMarkovGame& game) const;

 private:
  int player_;
  int horizon_;
  int num_states_;
  int num_actions_;
  std::vector<double> probs_;
};

// Anything that can be executed for a whole episode. BeginEpisode performs
// the once-per-episode draws (mixture member); Act then produces the joint
// action at each visited (h, s).
class EpisodePolicy {
 public:
  virtual ~EpisodePolicy() = default;
  // Markov policies act on (h, s) only; episode mixtures are not Markov.
  virtual bool IsMarkov() const { return true; }
  // Throws ConfigError on a dimension mismatch with `game`.
  virtual void CheckCompatible(const TabularMarkovGame& game) const = 0;
  virtual int BeginEpisode(Rng&) const { return 0; }
  virtual void Act(int member, int h, int s, Rng& rng,
                   std::span<int> actions) const = 0;
};

// Explicit per-(h, s) joint distributions; the form consumed by the exact
// evaluator.
class JointPolicyTable : public EpisodePolicy {
 public:
  // probs is indexed [(h * S + s) * J + joint]. Throws ConfigError.
  JointPolicyTable(int horizon, int num_states, std::vector<int> num_actions,
                   std::vector<double> probs);

  int Horizon() const { return horizon_; }
  int NumStates() const { return num_states_; }
  int NumPlayers() const { return static_cast<int>(num_actions_.size()); }
  int NumJointActions() const { return num_joint_; }
  const std::vector<int>& ActionCounts() const { return num_actions_; }

  std::span<const double> JointRow(int h, int s) const {
    return {probs_.data() +
                (static_cast<std::size_t>(h) * num_states_ + s) * num_joint_,
            static_cast<std::size_t>(num_joint_)};
  }
  // Player i's own-action marginal at (h, s).
  std::vector<double> Marginal(int player, int h, int s) const;
  // Marginal over the other players' actions, flattened row-major over
  // players j != i in index order.
  std::vector<double> OpponentMarginal(int player, int h, int s) const;

  void CheckCompatible(const TabularMarkovGame& game) const override;
  void Act(int member, int h, int s, Rng& rng,
           std::span<int> actions) const override;

 private:
  int horizon_;
  int num_states_;
  std::vector<int> num_actions_;
  std::vector<int> strides_;
  int num_joint_;
  std::vector<double> probs_;
};

// Index of the opponents' sub-profile inside a joint index, matching the
// layout of JointPolicyTable::OpponentMarginal.
inline int OpponentIndex(int joint, int stride, int num_actions) {
  return (joint / (stride * num_actions)) * stride + joint % stride;
}

// Correlated Markov joint policy stored as a weighted mixture of product
// policies. When executed, the component is re-drawn independently at every
// state visit: the mixture acts as a per-step correlation device, so the
// per-(h, s) joint law is sum_k w_k prod_i mu^k_i(a_i | s).
class MarkovJointPolicy : public EpisodePolicy {
 public:
  struct Component {
    double weight;
    std::vector<StagePolicy> players;
  };

  // Weights must be nonnegative and sum to 1 within kInputProbTolerance.
  explicit MarkovJointPolicy(std::vector<Component> components);

  static MarkovJointPolicy Product(std::vector<StagePolicy> players);
  static MarkovJointPolicy Uniform(const TabularMarkovGame& game);

  const std::vector<Component>& Components() const { return components_; }
  int NumPlayers() const {
    return static_cast<int>(components_.front().players.size());
  }
  int Horizon() const { return components_.front().players.front().Horizon(); }
  int NumStates() const {
    return components_.front().players.front().NumStates();
  }
  std::vector<int> ActionCounts() const;

  std::vector<double> JointDistribution(int h, int s) const;
  std::vector<double> MarginalDistribution(int player, int h, int s) const;
  std::vector<double> OpponentMarginal(int player, int h, int s) const;
  JointPolicyTable ToTable() const;

  void CheckCompatible(const TabularMarkovGame& game) const override;
  void Act(int member, int h, int s, Rng& rng,
           std::span<int> actions) const override;

 private:
  std::vector<Component> components_;
  std::vector<double> weights_;
};

// Whole-episode mixture: one member is drawn per episode and executed for
// the entire episode. Members must be Markov.
class EpisodeMixturePolicy : public EpisodePolicy {
 public:
  EpisodeMixturePolicy(std::vector<std::shared_ptr<const EpisodePolicy>> members,
                       std::vector<double> weights);
  static EpisodeMixturePolicy UniformOver(
      std::vector<std::shared_ptr<const EpisodePolicy>> members);

  bool IsMarkov() const override { return false; }
  const std::vector<std::shared_ptr<const EpisodePolicy>>& Members() const {
    return members_;
  }
  const std::vector<double>& Weights() const { return weights_; }

  void CheckCompatible(const TabularMarkovGame& game) const override;
  int BeginEpisode(Rng& rng) const override;
  // Executes member `member` (as returned by BeginEpisode).
  void Act(int member, int h, int s, Rng& rng,
           std::span<int> actions) const override;

 private:
  std::vector<std::shared_ptr<const EpisodePolicy>> members_;
  std::vector<double> weights_;
};

// (s_1, a_1, r_1, ..., s_H, a_H, r_H) plus the terminal state s_{H+1}.
struct Trajectory {
  int num_players = 0;
  std::vector<int> states;      // H + 1 entries
  std::vector<int> actions;     // [h * m + i]
  std::vector<double> rewards;  // [h * m + i]

  int Horizon() const { return static_cast<int>(states.size()) - 1; }
  int State(int h) const { return states[h]; }
  int Action(int h, int player) const { return actions[h * num_players + player]; }
  double Reward(int h, int player) const {
    return rewards[h * num_players + player];
  }
};

// Draws one episode. Deterministic given the rng state. Throws ConfigError
// when the policy does not fit the game.
Trajectory SampleEpisode(const TabularMarkovGame& game,
                         const EpisodePolicy& policy, Rng& rng);

// Same draw without the compatibility check, for hot loops whose policy was
// checked once up front.
Trajectory SampleEpisodeUnchecked(const TabularMarkovGame& game,
                                  const EpisodePolicy& policy, Rng& rng);

}  // namespace cce_forge

#endif  // CCE_FORGE_POLICY_H_
