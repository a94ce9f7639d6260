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

#ifndef CCE_FORGE_META_H_
#define CCE_FORGE_META_H_

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cce_forge/game.h"
#include "cce_forge/policy.h"
#include "cce_forge/rng.h"

namespace cce_forge {

// What one player gets to see from one exploration episode:
// (s_h, a_{i,h}, r_{i,h} + Vbar_{i,h+1}(s_{h+1})). Nothing about the other
// players' actions or rewards ever reaches a learner.
struct LocalSample {
  int state = 0;
  int action = 0;
  double target = 0.0;
};

// One player's policy at one step, as a function of the state.
class PlayerStepRule {
 public:
  virtual ~PlayerStepRule() = default;
  virtual int NumActions() const = 0;
  virtual int Sample(int s, Rng& rng) const = 0;
  // Writes pi(. | s). Exact rules ignore rng; sampled rules use it for a
  // Monte-Carlo estimate.
  virtual void Probabilities(int s, std::span<double> out, Rng& rng) const = 0;
  virtual bool IsExact() const = 0;
};

// Explicit S x A table.
class TableRule : public PlayerStepRule {
 public:
  TableRule(int num_states, int num_actions, std::vector<double> probs);
  static std::shared_ptr<const TableRule> Uniform(int num_states,
                                                  int num_actions);

  int NumActions() const override { return num_actions_; }
  int Sample(int s, Rng& rng) const override;
  void Probabilities(int s, std::span<double> out, Rng& rng) const override;
  bool IsExact() const override { return true; }
  std::span<const double> Row(int s) const {
    return {probs_.data() + static_cast<std::size_t>(s) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }

 private:
  int num_states_;
  int num_actions_;
  std::vector<double> probs_;
};

using RulePtr = std::shared_ptr<const PlayerStepRule>;

// pi_h = sum_k w_k prod_i mu^k_{i,h}: the per-step correlated output of
// CCE-approx. components[k][i] is player i's rule in component k.
class StepJointPolicy {
 public:
  StepJointPolicy(std::vector<std::vector<RulePtr>> components,
                  std::vector<double> weights);
  static StepJointPolicy EqualWeights(std::vector<std::vector<RulePtr>> components);
  static StepJointPolicy Product(std::vector<RulePtr> players);

  int NumPlayers() const { return static_cast<int>(components_.front().size()); }
  int NumComponents() const { return static_cast<int>(components_.size()); }
  const std::vector<RulePtr>& Component(int k) const { return components_[k]; }
  const std::vector<double>& Weights() const { return weights_; }
  // Player i's rules across components (what player i itself knows of pi_h).
  std::vector<RulePtr> PlayerRules(int player) const;
  bool IsExact() const;

  // Draws a component, then every player's action from it.
  void Sample(int s, Rng& rng, std::span<int> actions) const;
  // Draws a component, then only player i's action.
  int SamplePlayer(int player, int s, Rng& rng) const;

 private:
  std::vector<std::vector<RulePtr>> components_;
  std::vector<double> weights_;
  bool uniform_weights_ = true;
};

// A learned Markov joint policy pi = (pi_1, ..., pi_H).
class LearnedJointPolicy : public EpisodePolicy {
 public:
  LearnedJointPolicy(int num_states, std::vector<int> num_actions,
                     std::vector<StepJointPolicy> steps);
  // pi^1: every player uniform at every (h, s).
  static std::shared_ptr<const LearnedJointPolicy> Uniform(
      const TabularMarkovGame& game);

  int Horizon() const { return static_cast<int>(steps_.size()); }
  int NumStates() const { return num_states_; }
  const std::vector<int>& ActionCounts() const { return num_actions_; }
  const StepJointPolicy& Step(int h) const { return steps_[h]; }
  bool IsExact() const;

  void CheckCompatible(const TabularMarkovGame& game) const override;
  void Act(int member, int h, int s, Rng& rng,
           std::span<int> actions) const override;

 private:
  int num_states_;
  std::vector<int> num_actions_;
  std::vector<StepJointPolicy> steps_;
};

// Explicit per-(h, s) joint table. Exact when every rule is exact;
// otherwise each row is the empirical law of n_mc joint draws.
JointPolicyTable Materialize(const LearnedJointPolicy& policy, int n_mc,
                             std::uint64_t seed);

// Vbar_{i,h}, queried at individual states.
class ValueFunction {
 public:
  virtual ~ValueFunction() = default;
  virtual double Value(int s) const = 0;
};

// Vbar_{i,H+1} = 0.
class ZeroValue : public ValueFunction {
 public:
  double Value(int) const override { return 0.0; }
};

// No-Regret-Alg state for one (player, step) inside one CCE-approx call.
class NoRegretLearner {
 public:
  virtual ~NoRegretLearner() = default;
  // Snapshot of mu^k_{i,h}; stays valid after later updates.
  virtual RulePtr Current() = 0;
  // Consumes D^{k,i}_sample (possibly empty) and moves to mu^{k+1}.
  virtual void Update(std::span<const LocalSample> samples) = 0;
};

// Monotone dataset statistic Psi_{i,h}(B_h), maintained incrementally.
class TriggerState {
 public:
  virtual ~TriggerState() = default;
  virtual void Add(int state) = 0;
  virtual double Value() const = 0;
};

// Entry of Gamma_explore(pibar, mu_h): after the roll-in with pibar for
// steps < h, player j plays uniformly at step h when uniform_at_step[j],
// otherwise mu_{j,h}; play after step h is uniform. Players in `active`
// keep the step-h sample.
struct ExploreEntry {
  std::vector<bool> uniform_at_step;
  std::vector<int> active;
};

// The pluggable subroutines (exploration scheme, No-Regret-Alg,
// Optimistic-Regress, trigger) of one instantiation.
class SubroutineBundle {
 public:
  virtual ~SubroutineBundle() = default;
  virtual std::string Name() const = 0;

  virtual std::vector<ExploreEntry> ExploreSet() const = 0;

  // Learner for player i at step h with budget K. init_states are the
  // step-h states of D_init (K episodes of pibar).
  virtual std::unique_ptr<NoRegretLearner> MakeLearner(
      int player, int h, int K, std::span<const int> init_states,
      std::uint64_t seed) = 0;

  // Optimistic-Regress for player i at step h. own_rules is player i's own
  // part of pi_h (its rule in each component, with the component weights);
  // init_states are the D_init states collected by the CCE-approx call of
  // the same (iteration, h).
  virtual std::shared_ptr<const ValueFunction> Regress(
      int player, int h, int K, std::span<const int> init_states,
      std::span<const LocalSample> data, const std::vector<RulePtr>& own_rules,
      const std::vector<double>& weights, std::uint64_t seed) = 0;

  virtual std::unique_ptr<TriggerState> MakeTrigger(int player, int h) = 0;
};

}  // namespace cce_forge

#endif  // CCE_FORGE_META_H_
