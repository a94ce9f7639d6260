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

#ifndef CCE_FORGE_TABULAR_H_
#define CCE_FORGE_TABULAR_H_

#include <memory>
#include <span>
#include <vector>

#include "cce_forge/meta.h"

namespace cce_forge {

// Per-state EXP3-IX for one (player, step). Policies are
// mu(.|s) ∝ exp(-eta * L(s,.)).
class Exp3IxState {
 public:
  Exp3IxState(int num_states, int num_actions, double eta, double gamma,
              double horizon);

  int NumStates() const { return num_states_; }
  int NumActions() const { return num_actions_; }
  double Eta() const { return eta_; }
  double Gamma() const { return gamma_; }
  double Horizon() const { return horizon_; }
  std::span<const double> Policy(int s) const {
    return {policy_.data() + static_cast<std::size_t>(s) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }
  std::span<const double> CumulativeLoss(int s) const {
    return {loss_.data() + static_cast<std::size_t>(s) * num_actions_,
            static_cast<std::size_t>(num_actions_)};
  }
  // Adds `value` to L(s, a) and refreshes mu(.|s).
  void AddLoss(int s, int a, double value);

 private:
  int num_states_;
  int num_actions_;
  double eta_;
  double gamma_;
  double horizon_;
  std::vector<double> loss_;
  std::vector<double> policy_;
};

// One nonzero entry of an importance-weighted loss vector.
struct SparseLoss {
  int state = 0;
  int action = 0;
  double value = 0.0;
};

// (H - y) / (mu(a|s) + gamma) at the visited (s, a). Throws
// ContractViolation when y lies outside [0, H].
SparseLoss Exp3IxLossEstimate(const Exp3IxState& state, int s, int a, double y);
void Exp3IxUpdate(Exp3IxState& state, const SparseLoss& loss);

// eta_i = scale * sqrt(S log T / (H^2 A_i T)). log T is taken at T >= 2 so
// that a one-iteration run still gets a positive rate.
double Exp3IxLearningRate(int num_states, int horizon, int num_actions, int T,
                          double scale = 1.0);

// beta_i(n) = c1 * iota / (eta (n + iota)) + c2 * eta H^2 A_i.
double TabularBonus(double n, double eta, double horizon, int num_actions,
                    double iota, double c1 = 1.0, double c2 = 1.0);

// iota = log(K S A_i H m / delta).
double TabularIota(int K, int num_states, int num_actions, int horizon,
                   int num_players, double delta);

// Per-state visit counts and target sums of D_reg for one (player, step).
struct TabularRegressState {
  std::vector<int> counts;
  std::vector<double> sums;

  explicit TabularRegressState(int num_states)
      : counts(num_states, 0), sums(num_states, 0.0) {}
  void Add(const LocalSample& sample);
};

struct TabularBonusParams {
  double eta = 1.0;
  double iota = 1.0;
  int num_actions = 1;
  double c1 = 1.0;
  double c2 = 1.0;
};

// Vbar(s) = ceiling for unvisited s, else min(mean + beta(N(s)), ceiling),
// where ceiling = H - h for the 0-based step h (H - h + 1 one-based).
std::vector<double> TabularOptimisticRegress(const TabularRegressState& state,
                                             int h, int horizon,
                                             const TabularBonusParams& params);

// Psi_h(B_h) = sum_s ln max(count(s), 1).
class TabularTrigger : public TriggerState {
 public:
  explicit TabularTrigger(int num_states) : counts_(num_states, 0) {}
  void Add(int state) override { ++counts_[state]; }
  double Value() const override;
  const std::vector<long long>& Counts() const { return counts_; }

 private:
  std::vector<long long> counts_;
};

double TabularTriggerValue(std::span<const long long> counts);

class TableValue : public ValueFunction {
 public:
  explicit TableValue(std::vector<double> values) : values_(std::move(values)) {}
  double Value(int s) const override { return values_[s]; }
  const std::vector<double>& Values() const { return values_; }

 private:
  std::vector<double> values_;
};

struct TabularOptions {
  double delta = 0.05;
  double c1 = 1.0;        // bonus constants
  double c2 = 1.0;
  double eta_scale = 1.0;
  double gamma_ratio = 0.5;  // gamma_i = gamma_ratio * eta_i
};

// Tabular instantiation: Gamma_explore = {(pibar ⊙ mu_h, all players)},
// EXP3-IX learners, averaging-with-bonus regression, log-count trigger.
class TabularBundle : public SubroutineBundle {
 public:
  TabularBundle(const TabularMarkovGame& game, TabularOptions options);

  std::string Name() const override { return "tabular"; }
  std::vector<ExploreEntry> ExploreSet() const override;
  std::unique_ptr<NoRegretLearner> MakeLearner(int player, int h, int K,
                                               std::span<const int> init_states,
                                               std::uint64_t seed) override;
  std::shared_ptr<const ValueFunction> Regress(
      int player, int h, int K, std::span<const int> init_states,
      std::span<const LocalSample> data, const std::vector<RulePtr>& own_rules,
      const std::vector<double>& weights, std::uint64_t seed) override;
  std::unique_ptr<TriggerState> MakeTrigger(int player, int h) override;

  // The learner plays K rounds per call, so K stands in for the horizon T.
  double Eta(int player, int K) const;
  const TabularOptions& Options() const { return options_; }

 private:
  int horizon_;
  int num_states_;
  std::vector<int> num_actions_;
  TabularOptions options_;
};

}  // namespace cce_forge

#endif  // CCE_FORGE_TABULAR_H_
