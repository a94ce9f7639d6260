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

#include "cce_forge/tabular.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cce_forge/errors.h"

namespace cce_forge {

Exp3IxState::Exp3IxState(int num_states, int num_actions, double eta,
                         double gamma, double horizon)
    : num_states_(num_states),
      num_actions_(num_actions),
      eta_(eta),
      gamma_(gamma),
      horizon_(horizon),
      loss_(static_cast<std::size_t>(num_states) * num_actions, 0.0),
      policy_(static_cast<std::size_t>(num_states) * num_actions,
              1.0 / num_actions) {
  if (num_states <= 0 || num_actions <= 0 || !(eta >= 0.0) ||
      !(gamma >= 0.0) || !(horizon > 0.0)) {
    throw ConfigError("Exp3IxState: invalid parameters");
  }
}

void Exp3IxState::AddLoss(int s, int a, double value) {
  double* L = loss_.data() + static_cast<std::size_t>(s) * num_actions_;
  double* mu = policy_.data() + static_cast<std::size_t>(s) * num_actions_;
  L[a] += value;
  const double lo = *std::min_element(L, L + num_actions_);
  double z = 0.0;
  for (int b = 0; b < num_actions_; ++b) {
    mu[b] = std::exp(-eta_ * (L[b] - lo));
    z += mu[b];
  }
  for (int b = 0; b < num_actions_; ++b) mu[b] /= z;
}

SparseLoss Exp3IxLossEstimate(const Exp3IxState& state, int s, int a,
                              double y) {
  const double H = state.Horizon();
  if (!(y >= -1e-12 && y <= H + 1e-12)) {
    std::ostringstream os;
    os << "EXP3-IX target " << y << " outside [0, " << H << "]";
    throw ContractViolation(os.str());
  }
  y = std::clamp(y, 0.0, H);
  return {s, a, (H - y) / (state.Policy(s)[a] + state.Gamma())};
}

void Exp3IxUpdate(Exp3IxState& state, const SparseLoss& loss) {
  if (!(loss.value >= 0.0) || !std::isfinite(loss.value)) {
    throw ContractViolation("EXP3-IX loss must be finite and nonnegative");
  }
  if (loss.value == 0.0) return;
  state.AddLoss(loss.state, loss.action, loss.value);
}

double Exp3IxLearningRate(int num_states, int horizon, int num_actions, int T,
                          double scale) {
  const double t = std::max(T, 2);
  return scale * std::sqrt(num_states * std::log(t) /
                           (static_cast<double>(horizon) * horizon *
                            num_actions * t));
}

double TabularBonus(double n, double eta, double horizon, int num_actions,
                    double iota, double c1, double c2) {
  return c1 * iota / (eta * (n + iota)) + c2 * eta * horizon * horizon *
                                              num_actions;
}

double TabularIota(int K, int num_states, int num_actions, int horizon,
                   int num_players, double delta) {
  return std::log(static_cast<double>(K) * num_states * num_actions * horizon *
                  num_players / delta);
}

void TabularRegressState::Add(const LocalSample& sample) {
  ++counts[sample.state];
  sums[sample.state] += sample.target;
}

std::vector<double> TabularOptimisticRegress(const TabularRegressState& state,
                                             int h, int horizon,
                                             const TabularBonusParams& params) {
  const double ceiling = horizon - h;
  std::vector<double> v(state.counts.size(), ceiling);
  for (std::size_t s = 0; s < v.size(); ++s) {
    const int n = state.counts[s];
    if (n == 0) continue;
    const double beta =
        TabularBonus(n, params.eta, horizon, params.num_actions, params.iota,
                     params.c1, params.c2);
    v[s] = std::clamp(state.sums[s] / n + beta, 0.0, ceiling);
  }
  return v;
}

double TabularTriggerValue(std::span<const long long> counts) {
  double psi = 0.0;
  for (long long c : counts) {
    if (c > 1) psi += std::log(static_cast<double>(c));
  }
  return psi;
}

double TabularTrigger::Value() const { return TabularTriggerValue(counts_); }

namespace {

class TabularLearner : public NoRegretLearner {
 public:
  TabularLearner(int num_states, int num_actions, double eta, double gamma,
                 double horizon)
      : state_(num_states, num_actions, eta, gamma, horizon) {}

  RulePtr Current() override {
    if (!snapshot_) {
      std::vector<double> probs;
      probs.reserve(static_cast<std::size_t>(state_.NumStates()) *
                    state_.NumActions());
      for (int s = 0; s < state_.NumStates(); ++s) {
        const auto row = state_.Policy(s);
        probs.insert(probs.end(), row.begin(), row.end());
      }
      snapshot_ = std::make_shared<const TableRule>(
          state_.NumStates(), state_.NumActions(), std::move(probs));
    }
    return snapshot_;
  }

  void Update(std::span<const LocalSample> samples) override {
    // Estimates are formed against mu^k, then applied together.
    std::vector<SparseLoss> losses;
    for (const auto& x : samples) {
      losses.push_back(Exp3IxLossEstimate(state_, x.state, x.action, x.target));
    }
    for (const auto& l : losses) {
      if (l.value != 0.0) {
        Exp3IxUpdate(state_, l);
        snapshot_.reset();
      }
    }
  }

 private:
  Exp3IxState state_;
  RulePtr snapshot_;
};

}  // namespace

TabularBundle::TabularBundle(const TabularMarkovGame& game,
                             TabularOptions options)
    : horizon_(game.Horizon()),
      num_states_(game.NumStates()),
      num_actions_(game.ActionCounts()),
      options_(options) {
  if (!(options_.delta > 0.0 && options_.delta < 1.0) ||
      !(options_.c1 >= 0.0) || !(options_.c2 >= 0.0) ||
      !(options_.eta_scale > 0.0) || !(options_.gamma_ratio >= 0.0)) {
    throw ConfigError("tabular options out of range");
  }
}

double TabularBundle::Eta(int player, int K) const {
  return Exp3IxLearningRate(num_states_, horizon_, num_actions_[player],
                            K, options_.eta_scale);
}

std::vector<ExploreEntry> TabularBundle::ExploreSet() const {
  ExploreEntry e;
  e.uniform_at_step.assign(num_actions_.size(), false);
  for (std::size_t i = 0; i < num_actions_.size(); ++i) {
    e.active.push_back(static_cast<int>(i));
  }
  return {e};
}

std::unique_ptr<NoRegretLearner> TabularBundle::MakeLearner(
    int player, int, int K, std::span<const int>, std::uint64_t) {
  const double eta = Eta(player, K);
  return std::make_unique<TabularLearner>(num_states_, num_actions_[player],
                                          eta, options_.gamma_ratio * eta,
                                          horizon_);
}

std::shared_ptr<const ValueFunction> TabularBundle::Regress(
    int player, int h, int K, std::span<const int>,
    std::span<const LocalSample> data, const std::vector<RulePtr>&,
    const std::vector<double>&, std::uint64_t) {
  TabularRegressState state(num_states_);
  for (const auto& x : data) state.Add(x);
  TabularBonusParams params;
  params.eta = Eta(player, K);
  params.num_actions = num_actions_[player];
  params.iota =
      TabularIota(K, num_states_, num_actions_[player], horizon_,
                  static_cast<int>(num_actions_.size()), options_.delta);
  params.c1 = options_.c1;
  params.c2 = options_.c2;
  return std::make_shared<const TableValue>(
      TabularOptimisticRegress(state, h, horizon_, params));
}

std::unique_ptr<TriggerState> TabularBundle::MakeTrigger(int, int) {
  return std::make_unique<TabularTrigger>(num_states_);
}

}  // namespace cce_forge
