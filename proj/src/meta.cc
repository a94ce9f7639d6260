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

#include "cce_forge/meta.h"

#include <cmath>

#include "cce_forge/errors.h"

namespace cce_forge {

// -- TableRule ----------------------------------------------------------------

TableRule::TableRule(int num_states, int num_actions, std::vector<double> probs)
    : num_states_(num_states),
      num_actions_(num_actions),
      probs_(std::move(probs)) {
  if (num_states <= 0 || num_actions <= 0 ||
      probs_.size() != static_cast<std::size_t>(num_states) * num_actions) {
    throw ContractViolation("TableRule: bad shape");
  }
}

std::shared_ptr<const TableRule> TableRule::Uniform(int num_states,
                                                    int num_actions) {
  return std::make_shared<const TableRule>(
      num_states, num_actions,
      std::vector<double>(static_cast<std::size_t>(num_states) * num_actions,
                          1.0 / num_actions));
}

int TableRule::Sample(int s, Rng& rng) const {
  return num_actions_ == 1 ? 0 : rng.Categorical(Row(s));
}

void TableRule::Probabilities(int s, std::span<double> out, Rng&) const {
  const auto row = Row(s);
  std::copy(row.begin(), row.end(), out.begin());
}

// -- StepJointPolicy ----------------------------------------------------------

StepJointPolicy::StepJointPolicy(std::vector<std::vector<RulePtr>> components,
                                 std::vector<double> weights)
    : components_(std::move(components)), weights_(std::move(weights)) {
  if (components_.empty() || components_.size() != weights_.size()) {
    throw ContractViolation("StepJointPolicy: components/weights mismatch");
  }
  const std::size_t m = components_.front().size();
  double total = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    if (components_[k].size() != m || m == 0) {
      throw ContractViolation("StepJointPolicy: ragged components");
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!components_[k][i] || components_[k][i]->NumActions() !=
                                    components_.front()[i]->NumActions()) {
        throw ContractViolation("StepJointPolicy: inconsistent rules");
      }
    }
    total += weights_[k];
    uniform_weights_ = uniform_weights_ && weights_[k] == weights_.front();
  }
  if (!(std::abs(total - 1.0) <= kInputProbTolerance)) {
    throw ContractViolation("StepJointPolicy: weights do not sum to 1");
  }
}

StepJointPolicy StepJointPolicy::EqualWeights(
    std::vector<std::vector<RulePtr>> components) {
  std::vector<double> w(components.size(), 1.0 / components.size());
  return StepJointPolicy(std::move(components), std::move(w));
}

StepJointPolicy StepJointPolicy::Product(std::vector<RulePtr> players) {
  std::vector<std::vector<RulePtr>> c;
  c.push_back(std::move(players));
  return StepJointPolicy(std::move(c), {1.0});
}

std::vector<RulePtr> StepJointPolicy::PlayerRules(int player) const {
  std::vector<RulePtr> out;
  out.reserve(components_.size());
  for (const auto& c : components_) out.push_back(c[player]);
  return out;
}

bool StepJointPolicy::IsExact() const {
  for (const auto& c : components_) {
    for (const auto& r : c) {
      if (!r->IsExact()) return false;
    }
  }
  return true;
}

void StepJointPolicy::Sample(int s, Rng& rng, std::span<int> actions) const {
  int k = 0;
  if (components_.size() > 1) {
    k = uniform_weights_
            ? rng.UniformInt(static_cast<int>(components_.size()))
            : rng.Categorical(weights_);
  }
  const auto& c = components_[k];
  for (std::size_t i = 0; i < c.size(); ++i) actions[i] = c[i]->Sample(s, rng);
}

int StepJointPolicy::SamplePlayer(int player, int s, Rng& rng) const {
  int k = 0;
  if (components_.size() > 1) {
    k = uniform_weights_
            ? rng.UniformInt(static_cast<int>(components_.size()))
            : rng.Categorical(weights_);
  }
  return components_[k][player]->Sample(s, rng);
}

// -- LearnedJointPolicy -------------------------------------------------------

LearnedJointPolicy::LearnedJointPolicy(int num_states,
                                       std::vector<int> num_actions,
                                       std::vector<StepJointPolicy> steps)
    : num_states_(num_states),
      num_actions_(std::move(num_actions)),
      steps_(std::move(steps)) {
  if (steps_.empty()) throw ContractViolation("LearnedJointPolicy: no steps");
  for (const auto& step : steps_) {
    if (step.NumPlayers() != static_cast<int>(num_actions_.size())) {
      throw ContractViolation("LearnedJointPolicy: player count mismatch");
    }
    for (int i = 0; i < step.NumPlayers(); ++i) {
      if (step.Component(0)[i]->NumActions() != num_actions_[i]) {
        throw ContractViolation("LearnedJointPolicy: action count mismatch");
      }
    }
  }
}

std::shared_ptr<const LearnedJointPolicy> LearnedJointPolicy::Uniform(
    const TabularMarkovGame& game) {
  std::vector<RulePtr> players;
  for (int i = 0; i < game.NumPlayers(); ++i) {
    players.push_back(TableRule::Uniform(game.NumStates(), game.NumActions(i)));
  }
  std::vector<StepJointPolicy> steps(game.Horizon(),
                                     StepJointPolicy::Product(players));
  return std::make_shared<const LearnedJointPolicy>(
      game.NumStates(), game.ActionCounts(), std::move(steps));
}

bool LearnedJointPolicy::IsExact() const {
  for (const auto& s : steps_) {
    if (!s.IsExact()) return false;
  }
  return true;
}

void LearnedJointPolicy::CheckCompatible(const TabularMarkovGame& game) const {
  if (Horizon() != game.Horizon() || num_states_ != game.NumStates() ||
      num_actions_ != game.ActionCounts()) {
    throw ConfigError("learned policy does not match the game dimensions");
  }
}

void LearnedJointPolicy::Act(int, int h, int s, Rng& rng,
                             std::span<int> actions) const {
  steps_[h].Sample(s, rng, actions);
}

JointPolicyTable Materialize(const LearnedJointPolicy& policy, int n_mc,
                             std::uint64_t seed) {
  const int H = policy.Horizon(), S = policy.NumStates();
  const auto& counts = policy.ActionCounts();
  const int m = static_cast<int>(counts.size());
  const std::vector<int> strides = JointStrides(counts);
  const int J = strides[0] * counts[0];
  std::vector<double> probs(static_cast<std::size_t>(H) * S * J, 0.0);
  if (!policy.IsExact() && n_mc < 1) {
    throw ConfigError("Monte-Carlo materialization needs n_mc >= 1");
  }
  std::vector<int> actions(m);
  for (int h = 0; h < H; ++h) {
    const StepJointPolicy& step = policy.Step(h);
    for (int s = 0; s < S; ++s) {
      double* row = probs.data() + (static_cast<std::size_t>(h) * S + s) * J;
      Rng rng(DeriveSeed(seed, h, s));
      if (step.IsExact()) {
        std::vector<std::vector<double>> p(m);
        for (int k = 0; k < step.NumComponents(); ++k) {
          const double w = step.Weights()[k];
          if (w == 0.0) continue;
          for (int i = 0; i < m; ++i) {
            p[i].resize(counts[i]);
            step.Component(k)[i]->Probabilities(s, p[i], rng);
          }
          for (int a = 0; a < J; ++a) {
            double x = w;
            for (int i = 0; i < m && x != 0.0; ++i) {
              x *= p[i][(a / strides[i]) % counts[i]];
            }
            row[a] += x;
          }
        }
      } else {
        for (int n = 0; n < n_mc; ++n) {
          step.Sample(s, rng, actions);
          int a = 0;
          for (int i = 0; i < m; ++i) a += actions[i] * strides[i];
          row[a] += 1.0;
        }
        for (int a = 0; a < J; ++a) row[a] /= n_mc;
      }
    }
  }
  return JointPolicyTable(H, S, counts, std::move(probs));
}

}  // namespace cce_forge
