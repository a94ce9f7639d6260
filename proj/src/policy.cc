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

#include "cce_forge/policy.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "cce_forge/errors.h"

namespace cce_forge {
namespace {

// Validates a block of probability rows and renormalizes each row in place.
void NormalizeRows(std::vector<double>& probs, int row_length,
                   const char* what) {
  const std::size_t rows = probs.size() / row_length;
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = probs.data() + r * row_length;
    double sum = 0.0;
    for (int a = 0; a < row_length; ++a) {
      if (!(row[a] >= 0.0) || !std::isfinite(row[a])) {
        std::ostringstream os;
        os << what << " row " << r << " has an invalid entry " << row[a];
        throw ConfigError(os.str());
      }
      sum += row[a];
    }
    if (std::abs(sum - 1.0) > kInputProbTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << what << " row " << r << " sums to " << sum;
      throw ConfigError(os.str());
    }
    for (int a = 0; a < row_length; ++a) row[a] /= sum;
  }
}

}  // namespace

// -- StagePolicy --------------------------------------------------------------

StagePolicy::StagePolicy(int player, int horizon, int num_states,
                         int num_actions, std::vector<double> probs)
    : player_(player),
      horizon_(horizon),
      num_states_(num_states),
      num_actions_(num_actions),
      probs_(std::move(probs)) {
  if (player < 0 || horizon <= 0 || num_states <= 0 || num_actions <= 0) {
    throw ConfigError("StagePolicy: nonpositive dimension");
  }
  if (probs_.size() != static_cast<std::size_t>(horizon) * num_states *
                           num_actions) {
    throw ConfigError("StagePolicy: table size does not match H*S*A");
  }
  NormalizeRows(probs_, num_actions_, "StagePolicy");
}

StagePolicy StagePolicy::Uniform(const TabularMarkovGame& game, int player) {
  const int A = game.NumActions(player);
  return StagePolicy(
      player, game.Horizon(), game.NumStates(), A,
      std::vector<double>(
          static_cast<std::size_t>(game.Horizon()) * game.NumStates() * A,
          1.0 / A));
}

StagePolicy StagePolicy::Deterministic(const TabularMarkovGame& game,
                                       int player,
                                       std::span<const int> choice) {
  const int A = game.NumActions(player);
  const int rows = game.Horizon() * game.NumStates();
  if (static_cast<int>(choice.size()) != rows) {
    throw ConfigError("StagePolicy::Deterministic: choice size != H*S");
  }
  std::vector<double> probs(static_cast<std::size_t>(rows) * A, 0.0);
  for (int r = 0; r < rows; ++r) {
    if (choice[r] < 0 || choice[r] >= A) {
      throw ConfigError("StagePolicy::Deterministic: action out of range");
    }
    probs[static_cast<std::size_t>(r) * A + choice[r]] = 1.0;
  }
  return StagePolicy(player, game.Horizon(), game.NumStates(), A,
                     std::move(probs));
}

StagePolicy StagePolicy::Constant(const TabularMarkovGame& game, int player,
                                  int action) {
  std::vector<int> choice(game.Horizon() * game.NumStates(), action);
  return Deterministic(game, player, choice);
}

void StagePolicy::CheckCompatible(const TabularMarkovGame& game) const {
  if (player_ >= game.NumPlayers() || horizon_ != game.Horizon() ||
      num_states_ != game.NumStates() ||
      num_actions_ != game.NumActions(player_)) {
    std::ostringstream os;
    os << "StagePolicy for player " << player_ << " has shape (H=" << horizon_
       << ", S=" << num_states_ << ", A=" << num_actions_
       << ") which does not match the game";
    throw ConfigError(os.str());
  }
}

// -- JointPolicyTable ---------------------------------------------------------

JointPolicyTable::JointPolicyTable(int horizon, int num_states,
                                   std::vector<int> num_actions,
                                   std::vector<double> probs)
    : horizon_(horizon),
      num_states_(num_states),
      num_actions_(std::move(num_actions)),
      probs_(std::move(probs)) {
  if (horizon_ <= 0 || num_states_ <= 0 || num_actions_.empty()) {
    throw ConfigError("JointPolicyTable: nonpositive dimension");
  }
  strides_ = JointStrides(num_actions_);
  num_joint_ = strides_[0] * num_actions_[0];
  if (probs_.size() !=
      static_cast<std::size_t>(horizon_) * num_states_ * num_joint_) {
    throw ConfigError("JointPolicyTable: table size does not match H*S*J");
  }
  NormalizeRows(probs_, num_joint_, "JointPolicyTable");
}

std::vector<double> JointPolicyTable::Marginal(int player, int h, int s) const {
  std::vector<double> out(num_actions_[player], 0.0);
  const auto row = JointRow(h, s);
  for (int a = 0; a < num_joint_; ++a) {
    out[(a / strides_[player]) % num_actions_[player]] += row[a];
  }
  return out;
}

std::vector<double> JointPolicyTable::OpponentMarginal(int player, int h,
                                                       int s) const {
  std::vector<double> out(num_joint_ / num_actions_[player], 0.0);
  const auto row = JointRow(h, s);
  for (int a = 0; a < num_joint_; ++a) {
    out[OpponentIndex(a, strides_[player], num_actions_[player])] += row[a];
  }
  return out;
}

void JointPolicyTable::CheckCompatible(const TabularMarkovGame& game) const {
  if (horizon_ != game.Horizon() || num_states_ != game.NumStates() ||
      num_actions_ != game.ActionCounts()) {
    throw ConfigError("JointPolicyTable does not match the game dimensions");
  }
}

void JointPolicyTable::Act(int, int h, int s, Rng& rng,
                           std::span<int> actions) const {
  const int joint = rng.Categorical(JointRow(h, s));
  for (int i = 0; i < NumPlayers(); ++i) {
    actions[i] = (joint / strides_[i]) % num_actions_[i];
  }
}

// -- MarkovJointPolicy --------------------------------------------------------

MarkovJointPolicy::MarkovJointPolicy(std::vector<Component> components)
    : components_(std::move(components)) {
  if (components_.empty()) {
    throw ConfigError("MarkovJointPolicy needs at least one component");
  }
  const auto& first = components_.front().players;
  if (first.empty()) throw ConfigError("MarkovJointPolicy: no players");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight)) {
      throw ConfigError("MarkovJointPolicy: negative or invalid weight");
    }
    total += c.weight;
    if (c.players.size() != first.size()) {
      throw ConfigError("MarkovJointPolicy: components disagree on players");
    }
    for (std::size_t i = 0; i < first.size(); ++i) {
      const auto& p = c.players[i];
      if (p.Player() != static_cast<int>(i) ||
          p.Horizon() != first[i].Horizon() ||
          p.NumStates() != first[i].NumStates() ||
          p.NumActions() != first[i].NumActions()) {
        throw ConfigError("MarkovJointPolicy: component shapes disagree");
      }
    }
  }
  if (std::abs(total - 1.0) > kInputProbTolerance) {
    throw ConfigError("MarkovJointPolicy: weights do not sum to 1");
  }
  for (auto& c : components_) c.weight /= total;
  for (const auto& c : components_) weights_.push_back(c.weight);
}

MarkovJointPolicy MarkovJointPolicy::Product(std::vector<StagePolicy> players) {
  std::vector<Component> components;
  components.push_back({1.0, std::move(players)});
  return MarkovJointPolicy(std::move(components));
}

MarkovJointPolicy MarkovJointPolicy::Uniform(const TabularMarkovGame& game) {
  std::vector<StagePolicy> players;
  for (int i = 0; i < game.NumPlayers(); ++i) {
    players.push_back(StagePolicy::Uniform(game, i));
  }
  return Product(std::move(players));
}

std::vector<int> MarkovJointPolicy::ActionCounts() const {
  std::vector<int> counts;
  for (const auto& p : components_.front().players) {
    counts.push_back(p.NumActions());
  }
  return counts;
}

std::vector<double> MarkovJointPolicy::JointDistribution(int h, int s) const {
  const std::vector<int> counts = ActionCounts();
  const std::vector<int> strides = JointStrides(counts);
  const int num_joint = strides[0] * counts[0];
  const int m = NumPlayers();
  std::vector<double> out(num_joint, 0.0);
  for (const auto& c : components_) {
    if (c.weight == 0.0) continue;
    for (int a = 0; a < num_joint; ++a) {
      double p = c.weight;
      for (int i = 0; i < m && p != 0.0; ++i) {
        p *= c.players[i].Row(h, s)[(a / strides[i]) % counts[i]];
      }
      out[a] += p;
    }
  }
  return out;
}

std::vector<double> MarkovJointPolicy::MarginalDistribution(int player, int h,
                                                            int s) const {
  const std::vector<int> counts = ActionCounts();
  const std::vector<int> strides = JointStrides(counts);
  const std::vector<double> joint = JointDistribution(h, s);
  std::vector<double> out(counts[player], 0.0);
  for (std::size_t a = 0; a < joint.size(); ++a) {
    out[(a / strides[player]) % counts[player]] += joint[a];
  }
  return out;
}

std::vector<double> MarkovJointPolicy::OpponentMarginal(int player, int h,
                                                        int s) const {
  const std::vector<int> counts = ActionCounts();
  const std::vector<int> strides = JointStrides(counts);
  const std::vector<double> joint = JointDistribution(h, s);
  std::vector<double> out(joint.size() / counts[player], 0.0);
  for (std::size_t a = 0; a < joint.size(); ++a) {
    out[OpponentIndex(static_cast<int>(a), strides[player], counts[player])] +=
        joint[a];
  }
  return out;
}

JointPolicyTable MarkovJointPolicy::ToTable() const {
  const int H = Horizon(), S = NumStates();
  std::vector<double> probs;
  for (int h = 0; h < H; ++h) {
    for (int s = 0; s < S; ++s) {
      const auto row = JointDistribution(h, s);
      probs.insert(probs.end(), row.begin(), row.end());
    }
  }
  return JointPolicyTable(H, S, ActionCounts(), std::move(probs));
}

void MarkovJointPolicy::CheckCompatible(const TabularMarkovGame& game) const {
  if (NumPlayers() != game.NumPlayers()) {
    throw ConfigError("MarkovJointPolicy: player count does not match game");
  }
  for (const auto& p : components_.front().players) p.CheckCompatible(game);
}

void MarkovJointPolicy::Act(int, int h, int s, Rng& rng,
                            std::span<int> actions) const {
  const int k = components_.size() == 1 ? 0 : rng.Categorical(weights_);
  const auto& players = components_[k].players;
  for (std::size_t i = 0; i < players.size(); ++i) {
    actions[i] = rng.Categorical(players[i].Row(h, s));
  }
}

// -- EpisodeMixturePolicy -----------------------------------------------------

EpisodeMixturePolicy::EpisodeMixturePolicy(
    std::vector<std::shared_ptr<const EpisodePolicy>> members,
    std::vector<double> weights)
    : members_(std::move(members)), weights_(std::move(weights)) {
  if (members_.empty() || members_.size() != weights_.size()) {
    throw ConfigError("EpisodeMixturePolicy: members/weights mismatch");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < members_.size(); ++k) {
    if (!members_[k] || !members_[k]->IsMarkov()) {
      throw ConfigError("EpisodeMixturePolicy: members must be Markov");
    }
    if (!(weights_[k] >= 0.0)) {
      throw ConfigError("EpisodeMixturePolicy: negative weight");
    }
    total += weights_[k];
  }
  if (std::abs(total - 1.0) > kInputProbTolerance) {
    throw ConfigError("EpisodeMixturePolicy: weights do not sum to 1");
  }
  for (double& w : weights_) w /= total;
}

EpisodeMixturePolicy EpisodeMixturePolicy::UniformOver(
    std::vector<std::shared_ptr<const EpisodePolicy>> members) {
  std::vector<double> weights(members.size(),
                              members.empty() ? 0.0 : 1.0 / members.size());
  return EpisodeMixturePolicy(std::move(members), std::move(weights));
}

void EpisodeMixturePolicy::CheckCompatible(const TabularMarkovGame& game) const {
  for (const auto& m : members_) m->CheckCompatible(game);
}

int EpisodeMixturePolicy::BeginEpisode(Rng& rng) const {
  if (members_.size() == 1) return 0;
  bool uniform = true;
  for (double w : weights_) uniform = uniform && w == weights_.front();
  if (uniform) return rng.UniformInt(static_cast<int>(members_.size()));
  return rng.Categorical(weights_);
}

void EpisodeMixturePolicy::Act(int member, int h, int s, Rng& rng,
                               std::span<int> actions) const {
  members_[member]->Act(0, h, s, rng, actions);
}

// -- Sampling -----------------------------------------------------------------

Trajectory SampleEpisodeUnchecked(const TabularMarkovGame& game,
                                  const EpisodePolicy& policy, Rng& rng) {
  const int H = game.Horizon(), m = game.NumPlayers();
  Trajectory traj;
  traj.num_players = m;
  traj.states.resize(H + 1);
  traj.actions.resize(static_cast<std::size_t>(H) * m);
  traj.rewards.resize(static_cast<std::size_t>(H) * m);
  const int member = policy.BeginEpisode(rng);
  int s = game.InitialState();
  for (int h = 0; h < H; ++h) {
    traj.states[h] = s;
    std::span<int> actions(traj.actions.data() + h * m, m);
    policy.Act(member, h, s, rng, actions);
    const int joint = game.JointIndex(actions);
    for (int i = 0; i < m; ++i) {
      traj.rewards[h * m + i] = game.Reward(i, h, s, joint);
    }
    s = rng.Categorical(game.Transition(h, s, joint));
  }
  traj.states[H] = s;
  return traj;
}

Trajectory SampleEpisode(const TabularMarkovGame& game,
                         const EpisodePolicy& policy, Rng& rng) {
  policy.CheckCompatible(game);
  return SampleEpisodeUnchecked(game, policy, rng);
}

}  // namespace cce_forge
