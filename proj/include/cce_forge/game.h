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

#ifndef CCE_FORGE_GAME_H_
#define CCE_FORGE_GAME_H_

#include <span>
#include <string>
#include <vector>

namespace cce_forge {

// Raw, unvalidated description of a finite-horizon Markov game. Steps and
// states are 0-based. Joint actions are flattened row-major by player index
// (player 0 is the most significant digit).
//
//   transitions[((h * S + s) * J + joint) * S + next]
//   rewards[((i * H + h) * S + s) * J + joint]
struct GameData {
  int horizon = 0;
  int num_states = 0;
  std::vector<int> num_actions;
  int initial_state = 0;
  std::vector<double> transitions;
  std::vector<double> rewards;
};

// Tolerance on transition-row sums.
inline constexpr double kRowSumTolerance = 1e-12;

// Every violated invariant of `data`, one human-readable line each with the
// offending indices. Empty iff the data describes a valid game.
std::vector<std::string> ValidateGameData(const GameData& data);

// Immutable, validated tabular Markov game.
class TabularMarkovGame {
 public:
  // Throws ConfigError listing every violated invariant.
  explicit TabularMarkovGame(GameData data);

  int Horizon() const { return data_.horizon; }
  int NumStates() const { return data_.num_states; }
  int NumPlayers() const { return static_cast<int>(data_.num_actions.size()); }
  int NumActions(int player) const { return data_.num_actions[player]; }
  const std::vector<int>& ActionCounts() const { return data_.num_actions; }
  int NumJointActions() const { return num_joint_; }
  int InitialState() const { return data_.initial_state; }
  int MaxActions() const;

  std::span<const double> Transition(int h, int s, int joint) const {
    const std::size_t offset =
        ((static_cast<std::size_t>(h) * NumStates() + s) * num_joint_ + joint) *
        NumStates();
    return {data_.transitions.data() + offset,
            static_cast<std::size_t>(NumStates())};
  }
  double Reward(int player, int h, int s, int joint) const {
    return data_.rewards[((static_cast<std::size_t>(player) * Horizon() + h) *
                              NumStates() +
                          s) *
                             num_joint_ +
                         joint];
  }

  // Place value of player i's digit in the flattened joint index.
  int Stride(int player) const { return strides_[player]; }
  int JointIndex(std::span<const int> actions) const;
  int PlayerAction(int joint, int player) const {
    return (joint / strides_[player]) % data_.num_actions[player];
  }
  void DecodeJoint(int joint, std::span<int> actions) const;

  const GameData& Data() const { return data_; }

 private:
  GameData data_;
  int num_joint_ = 0;
  std::vector<int> strides_;
};

// Row-major strides for a list of action counts.
std::vector<int> JointStrides(std::span<const int> num_actions);

}  // namespace cce_forge

#endif  // CCE_FORGE_GAME_H_
