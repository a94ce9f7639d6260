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

#include "oracles.h"

#include <algorithm>
#include <cmath>

#include "cce_forge/evaluation.h"
#include "cce_forge/rng.h"

namespace cce_forge::oracle {
namespace {

double Forward(const TabularMarkovGame& game, const JointPolicyTable& policy,
               int player, int h, int s) {
  if (h == game.Horizon()) return 0.0;
  double total = 0.0;
  const auto row = policy.JointRow(h, s);
  for (int j = 0; j < game.NumJointActions(); ++j) {
    if (row[j] == 0.0) continue;
    double tail = 0.0;
    const auto next = game.Transition(h, s, j);
    for (int s2 = 0; s2 < game.NumStates(); ++s2) {
      if (next[s2] == 0.0) continue;
      tail += next[s2] * Forward(game, policy, player, h + 1, s2);
    }
    total += row[j] * (game.Reward(player, h, s, j) + tail);
  }
  return total;
}

}  // namespace

double PathValue(const TabularMarkovGame& game, const JointPolicyTable& policy,
                 int player) {
  return Forward(game, policy, player, 0, game.InitialState());
}

std::vector<double> OpponentMarginal(const TabularMarkovGame& game,
                                     const JointPolicyTable& policy,
                                     int player, int h, int s) {
  const int A = game.NumActions(player);
  std::vector<double> out(game.NumJointActions() / A, 0.0);
  std::vector<int> actions(game.NumPlayers());
  const auto row = policy.JointRow(h, s);
  for (int j = 0; j < game.NumJointActions(); ++j) {
    game.DecodeJoint(j, actions);
    int index = 0;
    for (int p = 0; p < game.NumPlayers(); ++p) {
      if (p == player) continue;
      index = index * game.NumActions(p) + actions[p];
    }
    out[index] += row[j];
  }
  return out;
}

double BruteForceBestResponse(const TabularMarkovGame& game,
                              const JointPolicyTable& policy, int player) {
  const int H = game.Horizon(), S = game.NumStates();
  const int A = game.NumActions(player);
  const int J = game.NumJointActions();
  const int cells = H * S;
  std::vector<int> choice(cells, 0);
  std::vector<int> actions(game.NumPlayers());
  double best = -1e300;
  while (true) {
    std::vector<double> probs(static_cast<std::size_t>(cells) * J, 0.0);
    for (int h = 0; h < H; ++h) {
      for (int s = 0; s < S; ++s) {
        const auto opp = OpponentMarginal(game, policy, player, h, s);
        for (int j = 0; j < J; ++j) {
          game.DecodeJoint(j, actions);
          if (actions[player] != choice[h * S + s]) continue;
          int index = 0;
          for (int p = 0; p < game.NumPlayers(); ++p) {
            if (p == player) continue;
            index = index * game.NumActions(p) + actions[p];
          }
          probs[(static_cast<std::size_t>(h) * S + s) * J + j] = opp[index];
        }
      }
    }
    const JointPolicyTable deviation(H, S, game.ActionCounts(), probs);
    best = std::max(best, PathValue(game, deviation, player));
    int c = 0;
    while (c < cells && ++choice[c] == A) choice[c++] = 0;
    if (c == cells) break;
  }
  return best;
}

std::vector<double> ExpandMixture(const MarkovJointPolicy& policy, int h, int s) {
  const auto counts = policy.ActionCounts();
  int J = 1;
  for (int a : counts) J *= a;
  std::vector<double> out(J, 0.0);
  for (const auto& c : policy.Components()) {
    for (int j = 0; j < J; ++j) {
      // Row-major decode with player 0 most significant.
      double p = c.weight;
      int rest = j;
      for (int i = static_cast<int>(counts.size()) - 1; i >= 0; --i) {
        p *= c.players[i].Row(h, s)[rest % counts[i]];
        rest /= counts[i];
      }
      out[j] += p;
    }
  }
  return out;
}

MonteCarloEstimate MonteCarloValue(const TabularMarkovGame& game,
                                   const EpisodePolicy& policy, int episodes,
                                   std::uint64_t seed) {
  const int m = game.NumPlayers();
  std::vector<double> sum(m, 0.0), sq(m, 0.0);
  Rng rng = MakeStream(seed, StreamTag::kTest, 0);
  for (int e = 0; e < episodes; ++e) {
    const Trajectory traj = SampleEpisode(game, policy, rng);
    for (int i = 0; i < m; ++i) {
      double ret = 0.0;
      for (int h = 0; h < game.Horizon(); ++h) ret += traj.Reward(h, i);
      sum[i] += ret;
      sq[i] += ret * ret;
    }
  }
  MonteCarloEstimate out;
  for (int i = 0; i < m; ++i) {
    const double mean = sum[i] / episodes;
    const double var = std::max(0.0, sq[i] / episodes - mean * mean);
    out.mean.push_back(mean);
    out.std_error.push_back(std::sqrt(var / episodes));
  }
  return out;
}

std::vector<double> EmpiricalOccupancy(const TabularMarkovGame& game,
                                       const EpisodePolicy& policy,
                                       int episodes, std::uint64_t seed) {
  const int S = game.NumStates();
  std::vector<double> freq(static_cast<std::size_t>(game.Horizon() + 1) * S, 0.0);
  Rng rng = MakeStream(seed, StreamTag::kTest, 1);
  for (int e = 0; e < episodes; ++e) {
    const Trajectory traj = SampleEpisode(game, policy, rng);
    for (int h = 0; h <= game.Horizon(); ++h) freq[h * S + traj.State(h)] += 1.0;
  }
  for (double& f : freq) f /= episodes;
  return freq;
}

double TotalVariation(const std::vector<double>& p, const std::vector<double>& q,
                      int offset, int size) {
  double tv = 0.0;
  for (int k = offset; k < offset + size; ++k) tv += std::abs(p[k] - q[k]);
  return 0.5 * tv;
}

FunctionClass RealizableClass(const TabularMarkovGame& game, int player,
                              const std::vector<StagePolicy>& policies,
                              const std::vector<StagePolicy>& opponents,
                              int distractors, std::uint64_t seed) {
  const int H = game.Horizon(), S = game.NumStates();
  const int A = game.NumActions(player);
  std::vector<std::vector<std::vector<double>>> layers(H);
  for (const auto& pi : policies) {
    std::vector<StagePolicy> players = opponents;
    players[player] = pi;
    const auto q = MarginalQ(
        game, MarkovJointPolicy::Product(std::move(players)).ToTable(), player);
    for (int h = 0; h < H; ++h) {
      layers[h].emplace_back(q.begin() + static_cast<std::ptrdiff_t>(h) * S * A,
                             q.begin() + static_cast<std::ptrdiff_t>(h + 1) * S * A);
    }
  }
  Rng rng = MakeStream(seed, StreamTag::kTest, 2);
  for (int h = 0; h < H; ++h) {
    for (int k = 0; k < distractors; ++k) {
      std::vector<double> table(static_cast<std::size_t>(S) * A);
      for (double& x : table) x = (H - h) * rng.Uniform();
      layers[h].push_back(std::move(table));
    }
  }
  return FunctionClass(player, S, A, std::move(layers));
}

}  // namespace cce_forge::oracle
