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

#include "cce_forge/evaluation.h"

#include <algorithm>
#include <sstream>

#include "cce_forge/errors.h"

namespace cce_forge {
namespace {

void CheckTable(const TabularMarkovGame& game, const JointPolicyTable& policy) {
  policy.CheckCompatible(game);
}

// Sum_{s'} P_h(s'|s, joint) * next[s'].
double Backup(const TabularMarkovGame& game, int h, int s, int joint,
              const double* next) {
  const auto row = game.Transition(h, s, joint);
  double v = 0.0;
  for (std::size_t n = 0; n < row.size(); ++n) v += row[n] * next[n];
  return v;
}

}  // namespace

ValueVector ExactValue(const TabularMarkovGame& game,
                       const JointPolicyTable& policy) {
  CheckTable(game, policy);
  const int H = game.Horizon(), S = game.NumStates(), m = game.NumPlayers();
  const int J = game.NumJointActions();
  ValueVector out;
  out.num_players = m;
  out.horizon = H;
  out.num_states = S;
  out.initial_state = game.InitialState();
  out.values.assign(static_cast<std::size_t>(m) * (H + 1) * S, 0.0);
  for (int h = H - 1; h >= 0; --h) {
    for (int s = 0; s < S; ++s) {
      const auto row = policy.JointRow(h, s);
      for (int a = 0; a < J; ++a) {
        if (row[a] == 0.0) continue;
        for (int i = 0; i < m; ++i) {
          const double* next = &out.At(i, h + 1, 0);
          out.At(i, h, s) +=
              row[a] * (game.Reward(i, h, s, a) + Backup(game, h, s, a, next));
        }
      }
    }
  }
  return out;
}

ValueVector ExactValue(const TabularMarkovGame& game,
                       const MarkovJointPolicy& policy) {
  policy.CheckCompatible(game);
  return ExactValue(game, policy.ToTable());
}

ValueVector ExactValue(const TabularMarkovGame& game,
                       const EpisodePolicy& policy) {
  return ExactValue(game, ToJointTable(policy));
}

JointPolicyTable ToJointTable(const EpisodePolicy& policy) {
  if (const auto* table = dynamic_cast<const JointPolicyTable*>(&policy)) {
    return *table;
  }
  if (const auto* markov = dynamic_cast<const MarkovJointPolicy*>(&policy)) {
    return markov->ToTable();
  }
  if (!policy.IsMarkov()) {
    throw ConfigError(
        "exact evaluation needs a Markov joint policy; episode mixtures only "
        "support the restricted gap");
  }
  throw ConfigError("policy type has no exact table; materialize it first");
}

BestResponse ComputeBestResponse(const TabularMarkovGame& game,
                                 const JointPolicyTable& policy, int player) {
  CheckTable(game, policy);
  if (player < 0 || player >= game.NumPlayers()) {
    throw ContractViolation("best response: player index out of range");
  }
  const int H = game.Horizon(), S = game.NumStates();
  const int A = game.NumActions(player);
  const int stride = game.Stride(player);
  const int num_opp = game.NumJointActions() / A;
  std::vector<double> values(static_cast<std::size_t>(H + 1) * S, 0.0);
  std::vector<int> choice(static_cast<std::size_t>(H) * S, 0);
  for (int h = H - 1; h >= 0; --h) {
    const double* next = values.data() + static_cast<std::size_t>(h + 1) * S;
    for (int s = 0; s < S; ++s) {
      const std::vector<double> opp = policy.OpponentMarginal(player, h, s);
      double best = 0.0;
      int best_a = 0;
      for (int a = 0; a < A; ++a) {
        double q = 0.0;
        for (int b = 0; b < num_opp; ++b) {
          if (opp[b] == 0.0) continue;
          const int joint = (b / stride) * stride * A + a * stride + b % stride;
          q += opp[b] * (game.Reward(player, h, s, joint) +
                         Backup(game, h, s, joint, next));
        }
        if (a == 0 || q > best) {
          best = q;
          best_a = a;
        }
      }
      values[static_cast<std::size_t>(h) * S + s] = best;
      choice[static_cast<std::size_t>(h) * S + s] = best_a;
    }
  }
  const double v1 = values[game.InitialState()];
  return BestResponse{v1, std::move(values),
                      StagePolicy::Deterministic(game, player, choice)};
}

std::vector<double> MarginalQ(const TabularMarkovGame& game,
                              const JointPolicyTable& policy, int player) {
  const ValueVector v = ExactValue(game, policy);
  const int H = game.Horizon(), S = game.NumStates();
  const int A = game.NumActions(player);
  const int stride = game.Stride(player);
  const int num_opp = game.NumJointActions() / A;
  std::vector<double> q(static_cast<std::size_t>(H) * S * A, 0.0);
  for (int h = 0; h < H; ++h) {
    const double* next = v.values.data() + (static_cast<std::size_t>(player) * (H + 1) + h + 1) * S;
    for (int s = 0; s < S; ++s) {
      const std::vector<double> opp = policy.OpponentMarginal(player, h, s);
      for (int a = 0; a < A; ++a) {
        double x = 0.0;
        for (int b = 0; b < num_opp; ++b) {
          if (opp[b] == 0.0) continue;
          const int joint = (b / stride) * stride * A + a * stride + b % stride;
          x += opp[b] * (game.Reward(player, h, s, joint) +
                         Backup(game, h, s, joint, next));
        }
        q[(static_cast<std::size_t>(h) * S + s) * A + a] = x;
      }
    }
  }
  return q;
}

double BestResponseValue(const TabularMarkovGame& game,
                         const JointPolicyTable& policy, int player) {
  return ComputeBestResponse(game, policy, player).value;
}

double BestResponseValue(const TabularMarkovGame& game,
                         const EpisodePolicy& policy, int player) {
  return BestResponseValue(game, ToJointTable(policy), player);
}

GapReport CceGapReport(const TabularMarkovGame& game,
                       const JointPolicyTable& policy) {
  const ValueVector v = ExactValue(game, policy);
  GapReport report;
  for (int i = 0; i < game.NumPlayers(); ++i) {
    report.values.push_back(v.Initial(i));
    report.best_responses.push_back(BestResponseValue(game, policy, i));
    const double g = report.best_responses[i] - report.values[i];
    report.gap = i == 0 ? g : std::max(report.gap, g);
  }
  return report;
}

double CceGap(const TabularMarkovGame& game, const JointPolicyTable& policy) {
  return CceGapReport(game, policy).gap;
}

double CceGap(const TabularMarkovGame& game, const MarkovJointPolicy& policy) {
  policy.CheckCompatible(game);
  return CceGap(game, policy.ToTable());
}

double CceGap(const TabularMarkovGame& game, const EpisodePolicy& policy) {
  return CceGap(game, ToJointTable(policy));
}

std::vector<double> Occupancy(const TabularMarkovGame& game,
                              const JointPolicyTable& policy) {
  CheckTable(game, policy);
  const int H = game.Horizon(), S = game.NumStates();
  const int J = game.NumJointActions();
  std::vector<double> d(static_cast<std::size_t>(H + 1) * S, 0.0);
  d[game.InitialState()] = 1.0;
  for (int h = 0; h < H; ++h) {
    const double* cur = d.data() + static_cast<std::size_t>(h) * S;
    double* next = d.data() + static_cast<std::size_t>(h + 1) * S;
    for (int s = 0; s < S; ++s) {
      if (cur[s] == 0.0) continue;
      const auto row = policy.JointRow(h, s);
      for (int a = 0; a < J; ++a) {
        const double w = cur[s] * row[a];
        if (w == 0.0) continue;
        const auto p = game.Transition(h, s, a);
        for (int n = 0; n < S; ++n) next[n] += w * p[n];
      }
    }
  }
  return d;
}

// -- Restricted gaps ----------------------------------------------------------

RestrictedPayoffs::RestrictedPayoffs(
    const TabularMarkovGame& game,
    std::vector<std::vector<StagePolicy>> classes, std::int64_t max_profiles)
    : classes_(std::move(classes)) {
  const int m = game.NumPlayers();
  if (static_cast<int>(classes_.size()) != m) {
    throw ConfigError("restricted gap: need one policy class per player");
  }
  std::int64_t count = 1;
  for (int i = 0; i < m; ++i) {
    if (classes_[i].empty()) {
      throw ConfigError("restricted gap: empty policy class");
    }
    for (const auto& p : classes_[i]) {
      if (p.Player() != i) {
        throw ConfigError("restricted gap: class member has wrong player");
      }
      p.CheckCompatible(game);
    }
    count *= static_cast<std::int64_t>(classes_[i].size());
    if (count > max_profiles) {
      std::ostringstream os;
      os << "restricted gap: profile count exceeds the budget of "
         << max_profiles;
      throw ResourceError(os.str());
    }
  }
  num_profiles_ = static_cast<int>(count);
  strides_.assign(m, 1);
  for (int i = m - 2; i >= 0; --i) {
    strides_[i] = strides_[i + 1] * static_cast<int>(classes_[i + 1].size());
  }
  values_.resize(static_cast<std::size_t>(num_profiles_) * m);
  for (int p = 0; p < num_profiles_; ++p) {
    std::vector<StagePolicy> players;
    for (int i = 0; i < m; ++i) {
      players.push_back(classes_[i][(p / strides_[i]) % classes_[i].size()]);
    }
    const ValueVector v =
        ExactValue(game, MarkovJointPolicy::Product(std::move(players)));
    for (int i = 0; i < m; ++i) {
      values_[static_cast<std::size_t>(p) * m + i] = v.Initial(i);
    }
  }
}

RestrictedGapReport RestrictedCceGapReport(const RestrictedPayoffs& payoffs,
                                           std::span<const double> weights) {
  if (static_cast<int>(weights.size()) != payoffs.NumProfiles()) {
    throw ContractViolation("restricted gap: weight vector size mismatch");
  }
  const int m = payoffs.NumPlayers();
  const auto& strides = payoffs.Strides();
  RestrictedGapReport report;
  report.values.assign(m, 0.0);
  for (int p = 0; p < payoffs.NumProfiles(); ++p) {
    for (int i = 0; i < m; ++i) {
      report.values[i] += weights[p] * payoffs.Value(i, p);
    }
  }
  for (int i = 0; i < m; ++i) {
    const int n = payoffs.ClassSize(i);
    const int stride = strides[i];
    // Opponent-profile marginal, indexed like OpponentIndex on joints.
    std::vector<double> opp(payoffs.NumProfiles() / n, 0.0);
    for (int p = 0; p < payoffs.NumProfiles(); ++p) {
      opp[OpponentIndex(p, stride, n)] += weights[p];
    }
    double best = 0.0;
    int best_k = 0;
    for (int k = 0; k < n; ++k) {
      double v = 0.0;
      for (std::size_t q = 0; q < opp.size(); ++q) {
        if (opp[q] == 0.0) continue;
        const int p = (static_cast<int>(q) / stride) * stride * n +
                      k * stride + static_cast<int>(q) % stride;
        v += opp[q] * payoffs.Value(i, p);
      }
      if (k == 0 || v > best) {
        best = v;
        best_k = k;
      }
    }
    report.best_deviation.push_back(best_k);
    report.deviation_values.push_back(best);
    report.player_gaps.push_back(best - report.values[i]);
    report.gap =
        i == 0 ? report.player_gaps[i] : std::max(report.gap, report.player_gaps[i]);
  }
  return report;
}

namespace {

std::vector<double> ProductWeights(
    const RestrictedPayoffs& payoffs,
    const std::vector<std::vector<double>>& lambdas) {
  const int m = payoffs.NumPlayers();
  if (static_cast<int>(lambdas.size()) != m) {
    throw ContractViolation("restricted gap: need one distribution per player");
  }
  for (int i = 0; i < m; ++i) {
    if (static_cast<int>(lambdas[i].size()) != payoffs.ClassSize(i)) {
      throw ContractViolation("restricted gap: distribution size mismatch");
    }
  }
  std::vector<double> w(payoffs.NumProfiles(), 1.0);
  for (int p = 0; p < payoffs.NumProfiles(); ++p) {
    for (int i = 0; i < m; ++i) {
      w[p] *= lambdas[i][(p / payoffs.Strides()[i]) % payoffs.ClassSize(i)];
    }
  }
  return w;
}

}  // namespace

double RestrictedCceGap(const TabularMarkovGame& game,
                        const std::vector<std::vector<StagePolicy>>& classes,
                        const std::vector<std::vector<double>>& lambdas,
                        std::int64_t max_profiles) {
  const RestrictedPayoffs payoffs(game, classes, max_profiles);
  return RestrictedCceGapReport(payoffs, ProductWeights(payoffs, lambdas)).gap;
}

RestrictedGapAccumulator::RestrictedGapAccumulator(
    const RestrictedPayoffs& payoffs)
    : payoffs_(payoffs), mass_(payoffs.NumProfiles(), 0.0) {}

void RestrictedGapAccumulator::AddProduct(
    const std::vector<std::vector<double>>& lambdas) {
  const std::vector<double> w = ProductWeights(payoffs_, lambdas);
  for (std::size_t p = 0; p < w.size(); ++p) mass_[p] += w[p];
  ++count_;
}

std::vector<double> RestrictedGapAccumulator::ProfileWeights() const {
  if (count_ == 0) throw ContractViolation("accumulator is empty");
  std::vector<double> w(mass_);
  for (double& x : w) x /= count_;
  return w;
}

RestrictedGapReport RestrictedGapAccumulator::Report() const {
  return RestrictedCceGapReport(payoffs_, ProfileWeights());
}

}  // namespace cce_forge
