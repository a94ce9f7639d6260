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

#include "cce_forge/dopmd.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

#include "cce_forge/errors.h"
#include "cce_forge/game_io.h"

namespace cce_forge {

// -- FunctionClass ------------------------------------------------------------

FunctionClass::FunctionClass(
    int player, int num_states, int num_actions,
    std::vector<std::vector<std::vector<double>>> layers)
    : player_(player),
      num_states_(num_states),
      num_actions_(num_actions),
      layers_(std::move(layers)) {
  const int H = static_cast<int>(layers_.size());
  if (H == 0 || num_states <= 0 || num_actions <= 0) {
    throw ConfigError("FunctionClass: empty or nonpositive shape");
  }
  for (int h = 0; h < H; ++h) {
    if (layers_[h].empty()) {
      throw ConfigError("FunctionClass: empty layer " + std::to_string(h));
    }
    for (const auto& table : layers_[h]) {
      if (table.size() != static_cast<std::size_t>(num_states) * num_actions) {
        throw ConfigError("FunctionClass: table size does not match S*A");
      }
      for (double x : table) {
        if (!(x >= -1e-9 && x <= H - h + 1e-9)) {
          std::ostringstream os;
          os << "FunctionClass: layer " << h << " entry " << x
             << " outside [0, " << H - h << "]";
          throw ConfigError(os.str());
        }
      }
    }
  }
  strides_.assign(H, 1);
  for (int h = H - 2; h >= 0; --h) {
    strides_[h] = strides_[h + 1] * static_cast<std::int64_t>(layers_[h + 1].size());
    if (strides_[h] > (std::int64_t{1} << 40)) {
      throw ResourceError("FunctionClass: too many tuples");
    }
  }
}

std::int64_t FunctionClass::NumTuples() const {
  return strides_[0] * static_cast<std::int64_t>(layers_[0].size());
}

int FunctionClass::LayerIndex(std::int64_t tuple, int h) const {
  return static_cast<int>((tuple / strides_[h]) %
                          static_cast<std::int64_t>(layers_[h].size()));
}

// -- Confidence set -----------------------------------------------------------

ApeConfidenceSet::ApeConfidenceSet(const FunctionClass& functions,
                                   const std::vector<StagePolicy>& policies,
                                   double beta, int initial_state)
    : functions_(functions),
      policies_(policies),
      beta_(beta),
      initial_state_(initial_state),
      num_policies_(static_cast<int>(policies.size())) {
  if (policies.empty()) throw ConfigError("APE: empty policy class");
  if (!(beta > 0.0)) throw ConfigError("APE: beta must be positive");
  const int H = functions.Horizon();
  for (const auto& p : policies) {
    if (p.Horizon() != H || p.NumStates() != functions.NumStates() ||
        p.NumActions() != functions.NumActions()) {
      throw ConfigError("APE: policy and function class shapes disagree");
    }
  }
  const std::int64_t mask_size = functions.NumTuples() * num_policies_;
  if (mask_size > (std::int64_t{1} << 28)) {
    throw ResourceError("APE: confidence set too large for a membership mask");
  }
  std::size_t offset = 0;
  for (int h = 0; h < H; ++h) {
    loss_offsets_.push_back(offset);
    const std::size_t next = h + 1 < H ? functions.LayerSize(h + 1) : 1;
    offset += functions.LayerSize(h) * next * num_policies_;
  }
  losses_.assign(offset, 0.0);
  member_.assign(static_cast<std::size_t>(mask_size), 1);
  const int A = functions.NumActions();
  start_values_.resize(static_cast<std::size_t>(functions.LayerSize(0)) *
                       num_policies_);
  for (int f = 0; f < functions.LayerSize(0); ++f) {
    for (int p = 0; p < num_policies_; ++p) {
      const auto row = policies[p].Row(0, initial_state);
      double v = 0.0;
      for (int a = 0; a < A; ++a) v += row[a] * functions.At(0, f, initial_state, a);
      start_values_[static_cast<std::size_t>(f) * num_policies_ + p] = v;
    }
  }
}

std::size_t ApeConfidenceSet::LossIndex(int h, int f_h, int f_next,
                                        int policy) const {
  const int H = functions_.Horizon();
  const std::size_t next = h + 1 < H ? functions_.LayerSize(h + 1) : 1;
  if (h + 1 >= H) f_next = 0;
  return loss_offsets_[h] +
         (static_cast<std::size_t>(f_h) * next + f_next) * num_policies_ +
         policy;
}

double ApeConfidenceSet::Loss(int h, int f_h, int f_next, int policy) const {
  return losses_[LossIndex(h, f_h, f_next, policy)];
}

void ApeConfidenceSet::AddEpisode(const Trajectory& traj, int player) {
  const int H = functions_.Horizon();
  const int A = functions_.NumActions();
  std::vector<double> next_value;
  for (int h = 0; h < H; ++h) {
    const int s = traj.State(h), a = traj.Action(h, player);
    const double r = traj.Reward(h, player);
    const int s_next = traj.State(h + 1);
    const int n_next = h + 1 < H ? functions_.LayerSize(h + 1) : 1;
    for (int p = 0; p < num_policies_; ++p) {
      // f_{h+1}(s', pi_{i,h+1}(s')) for every candidate f_{h+1}.
      next_value.assign(n_next, 0.0);
      if (h + 1 < H) {
        const auto row = policies_[p].Row(h + 1, s_next);
        for (int g = 0; g < n_next; ++g) {
          double v = 0.0;
          for (int b = 0; b < A; ++b) v += row[b] * functions_.At(h + 1, g, s_next, b);
          next_value[g] = v;
        }
      }
      for (int f = 0; f < functions_.LayerSize(h); ++f) {
        const double fx = functions_.At(h, f, s, a);
        for (int g = 0; g < n_next; ++g) {
          const double d = fx - r - next_value[g];
          losses_[LossIndex(h, f, g, p)] += d * d;
        }
      }
    }
  }
  Recompute();
}

void ApeConfidenceSet::Recompute() {
  const int H = functions_.Horizon();
  // ok[h][(f_h, f_next, p)]: layer-h constraint holds.
  std::vector<std::vector<char>> ok(H);
  for (int h = 0; h < H; ++h) {
    const int n_next = h + 1 < H ? functions_.LayerSize(h + 1) : 1;
    ok[h].assign(static_cast<std::size_t>(functions_.LayerSize(h)) * n_next *
                     num_policies_,
                 0);
    for (int g = 0; g < n_next; ++g) {
      for (int p = 0; p < num_policies_; ++p) {
        double lo = std::numeric_limits<double>::infinity();
        for (int f = 0; f < functions_.LayerSize(h); ++f) {
          lo = std::min(lo, Loss(h, f, g, p));
        }
        for (int f = 0; f < functions_.LayerSize(h); ++f) {
          ok[h][LossIndex(h, f, g, p) - loss_offsets_[h]] =
              Loss(h, f, g, p) <= lo + beta_;
        }
      }
    }
  }
  const std::int64_t n = functions_.NumTuples();
  std::vector<int> idx(H);
  std::vector<char> any(num_policies_, 0);
  for (std::int64_t t = 0; t < n; ++t) {
    for (int h = 0; h < H; ++h) idx[h] = functions_.LayerIndex(t, h);
    for (int p = 0; p < num_policies_; ++p) {
      char& m = member_[static_cast<std::size_t>(t) * num_policies_ + p];
      if (!m) continue;
      for (int h = 0; h < H && m; ++h) {
        const int g = h + 1 < H ? idx[h + 1] : 0;
        m = ok[h][LossIndex(h, idx[h], g, p) - loss_offsets_[h]];
      }
      any[p] = any[p] || m;
    }
  }
  for (int p = 0; p < num_policies_; ++p) {
    if (!any[p]) {
      throw InvariantViolation("APE confidence set became empty for policy " +
                               std::to_string(p));
    }
  }
}

std::int64_t ApeConfidenceSet::RetainedCount() const {
  return std::count(member_.begin(), member_.end(), 1);
}

std::int64_t ApeConfidenceSet::RetainedCount(int policy) const {
  std::int64_t c = 0;
  for (std::int64_t t = 0; t < functions_.NumTuples(); ++t) c += Contains(t, policy);
  return c;
}

double ApeConfidenceSet::Upper(int policy) const {
  double best = -std::numeric_limits<double>::infinity();
  for (std::int64_t t = 0; t < functions_.NumTuples(); ++t) {
    if (!Contains(t, policy)) continue;
    best = std::max(best, start_values_[static_cast<std::size_t>(
                                            functions_.LayerIndex(t, 0)) *
                                            num_policies_ +
                                        policy]);
  }
  return best;
}

double ApeConfidenceSet::Lower(int policy) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t t = 0; t < functions_.NumTuples(); ++t) {
    if (!Contains(t, policy)) continue;
    best = std::min(best, start_values_[static_cast<std::size_t>(
                                            functions_.LayerIndex(t, 0)) *
                                            num_policies_ +
                                        policy]);
  }
  return best;
}

// -- APE ----------------------------------------------------------------------

double ApeBeta(const FunctionClass& functions, int num_policies, int K,
               double delta, double c) {
  const double H = functions.Horizon();
  return c * H * H *
         std::log(static_cast<double>(num_policies) *
                  static_cast<double>(functions.NumTuples()) * K * H / delta);
}

ApeResult Ape(const TabularMarkovGame& game, int player,
              const FunctionClass& functions,
              const std::vector<StagePolicy>& policies,
              const std::vector<StagePolicy>& opponents, int K, double beta,
              Rng& rng) {
  if (K < 1) throw ConfigError("APE needs K >= 1");
  if (functions.Player() != player || functions.Horizon() != game.Horizon() ||
      functions.NumStates() != game.NumStates() ||
      functions.NumActions() != game.NumActions(player)) {
    throw ConfigError("APE: function class does not match the game");
  }
  if (static_cast<int>(opponents.size()) != game.NumPlayers()) {
    throw ConfigError("APE: need a policy slot for every player");
  }
  for (const auto& p : policies) p.CheckCompatible(game);
  ApeConfidenceSet set(functions, policies, beta, game.InitialState());
  const int n = static_cast<int>(policies.size());
  std::vector<std::optional<MarkovJointPolicy>> joint(n);
  ApeResult out;
  out.upper.resize(n);
  out.lower.resize(n);
  for (int k = 0; k < K; ++k) {
    int chosen = 0;
    double widest = 0.0;
    for (int p = 0; p < n; ++p) {
      out.upper[p] = set.Upper(p);
      out.lower[p] = set.Lower(p);
      const double w = out.upper[p] - out.lower[p];
      if (p == 0 || w > widest) {
        widest = w;
        chosen = p;
      }
    }
    out.chosen.push_back(chosen);
    out.chosen_width.push_back(widest);
    out.retained.push_back(set.RetainedCount());
    if (!joint[chosen]) {
      std::vector<StagePolicy> players = opponents;
      players[player] = policies[chosen];
      joint[chosen].emplace(MarkovJointPolicy::Product(std::move(players)));
    }
    const Trajectory traj = SampleEpisodeUnchecked(game, *joint[chosen], rng);
    ++out.episodes;
    set.AddEpisode(traj, player);
  }
  return out;
}

// -- Hedge --------------------------------------------------------------------

HedgeState HedgeInit(int size, double eta) {
  if (size < 1) throw ConfigError("Hedge needs a nonempty class");
  return {std::vector<double>(size, 1.0 / size), eta};
}

void HedgeUpdate(HedgeState& state, std::span<const double> values) {
  if (values.size() != state.weights.size()) {
    throw ContractViolation("Hedge: value vector size mismatch");
  }
  const double top = *std::max_element(values.begin(), values.end());
  double z = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    state.weights[k] *= std::exp(state.eta * (values[k] - top));
    z += state.weights[k];
  }
  for (double& w : state.weights) w /= z;
}

double HedgeLearningRate(int class_size, int horizon, int T, double scale) {
  return scale * std::sqrt(std::log(static_cast<double>(class_size)) /
                           (static_cast<double>(horizon) * horizon * T));
}

// -- DOPMD --------------------------------------------------------------------

DopmdResult RunDopmd(const TabularMarkovGame& game,
                     const std::vector<FunctionClass>& functions,
                     const std::vector<std::vector<StagePolicy>>& policies,
                     const DopmdOptions& options, std::uint64_t seed) {
  const int m = game.NumPlayers();
  if (options.T < 1) throw ConfigError("DOPMD: T must be positive");
  if (static_cast<int>(functions.size()) != m ||
      static_cast<int>(policies.size()) != m ||
      static_cast<int>(options.K.size()) != m) {
    throw ConfigError("DOPMD: need classes and K for every player");
  }
  if (!options.beta.empty() && static_cast<int>(options.beta.size()) != m) {
    throw ConfigError("DOPMD: beta must list one value per player");
  }
  std::vector<double> beta(m);
  for (int i = 0; i < m; ++i) {
    if (options.K[i] < 1) throw ConfigError("DOPMD: K must be positive");
    beta[i] = options.beta.empty()
                  ? ApeBeta(functions[i], static_cast<int>(policies[i].size()),
                            options.K[i], options.delta, options.beta_c)
                  : options.beta[i];
  }
  const RestrictedPayoffs payoffs(game, policies, options.max_profiles);
  RestrictedGapAccumulator average(payoffs);
  std::vector<HedgeState> hedge;
  for (int i = 0; i < m; ++i) {
    const int n = static_cast<int>(policies[i].size());
    hedge.push_back(HedgeInit(
        n, HedgeLearningRate(n, game.Horizon(), options.T, options.eta_scale)));
  }
  auto current = [&] {
    std::vector<std::vector<double>> l;
    for (const auto& h : hedge) l.push_back(h.weights);
    return l;
  };
  std::int64_t per_round = 0;
  for (int k : options.K) per_round += k;

  DopmdResult result;
  result.lambdas.push_back(current());
  for (int t = 1; t <= options.T; ++t) {
    if (options.max_episodes > 0 &&
        result.episodes + per_round > options.max_episodes) {
      result.trace.truncated = true;
      result.trace.truncation_reason = "episode budget exhausted";
      break;
    }
    average.AddProduct(result.lambdas.back());
    Rng pick = MakeStream(seed, StreamTag::kPolicySample, t);
    std::vector<StagePolicy> profile;
    for (int i = 0; i < m; ++i) {
      profile.push_back(policies[i][pick.Categorical(hedge[i].weights)]);
    }
    for (int i = 0; i < m; ++i) {
      Rng rng = MakeStream(seed, StreamTag::kApe, t, i);
      const ApeResult ape = Ape(game, i, functions[i], policies[i], profile,
                                options.K[i], beta[i], rng);
      result.episodes += ape.episodes;
      HedgeUpdate(hedge[i], ape.upper);
    }
    result.lambdas.push_back(current());
    TraceRow row;
    row.t = t;
    row.episodes = result.episodes;
    if (options.eval_every > 0 &&
        (t == 1 || t % options.eval_every == 0 || t == options.T)) {
      row.evaluated = true;
      row.gap = average.Report().gap;
    }
    result.trace.rows.push_back(row);
  }
  if (average.Count() > 0) {
    result.average_profile_weights = average.ProfileWeights();
    result.final_gap = average.Report().gap;
  }
  return result;
}

// -- Class generators ---------------------------------------------------------

std::vector<StagePolicy> AllDeterministicPolicies(const TabularMarkovGame& game,
                                                  int player,
                                                  std::int64_t limit) {
  const int rows = game.Horizon() * game.NumStates();
  const int A = game.NumActions(player);
  std::int64_t count = 1;
  for (int r = 0; r < rows; ++r) {
    count *= A;
    if (count > limit) {
      throw ResourceError("all_deterministic: class exceeds " +
                          std::to_string(limit) + " policies");
    }
  }
  std::vector<StagePolicy> out;
  std::vector<int> choice(rows);
  for (std::int64_t c = 0; c < count; ++c) {
    std::int64_t x = c;
    // Row 0 is the most significant digit.
    for (int r = rows - 1; r >= 0; --r) {
      choice[r] = static_cast<int>(x % A);
      x /= A;
    }
    out.push_back(StagePolicy::Deterministic(game, player, choice));
  }
  return out;
}

std::vector<FunctionClass> ExactMarginalQClasses(
    const TabularMarkovGame& game,
    const std::vector<std::vector<StagePolicy>>& policies) {
  const int m = game.NumPlayers(), H = game.Horizon(), S = game.NumStates();
  if (static_cast<int>(policies.size()) != m) {
    throw ConfigError("exact_marginal_q: need a policy class per player");
  }
  std::int64_t profiles = 1;
  for (const auto& c : policies) {
    if (c.empty()) throw ConfigError("exact_marginal_q: empty policy class");
    profiles *= static_cast<std::int64_t>(c.size());
    if (profiles > 4096) {
      throw ResourceError("exact_marginal_q: too many class profiles");
    }
  }
  std::vector<std::vector<std::vector<std::vector<double>>>> layers(
      m, std::vector<std::vector<std::vector<double>>>(H));
  for (std::int64_t p = 0; p < profiles; ++p) {
    std::vector<StagePolicy> players;
    std::int64_t x = p;
    std::vector<int> idx(m);
    for (int i = m - 1; i >= 0; --i) {
      idx[i] = static_cast<int>(x % static_cast<std::int64_t>(policies[i].size()));
      x /= static_cast<std::int64_t>(policies[i].size());
    }
    for (int i = 0; i < m; ++i) players.push_back(policies[i][idx[i]]);
    const JointPolicyTable table =
        MarkovJointPolicy::Product(std::move(players)).ToTable();
    for (int i = 0; i < m; ++i) {
      const int A = game.NumActions(i);
      const std::vector<double> q = MarginalQ(game, table, i);
      for (int h = 0; h < H; ++h) {
        const auto begin = q.begin() + static_cast<std::ptrdiff_t>(h) * S * A;
        layers[i][h].emplace_back(begin, begin + S * A);
      }
    }
  }
  std::vector<FunctionClass> out;
  for (int i = 0; i < m; ++i) {
    out.emplace_back(i, S, game.NumActions(i), std::move(layers[i]));
  }
  return out;
}

ClassSet ClassesFromJson(const nlohmann::json& j, const TabularMarkovGame& game) {
  const int m = game.NumPlayers();
  if (!j.is_object() || !j.contains("policy_classes") ||
      !j.contains("function_classes")) {
    throw ConfigError("class file needs policy_classes and function_classes");
  }
  ClassSet out;
  const auto& pc = j.at("policy_classes");
  if (pc.is_object()) {
    if (pc.value("generator", "") != "all_deterministic") {
      throw ConfigError("unknown policy class generator");
    }
    for (int i = 0; i < m; ++i) {
      out.policies.push_back(AllDeterministicPolicies(game, i));
    }
  } else {
    if (!pc.is_array() || static_cast<int>(pc.size()) != m) {
      throw ConfigError("policy_classes must list one class per player");
    }
    for (int i = 0; i < m; ++i) {
      std::vector<StagePolicy> cls;
      for (const auto& p : pc[i]) {
        cls.push_back(StagePolicyFromJson(p, i));
        cls.back().CheckCompatible(game);
      }
      if (cls.empty()) throw ConfigError("empty policy class");
      out.policies.push_back(std::move(cls));
    }
  }
  const auto& fc = j.at("function_classes");
  if (fc.is_object()) {
    if (fc.value("generator", "") != "exact_marginal_q") {
      throw ConfigError("unknown function class generator");
    }
    out.functions = ExactMarginalQClasses(game, out.policies);
  } else {
    if (!fc.is_array() || static_cast<int>(fc.size()) != m) {
      throw ConfigError("function_classes must list one class per player");
    }
    for (int i = 0; i < m; ++i) {
      const int S = game.NumStates(), A = game.NumActions(i);
      std::vector<std::vector<std::vector<double>>> layers;
      for (const auto& layer : fc[i]) {
        std::vector<std::vector<double>> tables;
        for (const auto& t : layer) {
          std::vector<double> flat;
          if (!t.is_array() || static_cast<int>(t.size()) != S) {
            throw ConfigError("function table must be [s][a]");
          }
          for (const auto& row : t) {
            if (!row.is_array() || static_cast<int>(row.size()) != A) {
              throw ConfigError("function table must be [s][a]");
            }
            for (const auto& x : row) flat.push_back(x.get<double>());
          }
          tables.push_back(std::move(flat));
        }
        layers.push_back(std::move(tables));
      }
      if (static_cast<int>(layers.size()) != game.Horizon()) {
        throw ConfigError("function class must have H layers");
      }
      out.functions.emplace_back(i, S, A, std::move(layers));
    }
  }
  return out;
}

}  // namespace cce_forge
