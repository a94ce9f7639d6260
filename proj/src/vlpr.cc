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

#include "cce_forge/vlpr.h"

#include <chrono>
#include <cmath>
#include <optional>

#include "cce_forge/errors.h"
#include "cce_forge/evaluation.h"

namespace cce_forge {
namespace {

constexpr std::uint64_t Tag(StreamTag tag) {
  return static_cast<std::uint64_t>(tag);
}

// Runs one episode of a uniformly drawn history member (the replay policy).
Trajectory ReplayEpisode(const TabularMarkovGame& game,
                         const std::vector<PolicyPtr>& history, Rng& rng) {
  const int member =
      history.size() == 1 ? 0 : rng.UniformInt(static_cast<int>(history.size()));
  return SampleEpisodeUnchecked(game, *history[member], rng);
}

LocalSample MakeSample(const Trajectory& traj, int h, int player,
                       const ValueFunction& next) {
  const double v_next =
      h + 1 < traj.Horizon() ? next.Value(traj.State(h + 1)) : 0.0;
  return {traj.State(h), traj.Action(h, player),
          traj.Reward(h, player) + v_next};
}

}  // namespace

Trajectory ExploreEpisode(const TabularMarkovGame& game,
                          const std::vector<PolicyPtr>& history, int h,
                          const ExploreEntry& entry,
                          const StepJointPolicy& step, Rng& rng) {
  const int H = game.Horizon(), m = game.NumPlayers();
  Trajectory traj;
  traj.num_players = m;
  traj.states.resize(H + 1);
  traj.actions.resize(static_cast<std::size_t>(H) * m);
  traj.rewards.resize(static_cast<std::size_t>(H) * m);
  const int member =
      history.size() == 1 ? 0 : rng.UniformInt(static_cast<int>(history.size()));
  const LearnedJointPolicy& roll_in = *history[member];
  std::vector<int> drawn(m);
  int s = game.InitialState();
  for (int k = 0; k < H; ++k) {
    traj.states[k] = s;
    std::span<int> actions(traj.actions.data() + k * m, m);
    if (k < h) {
      roll_in.Act(0, k, s, rng, actions);
    } else if (k == h) {
      step.Sample(s, rng, drawn);
      for (int i = 0; i < m; ++i) {
        actions[i] = entry.uniform_at_step[i] ? rng.UniformInt(game.NumActions(i))
                                              : drawn[i];
      }
    } else {
      for (int i = 0; i < m; ++i) actions[i] = rng.UniformInt(game.NumActions(i));
    }
    const int joint = game.JointIndex(actions);
    for (int i = 0; i < m; ++i) traj.rewards[k * m + i] = game.Reward(i, k, s, joint);
    s = rng.Categorical(game.Transition(k, s, joint));
  }
  traj.states[H] = s;
  return traj;
}

CceApproxResult CceApprox(const TabularMarkovGame& game,
                          const std::vector<PolicyPtr>& history, int h, int K,
                          const std::vector<ValuePtr>& next,
                          SubroutineBundle& bundle, std::uint64_t seed) {
  if (K < 1) throw ConfigError("CCE-approx needs K >= 1");
  if (history.empty()) throw ContractViolation("CCE-approx: empty history");
  const int m = game.NumPlayers();
  Rng init_rng = MakeStream(seed, StreamTag::kCceInit, 0);
  std::vector<int> init_states;
  init_states.reserve(K);
  for (int k = 0; k < K; ++k) {
    init_states.push_back(ReplayEpisode(game, history, init_rng).State(h));
  }
  std::int64_t episodes = K;

  std::vector<std::unique_ptr<NoRegretLearner>> learners;
  for (int i = 0; i < m; ++i) {
    learners.push_back(bundle.MakeLearner(
        i, h, K, init_states, DeriveSeed(seed, Tag(StreamTag::kLearner), i)));
  }
  const std::vector<ExploreEntry> explore = bundle.ExploreSet();
  Rng rng = MakeStream(seed, StreamTag::kCceExplore, 0);
  std::vector<std::vector<RulePtr>> components;
  components.reserve(K);
  std::vector<std::vector<LocalSample>> batch(m);
  for (int k = 0; k < K; ++k) {
    std::vector<RulePtr> mu;
    for (int i = 0; i < m; ++i) mu.push_back(learners[i]->Current());
    const StepJointPolicy mu_k = StepJointPolicy::Product(mu);
    for (auto& b : batch) b.clear();
    for (const auto& entry : explore) {
      const Trajectory traj = ExploreEpisode(game, history, h, entry, mu_k, rng);
      ++episodes;
      for (int i : entry.active) {
        batch[i].push_back(MakeSample(traj, h, i, *next[i]));
      }
    }
    for (int i = 0; i < m; ++i) learners[i]->Update(batch[i]);
    components.push_back(std::move(mu));
  }
  return {StepJointPolicy::EqualWeights(std::move(components)),
          std::move(init_states), episodes};
}

VApproxResult VApprox(const TabularMarkovGame& game,
                      const std::vector<PolicyPtr>& history, int h, int K,
                      const StepJointPolicy& pi_h,
                      const std::vector<ValuePtr>& next,
                      std::span<const int> init_states,
                      SubroutineBundle& bundle, std::uint64_t seed) {
  if (K < 1) throw ConfigError("V-approx needs K >= 1");
  const int m = game.NumPlayers();
  const std::vector<ExploreEntry> explore = bundle.ExploreSet();
  Rng rng = MakeStream(seed, StreamTag::kVExplore, 0);
  std::vector<std::vector<LocalSample>> data(m);
  VApproxResult out;
  for (int k = 0; k < K; ++k) {
    for (const auto& entry : explore) {
      const Trajectory traj = ExploreEpisode(game, history, h, entry, pi_h, rng);
      ++out.episodes;
      for (int i : entry.active) {
        data[i].push_back(MakeSample(traj, h, i, *next[i]));
      }
    }
  }
  for (int i = 0; i < m; ++i) {
    if (data[i].empty()) {
      throw ConfigError("exploration set never activates player " +
                        std::to_string(i));
    }
    out.values.push_back(bundle.Regress(
        i, h, K, init_states, data[i], pi_h.PlayerRules(i), pi_h.Weights(),
        DeriveSeed(seed, Tag(StreamTag::kRegress), i)));
  }
  return out;
}

double LearnedPolicyGap(const TabularMarkovGame& game,
                        const LearnedJointPolicy& policy, int n_mc,
                        std::uint64_t seed) {
  return CceGap(game, Materialize(policy, n_mc, seed));
}

int InnerBudget(int t, double multiplier) {
  return std::max(1, static_cast<int>(std::lround(multiplier * t)));
}

std::int64_t ReplayEpisodes(int horizon, int K, int explore_size) {
  return static_cast<std::int64_t>(horizon) *
         (static_cast<std::int64_t>(K) * (1 + explore_size) +
          static_cast<std::int64_t>(K) * explore_size);
}

namespace {

// Shared by both loops: computes pi^{t+1} from the replay policy over
// `history` with budget K.
PolicyPtr Replay(const TabularMarkovGame& game,
                 const std::vector<PolicyPtr>& history, int t, int K,
                 SubroutineBundle& bundle, std::uint64_t root,
                 std::int64_t& episodes) {
  const int H = game.Horizon(), m = game.NumPlayers();
  std::vector<ValuePtr> next(m, std::make_shared<const ZeroValue>());
  std::vector<std::optional<StepJointPolicy>> steps(H);
  for (int h = H - 1; h >= 0; --h) {
    const std::uint64_t seed = DeriveSeed(root, static_cast<std::uint64_t>(t),
                                          static_cast<std::uint64_t>(h));
    CceApproxResult cce = CceApprox(game, history, h, K, next, bundle, seed);
    VApproxResult v = VApprox(game, history, h, K, cce.policy, next,
                              cce.init_states, bundle, seed);
    episodes += cce.episodes + v.episodes;
    steps[h].emplace(std::move(cce.policy));
    next = std::move(v.values);
  }
  std::vector<StepJointPolicy> out;
  for (auto& s : steps) out.push_back(std::move(*s));
  return std::make_shared<const LearnedJointPolicy>(
      game.NumStates(), game.ActionCounts(), std::move(out));
}

class TraceEvaluator {
 public:
  TraceEvaluator(const TabularMarkovGame& game, const VlprOptions& options,
                 std::uint64_t root)
      : game_(game), options_(options), root_(root) {}

  bool Due(int t) const {
    return options_.eval_every > 0 &&
           (t == 1 || t % options_.eval_every == 0 || t == options_.T);
  }

  // `created` is the iteration that produced the policy; the Monte-Carlo
  // stream depends on it so that identical policies get identical gaps.
  double Gap(const PolicyPtr& policy, int created, RunTrace& trace) {
    if (policy != cached_) {
      cached_ = policy;
      const std::uint64_t seed =
          DeriveSeed(root_, static_cast<std::uint64_t>(StreamTag::kEvaluation),
                     static_cast<std::uint64_t>(created));
      cached_gap_ = LearnedPolicyGap(game_, *policy, options_.n_mc, seed);
      if (!policy->IsExact()) {
        trace.mc_resolution = 0.5 / std::sqrt(static_cast<double>(options_.n_mc));
      }
    }
    return cached_gap_;
  }

 private:
  const TabularMarkovGame& game_;
  const VlprOptions& options_;
  std::uint64_t root_;
  PolicyPtr cached_;
  double cached_gap_ = 0.0;
};

void CheckOptions(const VlprOptions& options) {
  if (options.T < 1) throw ConfigError("T must be positive");
  if (!(options.budget_multiplier > 0.0)) {
    throw ConfigError("budget multiplier must be positive");
  }
  if (options.eval_every < 0 || options.n_mc < 1 || options.max_episodes < 0 ||
      options.max_replays < 0) {
    throw ConfigError("run options out of range");
  }
}

double MillisSince(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

int DrawOutput(std::uint64_t root, std::size_t n) {
  Rng rng = MakeStream(root, StreamTag::kOutput, 0);
  return rng.UniformInt(static_cast<int>(n));
}

}  // namespace

RunResult RunVlpr(const TabularMarkovGame& game, SubroutineBundle& bundle,
                  const VlprOptions& options, std::uint64_t seed) {
  CheckOptions(options);
  RunResult result;
  TraceEvaluator evaluator(game, options, seed);
  const int explore_size = static_cast<int>(bundle.ExploreSet().size());
  PolicyPtr current = LearnedJointPolicy::Uniform(game);
  for (int t = 1; t <= options.T; ++t) {
    const auto start = std::chrono::steady_clock::now();
    result.history.push_back(current);
    TraceRow row;
    row.t = t;
    if (evaluator.Due(t)) {
      row.evaluated = true;
      row.gap = evaluator.Gap(current, t, result.trace);
    }
    const int K = InnerBudget(t, options.budget_multiplier);
    if (options.max_episodes > 0 &&
        result.episodes + ReplayEpisodes(game.Horizon(), K, explore_size) >
            options.max_episodes) {
      result.trace.truncated = true;
      result.trace.truncation_reason = "episode budget exhausted";
      row.episodes = result.episodes;
      row.ms = MillisSince(start);
      result.trace.rows.push_back(row);
      break;
    }
    current = Replay(game, result.history, t, K, bundle, seed, result.episodes);
    row.replay = true;
    row.episodes = result.episodes;
    row.ms = MillisSince(start);
    result.trace.rows.push_back(row);
  }
  result.output_index = DrawOutput(seed, result.history.size());
  return result;
}

RunResult RunAvlpr(const TabularMarkovGame& game, SubroutineBundle& bundle,
                   const VlprOptions& options, std::uint64_t seed) {
  CheckOptions(options);
  const int H = game.Horizon(), m = game.NumPlayers();
  RunResult result;
  TraceEvaluator evaluator(game, options, seed);
  const int explore_size = static_cast<int>(bundle.ExploreSet().size());
  std::vector<std::unique_ptr<TriggerState>> triggers;
  for (int i = 0; i < m; ++i) {
    for (int h = 0; h < H; ++h) triggers.push_back(bundle.MakeTrigger(i, h));
  }
  std::vector<double> psi_last(static_cast<std::size_t>(m) * H, 0.0);
  PolicyPtr current = LearnedJointPolicy::Uniform(game);
  int created = 1;
  int replays = 0;
  for (int t = 1; t <= options.T; ++t) {
    const auto start = std::chrono::steady_clock::now();
    result.history.push_back(current);
    TraceRow row;
    row.t = t;
    if (evaluator.Due(t)) {
      row.evaluated = true;
      row.gap = evaluator.Gap(current, created, result.trace);
    }
    Rng rollout = MakeStream(seed, StreamTag::kRollout, t);
    const Trajectory traj = SampleEpisodeUnchecked(game, *current, rollout);
    ++result.episodes;
    ReplayEvent event;
    event.t = t;
    for (int i = 0; i < m; ++i) {
      for (int h = 0; h < H; ++h) {
        auto& trig = *triggers[i * H + h];
        trig.Add(traj.State(h));
        const double psi = trig.Value();
        event.psi.push_back(psi);
        event.psi_at_last.push_back(psi_last[i * H + h]);
        if (psi >= psi_last[i * H + h] + 1.0) event.fired.emplace_back(i, h);
      }
    }
    if (t == 1 || !event.fired.empty()) {
      const int K = InnerBudget(t, options.budget_multiplier);
      if (options.max_replays > 0 && replays >= options.max_replays) {
        ++result.trace.suppressed_replays;
      } else if (options.max_episodes > 0 &&
                 result.episodes +
                         ReplayEpisodes(H, K, explore_size) >
                     options.max_episodes) {
        result.trace.truncated = true;
        result.trace.truncation_reason = "episode budget exhausted";
        row.episodes = result.episodes;
        row.ms = MillisSince(start);
        result.trace.rows.push_back(row);
        break;
      } else {
        current =
            Replay(game, result.history, t, K, bundle, seed, result.episodes);
        created = t + 1;
        ++replays;
        psi_last = event.psi;
        row.replay = true;
        result.trace.replays.push_back(std::move(event));
      }
    }
    row.episodes = result.episodes;
    row.ms = MillisSince(start);
    result.trace.rows.push_back(row);
  }
  result.output_index = DrawOutput(seed, result.history.size());
  return result;
}

}  // namespace cce_forge
