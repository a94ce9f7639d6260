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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cce_forge/dopmd.h"
#include "cce_forge/evaluation.h"
#include "cce_forge/game_io.h"
#include "cce_forge/harness.h"
#include "cce_forge/rng.h"
#include "cce_forge/tabular.h"
#include "oracles.h"

namespace cce_forge {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  const char* id;
  double limit_s;
  std::function<Verdict()> run;
};

std::string Fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

StagePolicy RandomStage(const TabularMarkovGame& game, int player, Rng& rng) {
  const int A = game.NumActions(player);
  std::vector<double> p(static_cast<std::size_t>(game.Horizon()) * game.NumStates() * A);
  for (std::size_t r = 0; r < p.size(); r += A) {
    double z = 0.0;
    for (int a = 0; a < A; ++a) z += p[r + a] = rng.Uniform() + 1e-3;
    for (int a = 0; a < A; ++a) p[r + a] /= z;
  }
  return StagePolicy(player, game.Horizon(), game.NumStates(), A, std::move(p));
}

JointPolicyTable RandomCorrelated(const TabularMarkovGame& game, Rng& rng) {
  const int J = game.NumJointActions();
  std::vector<double> p(static_cast<std::size_t>(game.Horizon()) * game.NumStates() * J);
  for (std::size_t r = 0; r < p.size(); r += J) {
    double z = 0.0;
    for (int a = 0; a < J; ++a) z += p[r + a] = rng.Uniform() + 1e-3;
    for (int a = 0; a < J; ++a) p[r + a] /= z;
  }
  std::vector<int> actions;
  for (int i = 0; i < game.NumPlayers(); ++i) actions.push_back(game.NumActions(i));
  return JointPolicyTable(game.Horizon(), game.NumStates(), actions, std::move(p));
}

// -- AC1 ----------------------------------------------------------------------

Verdict Ac1() {
  const TabularMarkovGame game(MakeRpsSequential(2));
  std::vector<MarkovJointPolicy::Component> comps;
  for (int a = 0; a < 3; ++a) {
    comps.push_back({1.0 / 3.0, {StagePolicy::Constant(game, 0, a),
                                 StagePolicy::Constant(game, 1, a)}});
  }
  const GapReport r = CceGapReport(game, MarkovJointPolicy(comps).ToTable());
  const bool ok = std::abs(r.gap) <= 1e-9 && std::abs(r.values[0] - 1.0) <= 1e-9;
  return {ok, "gap=" + Fmt("%.3g", r.gap) + " V1=" + Fmt("%.12f", r.values[0])};
}

// -- AC2 ----------------------------------------------------------------------

Verdict Ac2() {
  Rng rng(2002);
  double worst = 0.0;
  for (int g = 0; g < 50; ++g) {
    const int S = 1 + g % 3, H = 1 + (g / 3) % 2;
    const std::vector<int> A = {1 + g % 3, 1 + (g / 2) % 3};
    const TabularMarkovGame game(MakeRandomGame(H, S, A, 7000 + g));
    const JointPolicyTable table = RandomCorrelated(game, rng);
    for (int i = 0; i < 2; ++i) {
      const double diff = std::abs(BestResponseValue(game, table, i) -
                                   oracle::BruteForceBestResponse(game, table, i));
      worst = std::max(worst, diff);
    }
  }
  return {worst <= 1e-9, "max|BR-brute|=" + Fmt("%.3g", worst)};
}

// -- AC3 ----------------------------------------------------------------------

Verdict Ac3() {
  Rng rng(3003);
  double worst = 0.0;
  for (int g = 0; g < 5; ++g) {
    const TabularMarkovGame game(MakeRandomGame(2 + g % 2, 3, {2, 3}, 8000 + g));
    const auto policy = MarkovJointPolicy::Product(
        {RandomStage(game, 0, rng), RandomStage(game, 1, rng)});
    const ValueVector v = ExactValue(game, policy);
    const auto mc = oracle::MonteCarloValue(game, policy, 1000000, 40 + g);
    for (int i = 0; i < 2; ++i) {
      worst = std::max(worst, std::abs(mc.mean[i] - v.Initial(i)) / mc.std_error[i]);
    }
  }
  return {worst <= 3.0, "max|MC-exact|/SE=" + Fmt("%.2f", worst)};
}

// -- AC4 / AC5 ----------------------------------------------------------------

const json kAc4Game = {{"generator", "random"}, {"H", 2}, {"S", 3}, {"A", {2, 2}}, {"seed", 7}};
constexpr int kAc4T = 300;

json SeedList(int n) {
  json s = json::array();
  for (int k = 0; k < n; ++k) s.push_back(k);
  return s;
}

json TabularConfig() {
  return {{"game", kAc4Game},
          {"algorithm", "avlpr"},
          {"instantiation", "tabular"},
          {"T", kAc4T},
          {"budget_multiplier", 100},
          {"eval_every", 1},
          {"knobs", {{"c1", 0.01}, {"c2", 0.01}, {"eta_scale", 0.5}}},
          {"seeds", SeedList(10)}};
}

json LinearConfig() {
  return {{"game", kAc4Game},
          {"algorithm", "avlpr"},
          {"instantiation", "linear"},
          {"T", kAc4T},
          {"budget_multiplier", 10},
          {"eval_every", 1},
          {"features", {{"kind", "one_hot"}}},
          {"knobs", {{"ftpl_eta_scale", 30.0}, {"lambda_scale", 1.0},
                     {"bonus_c", 0.01}, {"bonus_c2", 0.01}}},
          {"seeds", SeedList(10)}};
}

struct Batch {
  std::vector<double> first, last, episodes;
  std::vector<int> replays;
  bool truncated = false;
};

Batch RunBatch(const ExperimentConfig& c) {
  Batch b;
  for (std::uint64_t seed : c.seeds) {
    const SeedOutcome o = RunSeed(c, seed);
    b.first.push_back(FirstQuarterMedianGap(o.trace));
    b.last.push_back(FinalQuarterMedianGap(o.trace));
    b.episodes.push_back(static_cast<double>(o.episodes));
    b.replays.push_back(o.replays);
    b.truncated = b.truncated || o.trace.truncated;
  }
  return b;
}

// Shared between AC4 and AC5: the tabular threshold and episode budget.
double g_tabular_first = -1.0;
double g_tabular_episodes = -1.0;

Verdict Ac4() {
  const ExperimentConfig c = ParseConfig(TabularConfig());
  const Batch b = RunBatch(c);
  const double first = Median(b.first), last = Median(b.last);
  const double bound = 3 * 2 * std::log(static_cast<double>(kAc4T)) + 2;
  const int most = *std::max_element(b.replays.begin(), b.replays.end());
  g_tabular_first = first;
  g_tabular_episodes = Median(b.episodes);
  const bool ok = last < 0.5 * first && most <= bound && !b.truncated;
  return {ok, "first=" + Fmt("%.4f", first) + " last=" + Fmt("%.4f", last) +
                  " ratio=" + Fmt("%.3f", last / first) + " max_replays=" +
                  std::to_string(most) + " bound=" + Fmt("%.1f", bound)};
}

Verdict Ac5() {
  if (g_tabular_first < 0) return {false, "tabular reference missing"};
  json j = LinearConfig();
  const double budget = 2.0 * g_tabular_episodes;
  j["max_episodes"] = static_cast<std::int64_t>(budget);
  const ExperimentConfig c = ParseConfig(j);
  const Batch b = RunBatch(c);
  const double last = Median(b.last), episodes = Median(b.episodes);
  const int d = 3 * 2, m = 2, H = 2;
  const double bound = d * m * H * std::log(static_cast<double>(kAc4T)) + m * H;
  const int most = *std::max_element(b.replays.begin(), b.replays.end());
  const double threshold = 0.5 * g_tabular_first;
  const bool ok = last < threshold && episodes <= budget && most <= bound &&
                  !b.truncated;
  return {ok, "last=" + Fmt("%.4f", last) + " threshold=" + Fmt("%.4f", threshold) +
                  " episodes=" + Fmt("%.0f", episodes) + " budget=" +
                  Fmt("%.0f", budget) + " max_replays=" + std::to_string(most) +
                  " bound=" + Fmt("%.1f", bound)};
}

// -- AC6 ----------------------------------------------------------------------

// Oblivious two-arm loss stream: arm 1 has mean 0.5 throughout; arm 0
// alternates between 0.2 and 0.7 in blocks of 50 rounds, so it is better on
// average but worse half of the time.
double Exp3IxRegretRate(int K, std::uint64_t seed) {
  const double eta = Exp3IxLearningRate(1, 1, 2, K);
  Exp3IxState state(1, 2, eta, 0.5 * eta, 1.0);
  Rng rng = MakeStream(seed, StreamTag::kTest, 6);
  double learner = 0.0, arm0 = 0.0, arm1 = 0.0;
  for (int k = 0; k < K; ++k) {
    const double mean0 = (k / 50) % 2 == 0 ? 0.2 : 0.7, mean1 = 0.5;
    const auto mu = state.Policy(0);
    learner += mu[0] * mean0 + mu[1] * mean1;
    arm0 += mean0;
    arm1 += mean1;
    const int a = rng.Uniform() < mu[0] ? 0 : 1;
    const double loss = rng.Uniform() < (a == 0 ? mean0 : mean1) ? 1.0 : 0.0;
    Exp3IxUpdate(state, Exp3IxLossEstimate(state, 0, a, 1.0 - loss));
  }
  return (learner - std::min(arm0, arm1)) / K;
}

Verdict Ac6() {
  std::vector<double> small, large;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    small.push_back(Exp3IxRegretRate(2000, seed));
    large.push_back(Exp3IxRegretRate(20000, seed));
  }
  const double a = Median(small), b = Median(large);
  return {a > 0.0 && b < 0.5 * a, "regret/K@2000=" + Fmt("%.4f", a) + " regret/K@20000=" +
                           Fmt("%.4f", b) + " ratio=" + Fmt("%.3f", b / a)};
}

// -- AC7 ----------------------------------------------------------------------

Verdict Ac7() {
  constexpr int kRuns = 40, kPolicies = 4, kK = 200;
  int bracketed = 0;
  bool monotone = true;
  for (int run = 0; run < kRuns; ++run) {
    const TabularMarkovGame game(MakeRandomGame(2, 2, {2, 2}, 9000 + run));
    Rng rng = MakeStream(run, StreamTag::kTest, 7);
    std::vector<StagePolicy> policies;
    for (int p = 0; p + 1 < kPolicies; ++p) {
      std::vector<int> choice(4);
      for (int& c : choice) c = rng.UniformInt(2);
      policies.push_back(StagePolicy::Deterministic(game, 0, choice));
    }
    policies.push_back(StagePolicy::Uniform(game, 0));
    const std::vector<StagePolicy> opponents = {StagePolicy::Uniform(game, 0),
                                                RandomStage(game, 1, rng)};
    const FunctionClass f =
        oracle::RealizableClass(game, 0, policies, opponents, 3, run);
    const ApeResult r = Ape(game, 0, f, policies, opponents, kK,
                            ApeBeta(f, kPolicies, kK, 0.05), rng);
    bool all = true;
    for (int p = 0; p < kPolicies; ++p) {
      std::vector<StagePolicy> players = opponents;
      players[0] = policies[p];
      const double v =
          ExactValue(game, MarkovJointPolicy::Product(players)).Initial(0);
      all = all && r.lower[p] <= v + 1e-12 && v <= r.upper[p] + 1e-12;
    }
    bracketed += all;
    for (std::size_t k = 1; k < r.chosen_width.size(); ++k) {
      monotone = monotone && r.chosen_width[k] <= r.chosen_width[k - 1] + 1e-12;
    }
  }
  const double rate = static_cast<double>(bracketed) / kRuns;
  return {rate >= 0.95 && monotone,
          "bracketed=" + std::to_string(bracketed) + "/" + std::to_string(kRuns) +
              " width_nonincreasing=" + (monotone ? "yes" : "no")};
}

// -- AC8 ----------------------------------------------------------------------

json RpsClassesJson() {
  json per_player = json::array();
  for (int i = 0; i < 2; ++i) {
    json list = json::array();
    for (int a = 0; a < 3; ++a) {
      json row = json::array({0.0, 0.0, 0.0});
      row[a] = 1.0;
      list.push_back(json::array({json::array({row})}));
    }
    per_player.push_back(list);
  }
  return {{"policy_classes", per_player},
          {"function_classes", {{"generator", "exact_marginal_q"}}}};
}

json DopmdConfig() {
  return {{"game", {{"generator", "rps_sequential"}, {"H", 1}}},
          {"algorithm", "dopmd"},
          {"T", 500},
          {"dopmd_K", 50},
          {"classes", RpsClassesJson()},
          {"eval_every", 50},
          {"knobs", {{"hedge_eta_scale", 1.0}}},
          {"seeds", SeedList(10)}};
}

Verdict Ac8() {
  const ExperimentConfig c = ParseConfig(DopmdConfig());
  std::vector<double> gaps;
  for (std::uint64_t seed : c.seeds) gaps.push_back(RunSeed(c, seed).output_gap);
  const double med = Median(gaps);
  return {med <= 0.1, "median_restricted_gap=" + Fmt("%.4f", med)};
}

// -- AC9 ----------------------------------------------------------------------

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Verdict Ac9() {
  json tab = TabularConfig(), lin = LinearConfig(), dop = DopmdConfig();
  json vl = TabularConfig();
  vl["algorithm"] = "vlpr";
  vl["budget_multiplier"] = 5;
  for (json* j : {&tab, &lin, &vl, &dop}) {
    (*j)["T"] = 40;
    (*j)["eval_every"] = 5;
    (*j)["seeds"] = SeedList(3);
  }
  const fs::path root = fs::temp_directory_path() / "cce_forge_ac9";
  fs::remove_all(root);
  int compared = 0, identical = 0;
  const std::vector<std::pair<std::string, json>> runs = {
      {"avlpr_tabular", tab}, {"avlpr_linear", lin}, {"vlpr", vl}, {"dopmd", dop}};
  for (const auto& [name, j] : runs) {
    for (const char* rep : {"a", "b"}) {
      json k = j;
      k["out"] = (root / name / rep).string();
      RunExperiment(ParseConfig(k));
    }
    for (int seed = 0; seed < 3; ++seed) {
      const std::string file = "trace_seed_" + std::to_string(seed) + ".csv";
      const std::string a = Slurp(root / name / "a" / file);
      ++compared;
      identical += !a.empty() && a == Slurp(root / name / "b" / file);
    }
  }
  fs::remove_all(root);
  return {compared == identical, "identical=" + std::to_string(identical) + "/" +
                                     std::to_string(compared)};
}

}  // namespace
}  // namespace cce_forge

// Optional arguments restrict the run to the named criteria (e.g. AC4 AC5).
int main(int argc, char** argv) {
  using namespace cce_forge;
  ConfigureLogging();
  const std::vector<Criterion> criteria = {
      {"AC1", 1, Ac1},     {"AC2", 120, Ac2}, {"AC3", 120, Ac3},
      {"AC4", 600, Ac4},   {"AC5", 1200, Ac5}, {"AC6", 60, Ac6},
      {"AC7", 300, Ac7},   {"AC8", 180, Ac8}, {"AC9", 600, Ac9}};
  int failures = 0;
  const std::vector<std::string> only(argv + 1, argv + argc);
  for (const Criterion& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool pass = v.pass && secs < c.limit_s;
    failures += !pass;
    std::printf("%s %s %s time=%.2fs limit=%.0fs\n", pass ? "PASS" : "FAIL", c.id,
                v.detail.c_str(), secs, c.limit_s);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
