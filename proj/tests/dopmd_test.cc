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

#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "cce_forge/dopmd.h"
#include "cce_forge/errors.h"
#include "cce_forge/evaluation.h"
#include "cce_forge/game_io.h"
#include "cce_forge/rng.h"
#include "oracles.h"

namespace cce_forge {
namespace {

std::vector<StagePolicy> RandomDeterministic(const TabularMarkovGame& game,
                                             int player, int n, Rng& rng) {
  std::vector<StagePolicy> out;
  for (int k = 0; k < n; ++k) {
    std::vector<int> choice(game.Horizon() * game.NumStates());
    for (int& c : choice) c = rng.UniformInt(game.NumActions(player));
    out.push_back(StagePolicy::Deterministic(game, player, choice));
  }
  return out;
}

struct ApeSetup {
  TabularMarkovGame game;
  std::vector<StagePolicy> policies;
  std::vector<StagePolicy> opponents;
  FunctionClass functions;
};

ApeSetup MakeSetup(std::uint64_t seed, int distractors) {
  TabularMarkovGame game(MakeRandomGame(2, 2, {2, 2}, seed));
  Rng rng(seed);
  auto policies = RandomDeterministic(game, 0, 3, rng);
  policies.push_back(StagePolicy::Uniform(game, 0));
  std::vector<StagePolicy> opponents = {StagePolicy::Uniform(game, 0),
                                        RandomDeterministic(game, 1, 1, rng)[0]};
  FunctionClass f =
      oracle::RealizableClass(game, 0, policies, opponents, distractors, seed);
  return {std::move(game), std::move(policies), std::move(opponents), std::move(f)};
}

double TrueValue(const ApeSetup& s, int p) {
  std::vector<StagePolicy> players = s.opponents;
  players[0] = s.policies[p];
  return ExactValue(s.game, MarkovJointPolicy::Product(players)).Initial(0);
}

TEST_CASE("function class tuples and ranges") {
  std::vector<std::vector<std::vector<double>>> layers = {
      {{0, 2, 1, 1}, {2, 2, 0, 0}, {1, 1, 1, 1}}, {{0, 1, 1, 0}, {1, 1, 1, 1}}};
  const FunctionClass f(0, 2, 2, layers);
  CHECK(f.NumTuples() == 6);
  CHECK(f.LayerIndex(4, 0) == 2);
  CHECK(f.LayerIndex(4, 1) == 0);
  layers[1][0][0] = 1.5;  // above H - h = 1 at the last layer
  CHECK_THROWS_AS(FunctionClass(0, 2, 2, layers), ConfigError);
}

TEST_CASE("a huge beta never shrinks the set") {
  const ApeSetup s = MakeSetup(3, 2);
  Rng rng(1);
  const int K = 30;
  const ApeResult r = Ape(s.game, 0, s.functions, s.policies, s.opponents, K,
                          10.0 * K * 4, rng);
  CHECK(r.retained.back() == s.functions.NumTuples() * 4);
  const int s1 = s.game.InitialState();
  for (int p = 0; p < 4; ++p) {
    double hi = -1e300, lo = 1e300;
    for (int f = 0; f < s.functions.LayerSize(0); ++f) {
      double v = 0.0;
      for (int a = 0; a < 2; ++a) v += s.policies[p].Row(0, s1)[a] * s.functions.At(0, f, s1, a);
      hi = std::max(hi, v);
      lo = std::min(lo, v);
    }
    CHECK(r.upper[p] == doctest::Approx(hi));
    CHECK(r.lower[p] == doctest::Approx(lo));
  }
}

TEST_CASE("a singleton realizable class pins the value") {
  TabularMarkovGame game(MakeRandomGame(2, 2, {2, 2}, 5));
  Rng rng(5);
  const std::vector<StagePolicy> pi = RandomDeterministic(game, 0, 1, rng);
  const std::vector<StagePolicy> opp = {StagePolicy::Uniform(game, 0),
                                        StagePolicy::Uniform(game, 1)};
  const FunctionClass f = oracle::RealizableClass(game, 0, pi, opp, 0, 0);
  const ApeResult r = Ape(game, 0, f, pi, opp, 5, 1.0, rng);
  std::vector<StagePolicy> players = opp;
  players[0] = pi[0];
  const double v = ExactValue(game, MarkovJointPolicy::Product(players)).Initial(0);
  CHECK(r.upper[0] == doctest::Approx(v));
  CHECK(r.lower[0] == doctest::Approx(v));
}

TEST_CASE("confidence sets only shrink and the widest policy is chosen") {
  const ApeSetup s = MakeSetup(8, 4);
  const double beta = ApeBeta(s.functions, 4, 200, 0.05);
  ApeConfidenceSet set(s.functions, s.policies, beta, s.game.InitialState());
  Rng rng(2);
  const auto joint = MarkovJointPolicy::Product(
      {s.policies[0], s.opponents[1]});
  std::vector<char> before(static_cast<std::size_t>(s.functions.NumTuples()) * 4);
  for (int k = 0; k < 200; ++k) {
    for (std::int64_t t = 0; t < s.functions.NumTuples(); ++t) {
      for (int p = 0; p < 4; ++p) before[t * 4 + p] = set.Contains(t, p);
    }
    set.AddEpisode(SampleEpisode(s.game, joint, rng), 0);
    for (std::int64_t t = 0; t < s.functions.NumTuples(); ++t) {
      for (int p = 0; p < 4; ++p) {
        if (set.Contains(t, p)) CHECK(before[t * 4 + p]);
      }
    }
  }

  Rng r2(4);
  const ApeResult r = Ape(s.game, 0, s.functions, s.policies, s.opponents, 150, beta, r2);
  for (std::size_t k = 1; k < r.retained.size(); ++k) {
    CHECK(r.retained[k] <= r.retained[k - 1]);
    CHECK(r.chosen_width[k] <= r.chosen_width[k - 1] + 1e-12);
  }
  CHECK(r.episodes == 150);
}

TEST_CASE("APE brackets the true values") {
  int covered = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ApeSetup s = MakeSetup(100 + seed, 3);
    const int K = 100;
    Rng rng(seed);
    const ApeResult r = Ape(s.game, 0, s.functions, s.policies, s.opponents, K,
                            ApeBeta(s.functions, 4, K, 0.05), rng);
    bool all = true;
    for (int p = 0; p < 4; ++p) {
      const double v = TrueValue(s, p);
      all = all && r.lower[p] <= v + 1e-12 && v <= r.upper[p] + 1e-12;
    }
    covered += all;
  }
  CHECK(covered >= 9);
}

TEST_CASE("APE ignores the opponents' actions and rewards") {
  const ApeSetup s = MakeSetup(12, 3);
  const double beta = 0.5;
  ApeConfidenceSet clean(s.functions, s.policies, beta, s.game.InitialState());
  ApeConfidenceSet noisy(s.functions, s.policies, beta, s.game.InitialState());
  const auto joint = MarkovJointPolicy::Product({s.policies[1], s.opponents[1]});
  Rng rng(3), scramble(4);
  for (int k = 0; k < 60; ++k) {
    const Trajectory t = SampleEpisode(s.game, joint, rng);
    Trajectory u = t;
    for (int h = 0; h < 2; ++h) {
      u.actions[h * 2 + 1] = scramble.UniformInt(2);
      u.rewards[h * 2 + 1] = scramble.Uniform();
    }
    clean.AddEpisode(t, 0);
    noisy.AddEpisode(u, 0);
  }
  CHECK(clean.RetainedCount() == noisy.RetainedCount());
  for (int p = 0; p < 4; ++p) {
    CHECK(clean.Upper(p) == noisy.Upper(p));
    CHECK(clean.Lower(p) == noisy.Lower(p));
  }
}

TEST_CASE("Hedge arithmetic") {
  HedgeState h = HedgeInit(2, std::log(2.0));
  const std::vector<double> v = {1.0, 0.0};
  HedgeUpdate(h, v);
  CHECK(h.weights[0] == doctest::Approx(2.0 / 3.0));
  CHECK(h.weights[1] == doctest::Approx(1.0 / 3.0));

  HedgeState still = HedgeInit(3, 0.0);
  HedgeUpdate(still, std::vector<double>{5.0, 1.0, 0.0});
  for (double w : still.weights) CHECK(w == doctest::Approx(1.0 / 3.0));

  HedgeState even = HedgeInit(3, 2.0);
  HedgeUpdate(even, std::vector<double>{0.4, 0.4, 0.4});
  for (double w : even.weights) CHECK(w == doctest::Approx(1.0 / 3.0));

  CHECK(HedgeLearningRate(3, 2, 100) == doctest::Approx(std::sqrt(std::log(3.0) / 400)));
  CHECK_THROWS_AS(HedgeUpdate(even, std::vector<double>{1.0}), ContractViolation);
}

ClassSet RpsClasses(const TabularMarkovGame& game) {
  nlohmann::json pc = nlohmann::json::array();
  for (int i = 0; i < 2; ++i) {
    nlohmann::json list = nlohmann::json::array();
    for (int a = 0; a < 3; ++a) {
      std::vector<double> row(3, 0.0);
      row[a] = 1.0;
      list.push_back({{row}});
    }
    pc.push_back(list);
  }
  return ClassesFromJson({{"policy_classes", pc},
                          {"function_classes", {{"generator", "exact_marginal_q"}}}},
                         game);
}

TEST_CASE("exact marginal-Q classes for RPS hold nine tables") {
  const TabularMarkovGame game(MakeRpsSequential(1));
  const ClassSet c = RpsClasses(game);
  REQUIRE(c.functions.size() == 2);
  CHECK(c.functions[0].LayerSize(0) == 9);
  CHECK(c.policies[1].size() == 3);
}

TEST_CASE("deterministic policy enumeration") {
  const TabularMarkovGame game(MakeRandomGame(2, 2, {3, 2}, 0));
  CHECK(AllDeterministicPolicies(game, 0).size() == 81);
  CHECK(AllDeterministicPolicies(game, 1).size() == 16);
  CHECK_THROWS_AS(AllDeterministicPolicies(game, 0, 80), ResourceError);
}

TEST_CASE("DOPMD with one iteration stays uniform") {
  const TabularMarkovGame game(MakeRpsSequential(1));
  const ClassSet c = RpsClasses(game);
  DopmdOptions o;
  o.T = 1;
  o.K = {10, 10};
  o.eval_every = 1;
  const DopmdResult r = RunDopmd(game, c.functions, c.policies, o, 0);
  for (double w : r.average_profile_weights) CHECK(w == doctest::Approx(1.0 / 9.0));
  CHECK(std::abs(r.final_gap) < 1e-12);
  CHECK(r.episodes == 20);
}

TEST_CASE("DOPMD with singleton classes has zero gap throughout") {
  const TabularMarkovGame game(MakeRandomGame(2, 2, {2, 2}, 1));
  std::vector<std::vector<StagePolicy>> pol = {{StagePolicy::Uniform(game, 0)},
                                               {StagePolicy::Constant(game, 1, 1)}};
  const auto f = ExactMarginalQClasses(game, pol);
  DopmdOptions o;
  o.T = 5;
  o.K = {4, 4};
  o.eval_every = 1;
  const DopmdResult r = RunDopmd(game, f, pol, o, 0);
  for (const auto& row : r.trace.rows) CHECK(row.gap == 0.0);
}

TEST_CASE("DOPMD drives the RPS restricted gap down") {
  const TabularMarkovGame game(MakeRpsSequential(1));
  const ClassSet c = RpsClasses(game);
  DopmdOptions o;
  o.T = 200;
  o.K = {50, 50};
  o.eval_every = 50;
  const DopmdResult r = RunDopmd(game, c.functions, c.policies, o, 4);
  CHECK(r.final_gap <= 0.1);
  CHECK(r.episodes == 200 * 100);
}

}  // namespace
}  // namespace cce_forge
