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
#include <memory>
#include <vector>

#include "doctest.h"

#include "cce_forge/errors.h"
#include "cce_forge/game_io.h"
#include "cce_forge/linear.h"
#include "cce_forge/rng.h"
#include "cce_forge/tabular.h"

namespace cce_forge {
namespace {

CovarianceEstimate ZeroCovariance(int d, double lambda) {
  CovarianceEstimate cov;
  cov.sigma = Eigen::MatrixXd::Zero(d, d);
  cov.lambda = lambda;
  cov.m_factor.compute(cov.M());
  return cov;
}

FtplPolicyState MakeFtpl(std::shared_ptr<const FeatureMap> fmap,
                         std::shared_ptr<const CovarianceEstimate> cov,
                         Eigen::VectorXd theta, double eta) {
  auto context = std::make_shared<FtplContext>();
  context->fmap = std::move(fmap);
  context->cov = std::move(cov);
  return {context, std::move(theta), eta};
}

TEST_CASE("feature maps check norms") {
  CHECK_THROWS_AS(FeatureMap(0, 1, 1, 2, {1.0, 1.5}), ConfigError);
  const FeatureMap f = FeatureMap::OneHot(0, 3, 2);
  CHECK(f.Dim() == 6);
  CHECK(f.Phi(2, 1)[5] == 1.0);
  CHECK(f.Phi(2, 1).sum() == 1.0);
}

TEST_CASE("covariance estimate") {
  const FeatureMap single = FeatureMap::OneHot(0, 2, 1);
  const std::vector<int> one = {1};
  const auto c1 = EstimateCovariance(one, single, 0.1);
  CHECK(c1.sigma(1, 1) == 1.0);
  CHECK(c1.sigma.sum() == 1.0);

  // Two orthonormal features, each seen once.
  const std::vector<int> two = {0, 1};
  const auto c2 = EstimateCovariance(two, single, 0.1);
  CHECK(c2.sigma(0, 0) == 0.5);
  CHECK(c2.sigma(1, 1) == 0.5);

  Rng rng(4);
  const FeatureMap dense(0, 3, 4, 2, [&] {
    std::vector<double> v(4 * 2 * 3);
    for (std::size_t k = 0; k < v.size(); k += 3) {
      double n = 0.0;
      for (int j = 0; j < 3; ++j) n += std::pow(v[k + j] = rng.Uniform() - 0.5, 2);
      for (int j = 0; j < 3; ++j) v[k + j] /= std::sqrt(n);
    }
    return v;
  }());
  std::vector<int> states;
  for (int k = 0; k < 50; ++k) states.push_back(rng.UniformInt(4));
  CHECK(EstimateCovariance(states, dense, 0.1).sigma.trace() <= 1.0 + 1e-12);
  CHECK_THROWS_AS(EstimateCovariance({}, dense, 0.1), ConfigError);
  CHECK_THROWS_AS(EstimateCovariance(states, dense, 0.0), ConfigError);
}

TEST_CASE("linear loss estimate") {
  const FeatureMap f = FeatureMap::OneHot(0, 1, 2);
  const auto cov = ZeroCovariance(2, 1.0);
  const Eigen::VectorXd theta = LinearLossEstimate(cov, f, 0, 0, 2.0);
  CHECK(theta(0) == doctest::Approx(2.0));
  CHECK(theta(1) == doctest::Approx(0.0));
  CHECK(LinearLossEstimate(cov, f, 0, 1, 0.0).norm() == 0.0);

  const std::vector<int> states = {0, 0, 0};
  const auto est = EstimateCovariance(states, f, 0.25);
  for (double y : {0.5, 1.0, 2.0}) {
    CHECK(LinearLossEstimate(est, f, 0, 1, y).norm() <= 2.0 / 0.25);
  }
}

TEST_CASE("FTPL symmetric actions split evenly") {
  auto f = std::make_shared<FeatureMap>(FeatureMap::OneHot(0, 1, 2));
  auto cov = std::make_shared<CovarianceEstimate>(ZeroCovariance(2, 1.0));
  const auto state = MakeFtpl(f, cov, Eigen::VectorXd::Zero(2), 1.0);
  Rng rng(7);
  const int n = 100000;
  const auto freq = FtplMarginal(state, 0, n, rng);
  CHECK(std::abs(freq[0] - 0.5) < 3.0 * std::sqrt(0.25 / n));
}

TEST_CASE("FTPL with vanishing perturbation is the argmax") {
  auto f = std::make_shared<FeatureMap>(FeatureMap::OneHot(0, 1, 3));
  auto cov = std::make_shared<CovarianceEstimate>(ZeroCovariance(3, 1.0));
  Eigen::VectorXd theta(3);
  theta << 0.1, 0.4, 0.2;
  const auto state = MakeFtpl(f, cov, theta, 1e9);
  Rng rng(1);
  const auto freq = FtplMarginal(state, 0, 1000, rng);
  CHECK(freq[1] == 1.0);
}

TEST_CASE("FTPL one-dimensional closed form") {
  // phi(s, 0) = 1, phi(s, 1) = -1; action 0 wins iff theta + v/eta > 0
  // with v = u / sqrt(M), u uniform on [-1, 1].
  auto f = std::make_shared<FeatureMap>(0, 1, 1, 2, std::vector<double>{1.0, -1.0});
  const std::vector<int> states = {0};
  auto cov = std::make_shared<CovarianceEstimate>(EstimateCovariance(states, *f, 1.0));
  const double M = cov->M()(0, 0);
  CHECK(M == doctest::Approx(2.0));
  const double theta = 0.2, eta = 1.0;
  const double expected = 0.5 * (1.0 + std::min(theta * eta * std::sqrt(M), 1.0));
  Eigen::VectorXd th(1);
  th << theta;
  const auto state = MakeFtpl(f, cov, th, eta);
  Rng rng(9);
  const int n = 200000;
  const auto freq = FtplMarginal(state, 0, n, rng);
  CHECK(std::abs(freq[0] - expected) < 4.0 * std::sqrt(expected * (1 - expected) / n));
}

TEST_CASE("FTPL marginal matches grid integration over the ellipse") {
  // One state, two one-hot actions: d = 2 and M is diagonal but anisotropic.
  auto f = std::make_shared<FeatureMap>(FeatureMap::OneHot(0, 1, 2));
  CovarianceEstimate c;
  c.sigma = Eigen::MatrixXd::Zero(2, 2);
  c.sigma(0, 0) = 0.5;
  c.sigma(0, 1) = c.sigma(1, 0) = 0.2;
  c.lambda = 0.3;
  c.m_factor.compute(c.M());
  auto cov = std::make_shared<CovarianceEstimate>(c);
  Eigen::VectorXd theta(2);
  theta << 0.3, 0.1;
  const double eta = 2.0;
  // Dense enumeration of u over the unit disk, mapped through L^{-T}.
  const Eigen::MatrixXd L = c.m_factor.matrixL();
  const Eigen::MatrixXd LinvT = L.transpose().inverse();
  const int grid = 1500;
  double inside = 0.0, wins = 0.0;
  for (int x = 0; x < grid; ++x) {
    for (int y = 0; y < grid; ++y) {
      Eigen::Vector2d u(-1.0 + (x + 0.5) * 2.0 / grid, -1.0 + (y + 0.5) * 2.0 / grid);
      if (u.squaredNorm() > 1.0) continue;
      inside += 1.0;
      const Eigen::Vector2d score = theta + LinvT * u / eta;
      if (score(0) >= score(1)) wins += 1.0;
    }
  }
  const double exact = wins / inside;
  const auto state = MakeFtpl(f, cov, theta, eta);
  Rng rng(2);
  const int n = 200000;
  const auto freq = FtplMarginal(state, 0, n, rng);
  CHECK(std::abs(freq[0] - exact) < 4.0 * std::sqrt(exact * (1 - exact) / n) + 2e-3);
}

TEST_CASE("FTPL marginals from disjoint seeds agree") {
  auto f = std::make_shared<FeatureMap>(FeatureMap::OneHot(0, 2, 3));
  const std::vector<int> states = {0, 1, 1};
  auto cov = std::make_shared<CovarianceEstimate>(EstimateCovariance(states, *f, 0.2));
  Eigen::VectorXd theta(6);
  theta << 0.1, 0.3, 0.2, 0.0, 0.5, 0.4;
  const auto state = MakeFtpl(f, cov, theta, 3.0);
  const int n = 20000;
  for (int s = 0; s < 2; ++s) {
    Rng a(100), b(200);
    const auto p = FtplMarginal(state, s, n, a);
    const auto q = FtplMarginal(state, s, n, b);
    double tv = 0.0;
    for (int k = 0; k < 3; ++k) tv += 0.5 * std::abs(p[k] - q[k]);
    CHECK(tv < 4.0 / std::sqrt(n));
  }
}

TEST_CASE("ridge regression closed forms") {
  const FeatureMap f = FeatureMap::OneHot(0, 1, 1);
  const std::vector<LocalSample> one = {{0, 0, 1.0}};
  CHECK(RidgeRegress(one, f, 1.0).theta(0) == doctest::Approx(0.5));

  const FeatureMap g = FeatureMap::OneHot(0, 2, 2);
  std::vector<LocalSample> data;
  for (int k = 0; k < 5; ++k) data.push_back({1, 0, 0.8});
  for (int k = 0; k < 3; ++k) data.push_back({0, 1, 0.2});
  const double lambda = 0.25;
  const RidgeFit fit = RidgeRegress(data, g, lambda);
  const double K = data.size();
  CHECK(fit.theta(2) == doctest::Approx(0.8 * 5 / (5 + lambda * K)));
  CHECK(fit.theta(1) == doctest::Approx(0.2 * 3 / (3 + lambda * K)));
  CHECK(fit.theta(0) == 0.0);
  CHECK_THROWS_AS(RidgeRegress({}, g, lambda), ConfigError);
}

TEST_CASE("ridge solution is first-order optimal") {
  Rng rng(5);
  const FeatureMap f(0, 3, 3, 2, [&] {
    std::vector<double> v(3 * 2 * 3);
    for (double& x : v) x = (rng.Uniform() - 0.5) * 0.9;
    return v;
  }());
  std::vector<LocalSample> data;
  for (int k = 0; k < 40; ++k) {
    data.push_back({rng.UniformInt(3), rng.UniformInt(2), 2.0 * rng.Uniform()});
  }
  const double lambda = 0.05;
  const RidgeFit fit = RidgeRegress(data, f, lambda);
  const double base = RidgeObjective(data, f, lambda, fit.theta);
  for (int k = 0; k < 3; ++k) {
    for (double step : {1e-4, -1e-4}) {
      Eigen::VectorXd t = fit.theta;
      t(k) += step;
      CHECK(RidgeObjective(data, f, lambda, t) >= base);
    }
  }
}

TEST_CASE("linear bonus") {
  const FeatureMap f = FeatureMap::OneHot(0, 1, 2);
  const auto cov = ZeroCovariance(2, 1.0);
  LinearBonusParams p;
  p.c = 0.7;
  p.c2 = 0.3;
  p.dim = 2;
  p.max_actions = 2;
  p.horizon = 3;
  const int K = 16;
  CHECK(LinearBonus(cov, f, 0, K, p) ==
        doctest::Approx(0.7 * 2 * std::pow(2.0, 1.5) * 3 / 4.0 + 0.3 / 16));
  for (int k = 1; k < 100; ++k) {
    CHECK(LinearBonus(cov, f, 0, k + 1, p) < LinearBonus(cov, f, 0, k, p));
  }
  // Relabeling the actions leaves the max over actions unchanged.
  const FeatureMap ab(0, 2, 1, 2, {0.6, 0.0, 0.3, 0.4});
  const FeatureMap ba(0, 2, 1, 2, {0.3, 0.4, 0.6, 0.0});
  const std::vector<int> s0 = {0};
  CHECK(LinearBonus(EstimateCovariance(s0, ab, 0.1), ab, 0, K, p) ==
        doctest::Approx(LinearBonus(EstimateCovariance(s0, ba, 0.1), ba, 0, K, p)));
}

TEST_CASE("one-hot bonus falls as a state's visit mass rises") {
  const FeatureMap f = FeatureMap::OneHot(0, 3, 2);
  LinearBonusParams p;
  double last = 1e300;
  for (int hits = 1; hits <= 10; ++hits) {
    std::vector<int> states(hits, 0);
    states.resize(10, 1);  // |D| fixed at 10
    const auto cov = EstimateCovariance(states, f, 0.05);
    const double g = LinearBonus(cov, f, 0, 10, p);
    CHECK(g < last);
    last = g;
  }
}

TEST_CASE("heavy ridge shrinks to the bonus") {
  auto f = std::make_shared<FeatureMap>(FeatureMap::OneHot(0, 1, 2));
  auto cov = std::make_shared<CovarianceEstimate>(ZeroCovariance(2, 1.0));
  const std::vector<LocalSample> data = {{0, 0, 1.0}, {0, 1, 0.5}};
  LinearBonusParams p;
  p.c = 0.01;
  p.c2 = 0.0;
  p.dim = 2;
  p.max_actions = 2;
  p.horizon = 2;
  const RidgeFit fit = RidgeRegress(data, *f, 1e12);
  CHECK(fit.theta.norm() < 1e-9);
  const double g = LinearBonus(*cov, *f, 0, 2, p);
  const RidgeValueFunction v(f, cov, fit, 2, 2.0, p,
                             {TableRule::Uniform(1, 2)}, {1.0}, 10, 0);
  CHECK(v.QValue(0, 0) == doctest::Approx(std::min(1.5 * g, 2.0)));
  CHECK(v.Value(0) == doctest::Approx(std::min(1.5 * g, 2.0)));
}

TEST_CASE("log-det trigger") {
  auto one = std::make_shared<FeatureMap>(FeatureMap::OneHot(0, 2, 1));
  LogDetTrigger t(one);
  CHECK(t.Value() == 0.0);
  for (int n = 1; n <= 7; ++n) {
    t.Add(1);
    CHECK(t.Value() == doctest::Approx(std::log(1.0 + n)));
  }

  Rng rng(3);
  auto f = std::make_shared<FeatureMap>(0, 3, 5, 2, [&] {
    std::vector<double> v(5 * 2 * 3);
    for (double& x : v) x = (rng.Uniform() - 0.5);
    return v;
  }());
  LogDetTrigger inc(f);
  std::vector<int> states;
  double last = 0.0;
  for (int k = 0; k < 1000; ++k) {
    states.push_back(rng.UniformInt(5));
    inc.Add(states.back());
    CHECK(inc.Value() >= last - 1e-12);
    last = inc.Value();
  }
  CHECK(std::abs(inc.Value() - LogDetFromScratch(states, *f)) < 1e-8);
}

TEST_CASE("linear exploration set is one entry per player") {
  const TabularMarkovGame game(MakeRandomGame(1, 2, {2, 2, 2}, 0));
  std::vector<FeatureMap> maps;
  for (int i = 0; i < 3; ++i) maps.push_back(FeatureMap::OneHot(i, 2, 2));
  LinearBundle bundle(game, maps, {});
  const auto set = bundle.ExploreSet();
  REQUIRE(set.size() == 3);
  for (int i = 0; i < 3; ++i) {
    CHECK(set[i].active == std::vector<int>{i});
    for (int j = 0; j < 3; ++j) CHECK(set[i].uniform_at_step[j] == (i == j));
  }
  const TabularMarkovGame solo(MakeRandomGame(1, 2, {3}, 0));
  LinearBundle single(solo, {FeatureMap::OneHot(0, 2, 3)}, {});
  CHECK(single.ExploreSet().size() == 1);
}

TEST_CASE("default learning rate and ridge scale") {
  const TabularMarkovGame game(MakeRandomGame(2, 3, {2, 2}, 0));
  const auto maps = FeatureMap::FromJson({{"kind", "one_hot"}}, game);
  LinearBundle bundle(game, maps, {});
  const int K = 50;
  CHECK(bundle.Lambda(0, K) == doctest::Approx(6.0 * 2 / K));
  CHECK(bundle.Eta(0, K) ==
        doctest::Approx(1.0 / (6.0 * 2 * std::sqrt(K * 2 * std::log(1 / 0.05)))));
}

}  // namespace
}  // namespace cce_forge
