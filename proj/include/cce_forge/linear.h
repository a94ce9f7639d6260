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

#ifndef CCE_FORGE_LINEAR_H_
#define CCE_FORGE_LINEAR_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

#include "cce_forge/meta.h"

namespace cce_forge {

// phi_i(s, a_i) in R^d with ||phi|| <= 1.
class FeatureMap {
 public:
  // features is indexed [(s * A + a) * d + k].
  FeatureMap(int player, int dim, int num_states, int num_actions,
             std::vector<double> features);
  // Indicator of (s, a): d = S * A_i. Recovers the tabular case.
  static FeatureMap OneHot(int player, int num_states, int num_actions);
  // {"kind": "one_hot"} or {"d": d, "phi": [i][s][a] -> vector}.
  static std::vector<FeatureMap> FromJson(const nlohmann::json& j,
                                          const TabularMarkovGame& game);

  int Player() const { return player_; }
  int Dim() const { return dim_; }
  int NumStates() const { return num_states_; }
  int NumActions() const { return num_actions_; }
  Eigen::Map<const Eigen::VectorXd> Phi(int s, int a) const {
    return Eigen::Map<const Eigen::VectorXd>(
        features_.data() +
            (static_cast<std::size_t>(s) * num_actions_ + a) * dim_,
        dim_);
  }

 private:
  int player_;
  int dim_;
  int num_states_;
  int num_actions_;
  std::vector<double> features_;
};

// Sigma_hat = 1/(|D| A_i) sum_{s in D} sum_a phi phi^T, plus the ridge
// lambda and the Cholesky factor of M = Sigma_hat + lambda I.
struct CovarianceEstimate {
  Eigen::MatrixXd sigma;
  double lambda = 0.0;
  int samples = 0;
  Eigen::LLT<Eigen::MatrixXd> m_factor;

  Eigen::MatrixXd M() const {
    return sigma +
           lambda * Eigen::MatrixXd::Identity(sigma.rows(), sigma.cols());
  }
  // M^{-1} x.
  Eigen::VectorXd Solve(const Eigen::VectorXd& x) const {
    return m_factor.solve(x);
  }
};

// Throws ConfigError for an empty state list or lambda <= 0.
CovarianceEstimate EstimateCovariance(std::span<const int> init_states,
                                      const FeatureMap& fmap, double lambda);

// theta_hat = (Sigma_hat + lambda I)^{-1} phi(s, a) y.
Eigen::VectorXd LinearLossEstimate(const CovarianceEstimate& cov,
                                   const FeatureMap& fmap, int s, int a,
                                   double y);

// Shared, immutable part of an Expected-FTPL learner: features and the
// perturbation ellipse {v : v^T M v <= 1}.
struct FtplContext {
  std::shared_ptr<const FeatureMap> fmap;
  std::shared_ptr<const CovarianceEstimate> cov;
};

struct FtplPolicyState {
  std::shared_ptr<const FtplContext> context;
  Eigen::VectorXd theta;  // cumulative estimates
  double eta = 1.0;
};

// v uniform on {v : v^T M v <= 1}, from u uniform on the unit ball and
// v = L^{-T} u where M = L L^T.
Eigen::VectorXd SampleEllipse(const CovarianceEstimate& cov, Rng& rng);

// argmax_a <phi(s, a), theta + v / eta>, lowest index on ties.
int FtplSampleAction(const FtplPolicyState& state, int s, Rng& rng);

// Empirical action frequencies over n_mc perturbation draws.
std::vector<double> FtplMarginal(const FtplPolicyState& state, int s, int n_mc,
                                 Rng& rng);

// PlayerStepRule view of a frozen FTPL iterate. Probabilities are
// Monte-Carlo estimates with n_mc draws.
class FtplRule : public PlayerStepRule {
 public:
  FtplRule(FtplPolicyState state, int n_mc)
      : state_(std::move(state)), n_mc_(n_mc) {}
  int NumActions() const override { return state_.context->fmap->NumActions(); }
  int Sample(int s, Rng& rng) const override {
    return FtplSampleAction(state_, s, rng);
  }
  void Probabilities(int s, std::span<double> out, Rng& rng) const override;
  bool IsExact() const override { return false; }
  const FtplPolicyState& State() const { return state_; }

 private:
  FtplPolicyState state_;
  int n_mc_;
};

// Solution of min (1/K) sum (phi^T theta - y)^2 + lambda ||theta||^2, i.e.
// (Phi^T Phi + lambda K I) theta = Phi^T y.
struct RidgeFit {
  Eigen::VectorXd theta;
  Eigen::MatrixXd gram;  // Phi^T Phi + lambda K I
  double lambda = 0.0;
  int samples = 0;
};

// Throws ConfigError for an empty dataset.
RidgeFit RidgeRegress(std::span<const LocalSample> data, const FeatureMap& fmap,
                      double lambda);
// Regularized objective value at theta (used by optimality checks).
double RidgeObjective(std::span<const LocalSample> data, const FeatureMap& fmap,
                      double lambda, const Eigen::VectorXd& theta);

struct LinearBonusParams {
  double c = 1.0;
  double c2 = 1.0;
  int dim = 1;
  int max_actions = 1;
  int horizon = 1;
};

// G(s) = c * max_a ||phi(s,a)||_{M^{-1}} * d * maxA^{1.5} * H / sqrt(K)
//        + c2 / K.
double LinearBonus(const CovarianceEstimate& cov, const FeatureMap& fmap, int s,
                   int K, const LinearBonusParams& params);

// Vbar_{i,h}(s) = <pi_{i,h}(.|s), Qbar(s, .)> with
// Qbar = clip(phi^T theta + 1.5 G(s), 0, ceiling). Evaluated lazily per
// state; the own-policy marginal is a Monte-Carlo estimate whose stream
// depends only on (seed, s), so results do not depend on query order.
class RidgeValueFunction : public ValueFunction {
 public:
  RidgeValueFunction(std::shared_ptr<const FeatureMap> fmap,
                     std::shared_ptr<const CovarianceEstimate> cov,
                     RidgeFit fit, int K, double ceiling,
                     LinearBonusParams bonus, std::vector<RulePtr> own_rules,
                     std::vector<double> weights, int n_mc,
                     std::uint64_t seed);

  double Value(int s) const override;
  double QValue(int s, int a) const;
  const RidgeFit& Fit() const { return fit_; }

 private:
  std::shared_ptr<const FeatureMap> fmap_;
  std::shared_ptr<const CovarianceEstimate> cov_;
  RidgeFit fit_;
  int K_;
  double ceiling_;
  LinearBonusParams bonus_;
  std::vector<RulePtr> own_rules_;
  std::vector<double> weights_;
  int n_mc_;
  std::uint64_t seed_;
  mutable std::vector<std::optional<double>> cache_;
};

// Psi = log det(I + (1/A) sum_{s in B} sum_a phi phi^T), kept as a Cholesky
// factor updated by rank-one updates.
class LogDetTrigger : public TriggerState {
 public:
  explicit LogDetTrigger(std::shared_ptr<const FeatureMap> fmap);
  void Add(int state) override;
  double Value() const override;

 private:
  std::shared_ptr<const FeatureMap> fmap_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
};

// Recomputation of the same quantity from the full state list.
double LogDetFromScratch(std::span<const int> states, const FeatureMap& fmap);

struct LinearOptions {
  double delta = 0.05;
  double lambda_scale = 1.0;  // lambda = scale * d * maxA / K
  double eta_scale = 1.0;     // eta = scale / (d H sqrt(K maxA log(1/delta)))
  double bonus_c = 1.0;
  double bonus_c2 = 1.0;
  int n_mc = 1000;  // draws per own-marginal query inside regression
};

// Linear instantiation: Gamma_explore has one entry per player (that player
// uniform, the others on mu_h), Expected-FTPL learners, ridge regression
// with elliptic bonus, log-det trigger.
class LinearBundle : public SubroutineBundle {
 public:
  LinearBundle(const TabularMarkovGame& game, std::vector<FeatureMap> fmaps,
               LinearOptions options);

  std::string Name() const override { return "linear"; }
  std::vector<ExploreEntry> ExploreSet() const override;
  std::unique_ptr<NoRegretLearner> MakeLearner(int player, int h, int K,
                                               std::span<const int> init_states,
                                               std::uint64_t seed) override;
  std::shared_ptr<const ValueFunction> Regress(
      int player, int h, int K, std::span<const int> init_states,
      std::span<const LocalSample> data, const std::vector<RulePtr>& own_rules,
      const std::vector<double>& weights, std::uint64_t seed) override;
  std::unique_ptr<TriggerState> MakeTrigger(int player, int h) override;

  double Lambda(int player, int K) const;
  double Eta(int player, int K) const;
  const FeatureMap& Features(int player) const { return *fmaps_[player]; }

 private:
  int horizon_;
  int num_players_;
  int max_actions_;
  std::vector<std::shared_ptr<const FeatureMap>> fmaps_;
  LinearOptions options_;
};

}  // namespace cce_forge

#endif  // CCE_FORGE_LINEAR_H_
