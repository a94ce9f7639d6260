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

#include "cce_forge/linear.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cce_forge/errors.h"

namespace cce_forge {

// -- FeatureMap ---------------------------------------------------------------

FeatureMap::FeatureMap(int player, int dim, int num_states, int num_actions,
                       std::vector<double> features)
    : player_(player),
      dim_(dim),
      num_states_(num_states),
      num_actions_(num_actions),
      features_(std::move(features)) {
  if (dim <= 0 || num_states <= 0 || num_actions <= 0) {
    throw ConfigError("FeatureMap: nonpositive dimension");
  }
  if (features_.size() !=
      static_cast<std::size_t>(num_states) * num_actions * dim) {
    throw ConfigError("FeatureMap: table size does not match S*A*d");
  }
  for (int s = 0; s < num_states; ++s) {
    for (int a = 0; a < num_actions; ++a) {
      const double norm = Phi(s, a).norm();
      if (!std::isfinite(norm) || norm > 1.0 + 1e-12) {
        std::ostringstream os;
        os << "FeatureMap: ||phi(" << s << ", " << a << ")|| = " << norm
           << " exceeds 1";
        throw ConfigError(os.str());
      }
    }
  }
}

FeatureMap FeatureMap::OneHot(int player, int num_states, int num_actions) {
  const int d = num_states * num_actions;
  std::vector<double> f(static_cast<std::size_t>(d) * d, 0.0);
  for (int k = 0; k < d; ++k) f[static_cast<std::size_t>(k) * d + k] = 1.0;
  return FeatureMap(player, d, num_states, num_actions, std::move(f));
}

std::vector<FeatureMap> FeatureMap::FromJson(const nlohmann::json& j,
                                             const TabularMarkovGame& game) {
  std::vector<FeatureMap> out;
  const int m = game.NumPlayers(), S = game.NumStates();
  if (j.is_object() && j.value("kind", "") == "one_hot") {
    for (int i = 0; i < m; ++i) out.push_back(OneHot(i, S, game.NumActions(i)));
    return out;
  }
  if (!j.is_object() || !j.contains("d") || !j.contains("phi")) {
    throw ConfigError("feature map needs {\"kind\": \"one_hot\"} or d/phi");
  }
  const int d = j.at("d").get<int>();
  const auto& phi = j.at("phi");
  if (!phi.is_array() || static_cast<int>(phi.size()) != m) {
    throw ConfigError("feature map: phi must list one table per player");
  }
  for (int i = 0; i < m; ++i) {
    const int A = game.NumActions(i);
    if (!phi[i].is_array() || static_cast<int>(phi[i].size()) != S) {
      throw ConfigError("feature map: phi[i] must have S entries");
    }
    std::vector<double> f;
    for (int s = 0; s < S; ++s) {
      if (!phi[i][s].is_array() || static_cast<int>(phi[i][s].size()) != A) {
        throw ConfigError("feature map: phi[i][s] must have A_i entries");
      }
      for (int a = 0; a < A; ++a) {
        const auto& v = phi[i][s][a];
        if (!v.is_array() || static_cast<int>(v.size()) != d) {
          throw ConfigError("feature map: vectors must have length d");
        }
        for (const auto& x : v) f.push_back(x.get<double>());
      }
    }
    out.emplace_back(i, d, S, A, std::move(f));
  }
  return out;
}

// -- Covariance and estimators ------------------------------------------------

CovarianceEstimate EstimateCovariance(std::span<const int> init_states,
                                      const FeatureMap& fmap, double lambda) {
  if (init_states.empty()) {
    throw ConfigError("covariance estimate needs a nonempty D_init");
  }
  if (!(lambda > 0.0)) throw ConfigError("covariance ridge must be positive");
  const int d = fmap.Dim(), A = fmap.NumActions();
  // Per-state outer-product sums, weighted by visit counts.
  std::vector<int> counts(fmap.NumStates(), 0);
  for (int s : init_states) ++counts.at(s);
  CovarianceEstimate cov;
  cov.sigma = Eigen::MatrixXd::Zero(d, d);
  for (int s = 0; s < fmap.NumStates(); ++s) {
    if (counts[s] == 0) continue;
    for (int a = 0; a < A; ++a) {
      const auto phi = fmap.Phi(s, a);
      cov.sigma.noalias() += static_cast<double>(counts[s]) * phi * phi.transpose();
    }
  }
  cov.sigma /= static_cast<double>(init_states.size()) * A;
  cov.lambda = lambda;
  cov.samples = static_cast<int>(init_states.size());
  cov.m_factor.compute(cov.M());
  if (cov.m_factor.info() != Eigen::Success) {
    throw InvariantViolation("covariance matrix is not positive definite");
  }
  return cov;
}

Eigen::VectorXd LinearLossEstimate(const CovarianceEstimate& cov,
                                   const FeatureMap& fmap, int s, int a,
                                   double y) {
  if (y == 0.0) return Eigen::VectorXd::Zero(fmap.Dim());
  return cov.Solve(fmap.Phi(s, a) * y);
}

Eigen::VectorXd SampleEllipse(const CovarianceEstimate& cov, Rng& rng) {
  const int d = static_cast<int>(cov.sigma.rows());
  Eigen::VectorXd u(d);
  double norm = 0.0;
  do {
    for (int k = 0; k < d; ++k) u[k] = rng.Normal();
    norm = u.norm();
  } while (norm == 0.0);
  u *= std::pow(rng.Uniform(), 1.0 / d) / norm;
  // L^T v = u gives v^T M v = u^T u.
  return cov.m_factor.matrixU().solve(u);
}

int FtplSampleAction(const FtplPolicyState& state, int s, Rng& rng) {
  const FeatureMap& fmap = *state.context->fmap;
  const Eigen::VectorXd w =
      state.theta + SampleEllipse(*state.context->cov, rng) / state.eta;
  int best = 0;
  double best_score = 0.0;
  for (int a = 0; a < fmap.NumActions(); ++a) {
    const double score = fmap.Phi(s, a).dot(w);
    if (a == 0 || score > best_score) {
      best = a;
      best_score = score;
    }
  }
  return best;
}

std::vector<double> FtplMarginal(const FtplPolicyState& state, int s, int n_mc,
                                 Rng& rng) {
  if (n_mc < 1) throw ConfigError("ftpl marginal needs n_mc >= 1");
  std::vector<double> freq(state.context->fmap->NumActions(), 0.0);
  for (int n = 0; n < n_mc; ++n) freq[FtplSampleAction(state, s, rng)] += 1.0;
  for (double& f : freq) f /= n_mc;
  return freq;
}

void FtplRule::Probabilities(int s, std::span<double> out, Rng& rng) const {
  const std::vector<double> p = FtplMarginal(state_, s, n_mc_, rng);
  std::copy(p.begin(), p.end(), out.begin());
}

// -- Ridge regression ---------------------------------------------------------

RidgeFit RidgeRegress(std::span<const LocalSample> data, const FeatureMap& fmap,
                      double lambda) {
  if (data.empty()) throw ConfigError("ridge regression needs data");
  if (!(lambda > 0.0)) throw ConfigError("ridge lambda must be positive");
  const int d = fmap.Dim();
  const double K = static_cast<double>(data.size());
  RidgeFit fit;
  fit.gram = lambda * K * Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
  for (const auto& x : data) {
    const auto phi = fmap.Phi(x.state, x.action);
    fit.gram.noalias() += phi * phi.transpose();
    rhs += phi * x.target;
  }
  fit.theta = fit.gram.llt().solve(rhs);
  fit.lambda = lambda;
  fit.samples = static_cast<int>(data.size());
  return fit;
}

double RidgeObjective(std::span<const LocalSample> data, const FeatureMap& fmap,
                      double lambda, const Eigen::VectorXd& theta) {
  double loss = 0.0;
  for (const auto& x : data) {
    const double r = fmap.Phi(x.state, x.action).dot(theta) - x.target;
    loss += r * r;
  }
  return loss / static_cast<double>(data.size()) +
         lambda * theta.squaredNorm();
}

double LinearBonus(const CovarianceEstimate& cov, const FeatureMap& fmap, int s,
                   int K, const LinearBonusParams& params) {
  if (K < 1) throw ContractViolation("linear bonus needs K >= 1");
  double widest = 0.0;
  for (int a = 0; a < fmap.NumActions(); ++a) {
    const Eigen::VectorXd phi = fmap.Phi(s, a);
    widest = std::max(widest, std::sqrt(std::max(0.0, phi.dot(cov.Solve(phi)))));
  }
  return params.c * widest * params.dim *
             std::pow(static_cast<double>(params.max_actions), 1.5) *
             params.horizon / std::sqrt(static_cast<double>(K)) +
         params.c2 / K;
}

RidgeValueFunction::RidgeValueFunction(
    std::shared_ptr<const FeatureMap> fmap,
    std::shared_ptr<const CovarianceEstimate> cov, RidgeFit fit, int K,
    double ceiling, LinearBonusParams bonus, std::vector<RulePtr> own_rules,
    std::vector<double> weights, int n_mc, std::uint64_t seed)
    : fmap_(std::move(fmap)),
      cov_(std::move(cov)),
      fit_(std::move(fit)),
      K_(K),
      ceiling_(ceiling),
      bonus_(bonus),
      own_rules_(std::move(own_rules)),
      weights_(std::move(weights)),
      n_mc_(n_mc),
      seed_(seed),
      cache_(fmap_->NumStates()) {
  if (own_rules_.empty() || own_rules_.size() != weights_.size()) {
    throw ContractViolation("regression value: own rules/weights mismatch");
  }
}

double RidgeValueFunction::QValue(int s, int a) const {
  const double g = LinearBonus(*cov_, *fmap_, s, K_, bonus_);
  return std::clamp(fmap_->Phi(s, a).dot(fit_.theta) + 1.5 * g, 0.0, ceiling_);
}

double RidgeValueFunction::Value(int s) const {
  if (cache_[s]) return *cache_[s];
  const int A = fmap_->NumActions();
  std::vector<double> pi(A, 0.0);
  Rng rng(DeriveSeed(seed_, static_cast<std::uint64_t>(s)));
  bool exact = true;
  for (const auto& r : own_rules_) exact = exact && r->IsExact();
  if (exact) {
    std::vector<double> row(A);
    for (std::size_t k = 0; k < own_rules_.size(); ++k) {
      own_rules_[k]->Probabilities(s, row, rng);
      for (int a = 0; a < A; ++a) pi[a] += weights_[k] * row[a];
    }
  } else {
    // Draw a component, then an action from it.
    for (int n = 0; n < n_mc_; ++n) {
      const int k = own_rules_.size() == 1 ? 0 : rng.Categorical(weights_);
      pi[own_rules_[k]->Sample(s, rng)] += 1.0 / n_mc_;
    }
  }
  const double g = LinearBonus(*cov_, *fmap_, s, K_, bonus_);
  double v = 0.0;
  for (int a = 0; a < A; ++a) {
    if (pi[a] == 0.0) continue;
    const double q =
        std::clamp(fmap_->Phi(s, a).dot(fit_.theta) + 1.5 * g, 0.0, ceiling_);
    v += pi[a] * q;
  }
  v = std::clamp(v, 0.0, ceiling_);
  cache_[s] = v;
  return v;
}

// -- Log-det trigger ----------------------------------------------------------

LogDetTrigger::LogDetTrigger(std::shared_ptr<const FeatureMap> fmap)
    : fmap_(std::move(fmap)) {
  factor_.compute(Eigen::MatrixXd::Identity(fmap_->Dim(), fmap_->Dim()));
}

void LogDetTrigger::Add(int state) {
  const double w = 1.0 / fmap_->NumActions();
  for (int a = 0; a < fmap_->NumActions(); ++a) {
    const Eigen::VectorXd phi = fmap_->Phi(state, a);
    factor_.rankUpdate(phi, w);
  }
}

double LogDetTrigger::Value() const {
  const auto& L = factor_.matrixLLT();
  double psi = 0.0;
  for (int k = 0; k < L.rows(); ++k) psi += 2.0 * std::log(L(k, k));
  return psi;
}

double LogDetFromScratch(std::span<const int> states, const FeatureMap& fmap) {
  const int d = fmap.Dim(), A = fmap.NumActions();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(d, d);
  for (int s : states) {
    for (int a = 0; a < A; ++a) {
      const auto phi = fmap.Phi(s, a);
      m.noalias() += (phi * phi.transpose()) / A;
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  double psi = 0.0;
  for (int k = 0; k < d; ++k) psi += 2.0 * std::log(llt.matrixLLT()(k, k));
  return psi;
}

// -- Bundle -------------------------------------------------------------------

namespace {

class FtplLearner : public NoRegretLearner {
 public:
  FtplLearner(std::shared_ptr<const FtplContext> context, double eta, int n_mc)
      : n_mc_(n_mc) {
    state_.context = std::move(context);
    state_.theta = Eigen::VectorXd::Zero(state_.context->fmap->Dim());
    state_.eta = eta;
  }

  RulePtr Current() override {
    if (!snapshot_) snapshot_ = std::make_shared<const FtplRule>(state_, n_mc_);
    return snapshot_;
  }

  void Update(std::span<const LocalSample> samples) override {
    for (const auto& x : samples) {
      state_.theta += LinearLossEstimate(*state_.context->cov,
                                         *state_.context->fmap, x.state,
                                         x.action, x.target);
      snapshot_.reset();
    }
  }

 private:
  FtplPolicyState state_;
  int n_mc_;
  RulePtr snapshot_;
};

}  // namespace

LinearBundle::LinearBundle(const TabularMarkovGame& game,
                           std::vector<FeatureMap> fmaps, LinearOptions options)
    : horizon_(game.Horizon()),
      num_players_(game.NumPlayers()),
      max_actions_(game.MaxActions()),
      options_(options) {
  if (static_cast<int>(fmaps.size()) != num_players_) {
    throw ConfigError("linear bundle: need one feature map per player");
  }
  for (int i = 0; i < num_players_; ++i) {
    if (fmaps[i].Player() != i || fmaps[i].NumStates() != game.NumStates() ||
        fmaps[i].NumActions() != game.NumActions(i)) {
      throw ConfigError("linear bundle: feature map does not match the game");
    }
    fmaps_.push_back(std::make_shared<const FeatureMap>(std::move(fmaps[i])));
  }
  if (!(options_.delta > 0.0 && options_.delta < 1.0) ||
      !(options_.lambda_scale > 0.0) || !(options_.eta_scale > 0.0) ||
      !(options_.bonus_c >= 0.0) || !(options_.bonus_c2 >= 0.0) ||
      options_.n_mc < 1) {
    throw ConfigError("linear options out of range");
  }
}

double LinearBundle::Lambda(int player, int K) const {
  return options_.lambda_scale * fmaps_[player]->Dim() * max_actions_ /
         static_cast<double>(K);
}

double LinearBundle::Eta(int player, int K) const {
  return options_.eta_scale /
         (fmaps_[player]->Dim() * horizon_ *
          std::sqrt(static_cast<double>(K) * max_actions_ *
                    std::log(1.0 / options_.delta)));
}

std::vector<ExploreEntry> LinearBundle::ExploreSet() const {
  std::vector<ExploreEntry> set;
  for (int i = 0; i < num_players_; ++i) {
    ExploreEntry e;
    e.uniform_at_step.assign(num_players_, false);
    e.uniform_at_step[i] = true;
    e.active = {i};
    set.push_back(std::move(e));
  }
  return set;
}

std::unique_ptr<NoRegretLearner> LinearBundle::MakeLearner(
    int player, int, int K, std::span<const int> init_states, std::uint64_t) {
  auto context = std::make_shared<FtplContext>();
  context->fmap = fmaps_[player];
  context->cov = std::make_shared<const CovarianceEstimate>(
      EstimateCovariance(init_states, *fmaps_[player], Lambda(player, K)));
  return std::make_unique<FtplLearner>(std::move(context), Eta(player, K),
                                       options_.n_mc);
}

std::shared_ptr<const ValueFunction> LinearBundle::Regress(
    int player, int h, int K, std::span<const int> init_states,
    std::span<const LocalSample> data, const std::vector<RulePtr>& own_rules,
    const std::vector<double>& weights, std::uint64_t seed) {
  const double lambda = Lambda(player, K);
  auto cov = std::make_shared<const CovarianceEstimate>(
      EstimateCovariance(init_states, *fmaps_[player], lambda));
  LinearBonusParams bonus;
  bonus.c = options_.bonus_c;
  bonus.c2 = options_.bonus_c2;
  bonus.dim = fmaps_[player]->Dim();
  bonus.max_actions = max_actions_;
  bonus.horizon = horizon_;
  return std::make_shared<const RidgeValueFunction>(
      fmaps_[player], std::move(cov),
      RidgeRegress(data, *fmaps_[player], lambda), K,
      static_cast<double>(horizon_ - h), bonus, own_rules, weights,
      options_.n_mc, seed);
}

std::unique_ptr<TriggerState> LinearBundle::MakeTrigger(int player, int) {
  return std::make_unique<LogDetTrigger>(fmaps_[player]);
}

}  // namespace cce_forge
