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

// Independent reference computations used by the unit and acceptance tests.
// They trade speed for directness: forward path enumeration instead of
// backward induction, brute-force policy enumeration instead of DP.

#ifndef CCE_FORGE_TESTS_ORACLES_H_
#define CCE_FORGE_TESTS_ORACLES_H_

#include <cstdint>
#include <vector>

#include "cce_forge/dopmd.h"
#include "cce_forge/game.h"
#include "cce_forge/policy.h"

namespace cce_forge::oracle {

// V_{i,1}(s_1) by summing probability x return over every trajectory.
double PathValue(const TabularMarkovGame& game, const JointPolicyTable& policy,
                 int player);

// Opponents' marginal at (h, s) by direct summation of the joint row.
std::vector<double> OpponentMarginal(const TabularMarkovGame& game,
                                     const JointPolicyTable& policy,
                                     int player, int h, int s);

// Max over all A_i^{H S} deterministic Markov deviations of player i, each
// played against the per-(h, s) opponent marginals and valued by PathValue.
double BruteForceBestResponse(const TabularMarkovGame& game,
                              const JointPolicyTable& policy, int player);

// Joint distribution of a component mixture, expanded term by term.
std::vector<double> ExpandMixture(const MarkovJointPolicy& policy, int h, int s);

struct MonteCarloEstimate {
  std::vector<double> mean;    // per player
  std::vector<double> std_error;  // per player
};
MonteCarloEstimate MonteCarloValue(const TabularMarkovGame& game,
                                   const EpisodePolicy& policy, int episodes,
                                   std::uint64_t seed);

// Empirical P(s_h = s), indexed [h * S + s] for h = 0..H.
std::vector<double> EmpiricalOccupancy(const TabularMarkovGame& game,
                                       const EpisodePolicy& policy,
                                       int episodes, std::uint64_t seed);

// Total-variation distance between two distributions on [h * S + s] at one h.
double TotalVariation(const std::vector<double>& p, const std::vector<double>& q,
                      int offset, int size);

// Realizable marginal-Q class for player i against fixed product opponents:
// layer h holds Q_h^{pi x pi_{-i}} for every pi in `policies`, followed by
// `distractors` random tables with the right range.
FunctionClass RealizableClass(const TabularMarkovGame& game, int player,
                              const std::vector<StagePolicy>& policies,
                              const std::vector<StagePolicy>& opponents,
                              int distractors, std::uint64_t seed);

}  // namespace cce_forge::oracle

#endif  // CCE_FORGE_TESTS_ORACLES_H_
