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

#ifndef CCE_FORGE_GAME_IO_H_
#define CCE_FORGE_GAME_IO_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cce_forge/game.h"
#include "cce_forge/policy.h"

namespace cce_forge {

// Game files:
//   {"H": 2, "S": 3, "A": [2, 2], "s1": 0,
//    "P": [h][s][joint][s'], "R": [i][h][s][joint]}
// Parsing is shape-checked only; validation of the numbers is left to
// ValidateGameData / the TabularMarkovGame constructor.
GameData GameDataFromJson(const nlohmann::json& j);
nlohmann::json GameToJson(const GameData& data);

// Accepts either an inline game ({"H": ...}), a generator spec
// ({"generator": "rps_sequential", "H": 2} or
//  {"generator": "random", "H": 2, "S": 3, "A": [2, 2], "seed": 7}),
// or {"file": "path"}.
TabularMarkovGame GameFromSpec(const nlohmann::json& spec);

nlohmann::json ReadJsonFile(const std::string& path);
void WriteJsonFile(const std::string& path, const nlohmann::json& j);

// Sequential rock-paper-scissors: one state, three actions each
// (0 = rock, 1 = paper, 2 = scissors), the stage game repeated H times.
// Player 0 earns 1 for a win, 1/2 for a tie and 0 for a loss; player 1
// earns the complement.
GameData MakeRpsSequential(int horizon);

// Dense random game: Dirichlet(1) transition rows and Uniform[0,1] rewards.
GameData MakeRandomGame(int horizon, int num_states,
                        const std::vector<int>& num_actions,
                        std::uint64_t seed);

// Policy files. Either a component list
//   {"components": [{"weight": w, "players": [i][h][s][a]}]}
// or an explicit joint table {"H", "S", "A", "joint": [h][s][joint]}.
MarkovJointPolicy MarkovPolicyFromJson(const nlohmann::json& j);
nlohmann::json MarkovPolicyToJson(const MarkovJointPolicy& policy);
nlohmann::json JointTableToJson(const JointPolicyTable& table);
JointPolicyTable PolicyTableFromJson(const nlohmann::json& j);

// StagePolicy tables as nested [h][s][a] arrays.
StagePolicy StagePolicyFromJson(const nlohmann::json& j, int player);
nlohmann::json StagePolicyToJson(const StagePolicy& policy);

}  // namespace cce_forge

#endif  // CCE_FORGE_GAME_IO_H_
