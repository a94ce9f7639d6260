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

#include "cce_forge/game_io.h"

#include <cmath>
#include <fstream>
#include <sstream>

#include "cce_forge/errors.h"
#include "cce_forge/rng.h"

namespace cce_forge {
namespace {

using nlohmann::json;

const json& Field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw ConfigError(std::string("missing field \"") + key + "\"");
  }
  return j.at(key);
}

int PositiveInt(const json& j, const char* key) {
  const json& v = Field(j, key);
  if (!v.is_number_integer() || v.get<long long>() <= 0) {
    throw ConfigError(std::string("field \"") + key +
                      "\" must be a positive integer");
  }
  return v.get<int>();
}

// Checks that `j` is an array of length n.
const json& ArrayOf(const json& j, std::size_t n, const std::string& what) {
  if (!j.is_array() || j.size() != n) {
    std::ostringstream os;
    os << what << ": expected an array of length " << n;
    throw ConfigError(os.str());
  }
  return j;
}

double Number(const json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError(what + ": expected a number");
  return j.get<double>();
}

int JointCount(const std::vector<int>& num_actions) {
  long long n = 1;
  for (int a : num_actions) {
    n *= a;
    if (n > (1 << 24)) throw ConfigError("joint action space too large");
  }
  return static_cast<int>(n);
}

std::vector<int> ActionList(const json& j) {
  const json& a = Field(j, "A");
  if (!a.is_array() || a.empty()) {
    throw ConfigError("field \"A\" must be a nonempty array");
  }
  std::vector<int> out;
  for (const auto& v : a) {
    if (!v.is_number_integer() || v.get<long long>() <= 0) {
      throw ConfigError("action counts must be positive integers");
    }
    out.push_back(v.get<int>());
  }
  return out;
}

}  // namespace

GameData GameDataFromJson(const json& j) {
  GameData data;
  data.horizon = PositiveInt(j, "H");
  data.num_states = PositiveInt(j, "S");
  data.num_actions = ActionList(j);
  const json& s1 = Field(j, "s1");
  if (!s1.is_number_integer()) throw ConfigError("\"s1\" must be an integer");
  data.initial_state = s1.get<int>();
  const int H = data.horizon, S = data.num_states;
  const int m = static_cast<int>(data.num_actions.size());
  const int J = JointCount(data.num_actions);

  const json& P = ArrayOf(Field(j, "P"), H, "P");
  data.transitions.reserve(static_cast<std::size_t>(H) * S * J * S);
  for (int h = 0; h < H; ++h) {
    ArrayOf(P[h], S, "P[h]");
    for (int s = 0; s < S; ++s) {
      ArrayOf(P[h][s], J, "P[h][s]");
      for (int a = 0; a < J; ++a) {
        ArrayOf(P[h][s][a], S, "P[h][s][a]");
        for (int n = 0; n < S; ++n) {
          data.transitions.push_back(Number(P[h][s][a][n], "P entry"));
        }
      }
    }
  }
  const json& R = ArrayOf(Field(j, "R"), m, "R");
  data.rewards.reserve(static_cast<std::size_t>(m) * H * S * J);
  for (int i = 0; i < m; ++i) {
    ArrayOf(R[i], H, "R[i]");
    for (int h = 0; h < H; ++h) {
      ArrayOf(R[i][h], S, "R[i][h]");
      for (int s = 0; s < S; ++s) {
        ArrayOf(R[i][h][s], J, "R[i][h][s]");
        for (int a = 0; a < J; ++a) {
          data.rewards.push_back(Number(R[i][h][s][a], "R entry"));
        }
      }
    }
  }
  return data;
}

json GameToJson(const GameData& data) {
  const int H = data.horizon, S = data.num_states;
  const int m = static_cast<int>(data.num_actions.size());
  const int J = JointCount(data.num_actions);
  json P = json::array();
  std::size_t p = 0;
  for (int h = 0; h < H; ++h) {
    json layer = json::array();
    for (int s = 0; s < S; ++s) {
      json rows = json::array();
      for (int a = 0; a < J; ++a) {
        json row = json::array();
        for (int n = 0; n < S; ++n) row.push_back(data.transitions[p++]);
        rows.push_back(std::move(row));
      }
      layer.push_back(std::move(rows));
    }
    P.push_back(std::move(layer));
  }
  json R = json::array();
  std::size_t r = 0;
  for (int i = 0; i < m; ++i) {
    json player = json::array();
    for (int h = 0; h < H; ++h) {
      json layer = json::array();
      for (int s = 0; s < S; ++s) {
        json row = json::array();
        for (int a = 0; a < J; ++a) row.push_back(data.rewards[r++]);
        layer.push_back(std::move(row));
      }
      player.push_back(std::move(layer));
    }
    R.push_back(std::move(player));
  }
  return json{{"H", H},  {"S", S}, {"A", data.num_actions},
              {"s1", data.initial_state}, {"P", std::move(P)},
              {"R", std::move(R)}};
}

TabularMarkovGame GameFromSpec(const json& spec) {
  if (spec.is_object() && spec.contains("file")) {
    return TabularMarkovGame(
        GameDataFromJson(ReadJsonFile(spec.at("file").get<std::string>())));
  }
  if (spec.is_object() && spec.contains("generator")) {
    const std::string kind = spec.at("generator").get<std::string>();
    if (kind == "rps_sequential") {
      return TabularMarkovGame(MakeRpsSequential(PositiveInt(spec, "H")));
    }
    if (kind == "random") {
      const json& seed = Field(spec, "seed");
      if (!seed.is_number_integer()) {
        throw ConfigError("generator seed must be an integer");
      }
      return TabularMarkovGame(MakeRandomGame(
          PositiveInt(spec, "H"), PositiveInt(spec, "S"), ActionList(spec),
          seed.get<std::uint64_t>()));
    }
    throw ConfigError("unknown game generator \"" + kind + "\"");
  }
  return TabularMarkovGame(GameDataFromJson(spec));
}

json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void WriteJsonFile(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw ResourceError("cannot write " + path);
  out << j.dump(2) << "\n";
}

GameData MakeRpsSequential(int horizon) {
  if (horizon <= 0) throw ConfigError("rps_sequential: H must be positive");
  GameData data;
  data.horizon = horizon;
  data.num_states = 1;
  data.num_actions = {3, 3};
  data.initial_state = 0;
  data.transitions.assign(static_cast<std::size_t>(horizon) * 9, 1.0);
  data.rewards.resize(static_cast<std::size_t>(2) * horizon * 9);
  for (int h = 0; h < horizon; ++h) {
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        const int diff = (a - b + 3) % 3;
        const double r0 = diff == 0 ? 0.5 : (diff == 1 ? 1.0 : 0.0);
        data.rewards[h * 9 + a * 3 + b] = r0;
        data.rewards[(horizon + h) * 9 + a * 3 + b] = 1.0 - r0;
      }
    }
  }
  return data;
}

GameData MakeRandomGame(int horizon, int num_states,
                        const std::vector<int>& num_actions,
                        std::uint64_t seed) {
  if (horizon <= 0 || num_states <= 0 || num_actions.empty()) {
    throw ConfigError("random game: nonpositive dimension");
  }
  GameData data;
  data.horizon = horizon;
  data.num_states = num_states;
  data.num_actions = num_actions;
  data.initial_state = 0;
  const int J = JointCount(num_actions);
  const int m = static_cast<int>(num_actions.size());
  Rng rng(DeriveSeed(seed, 0x67616d65));
  data.transitions.resize(static_cast<std::size_t>(horizon) * num_states * J *
                          num_states);
  for (std::size_t row = 0; row < data.transitions.size();
       row += num_states) {
    double sum = 0.0;
    for (int n = 0; n < num_states; ++n) {
      // Exponential(1) draws normalized to a Dirichlet(1,...,1) row.
      const double e = -std::log1p(-rng.Uniform());
      data.transitions[row + n] = e;
      sum += e;
    }
    for (int n = 0; n < num_states; ++n) data.transitions[row + n] /= sum;
  }
  data.rewards.resize(static_cast<std::size_t>(m) * horizon * num_states * J);
  for (double& r : data.rewards) r = rng.Uniform();
  return data;
}

StagePolicy StagePolicyFromJson(const json& j, int player) {
  if (!j.is_array() || j.empty() || !j[0].is_array() || j[0].empty() ||
      !j[0][0].is_array() || j[0][0].empty()) {
    throw ConfigError("stage policy must be a nonempty [h][s][a] array");
  }
  const int H = static_cast<int>(j.size());
  const int S = static_cast<int>(j[0].size());
  const int A = static_cast<int>(j[0][0].size());
  std::vector<double> probs;
  for (int h = 0; h < H; ++h) {
    ArrayOf(j[h], S, "policy[h]");
    for (int s = 0; s < S; ++s) {
      ArrayOf(j[h][s], A, "policy[h][s]");
      for (int a = 0; a < A; ++a) {
        probs.push_back(Number(j[h][s][a], "policy entry"));
      }
    }
  }
  return StagePolicy(player, H, S, A, std::move(probs));
}

json StagePolicyToJson(const StagePolicy& policy) {
  json out = json::array();
  for (int h = 0; h < policy.Horizon(); ++h) {
    json layer = json::array();
    for (int s = 0; s < policy.NumStates(); ++s) {
      const auto row = policy.Row(h, s);
      layer.push_back(std::vector<double>(row.begin(), row.end()));
    }
    out.push_back(std::move(layer));
  }
  return out;
}

MarkovJointPolicy MarkovPolicyFromJson(const json& j) {
  const json& list = Field(j, "components");
  if (!list.is_array() || list.empty()) {
    throw ConfigError("\"components\" must be a nonempty array");
  }
  std::vector<MarkovJointPolicy::Component> components;
  for (const auto& c : list) {
    MarkovJointPolicy::Component comp;
    comp.weight = Number(Field(c, "weight"), "component weight");
    const json& players = Field(c, "players");
    if (!players.is_array() || players.empty()) {
      throw ConfigError("component \"players\" must be a nonempty array");
    }
    for (std::size_t i = 0; i < players.size(); ++i) {
      comp.players.push_back(
          StagePolicyFromJson(players[i], static_cast<int>(i)));
    }
    components.push_back(std::move(comp));
  }
  return MarkovJointPolicy(std::move(components));
}

json MarkovPolicyToJson(const MarkovJointPolicy& policy) {
  json list = json::array();
  for (const auto& c : policy.Components()) {
    json players = json::array();
    for (const auto& p : c.players) players.push_back(StagePolicyToJson(p));
    list.push_back({{"weight", c.weight}, {"players", std::move(players)}});
  }
  return json{{"components", std::move(list)}};
}

json JointTableToJson(const JointPolicyTable& table) {
  json joint = json::array();
  for (int h = 0; h < table.Horizon(); ++h) {
    json layer = json::array();
    for (int s = 0; s < table.NumStates(); ++s) {
      const auto row = table.JointRow(h, s);
      layer.push_back(std::vector<double>(row.begin(), row.end()));
    }
    joint.push_back(std::move(layer));
  }
  return json{{"H", table.Horizon()},
              {"S", table.NumStates()},
              {"A", table.ActionCounts()},
              {"joint", std::move(joint)}};
}

JointPolicyTable PolicyTableFromJson(const json& j) {
  if (j.is_object() && j.contains("components")) {
    return MarkovPolicyFromJson(j).ToTable();
  }
  const int H = PositiveInt(j, "H");
  const int S = PositiveInt(j, "S");
  const std::vector<int> A = ActionList(j);
  const int J = JointCount(A);
  const json& joint = ArrayOf(Field(j, "joint"), H, "joint");
  std::vector<double> probs;
  for (int h = 0; h < H; ++h) {
    ArrayOf(joint[h], S, "joint[h]");
    for (int s = 0; s < S; ++s) {
      ArrayOf(joint[h][s], J, "joint[h][s]");
      for (int a = 0; a < J; ++a) {
        probs.push_back(Number(joint[h][s][a], "joint entry"));
      }
    }
  }
  return JointPolicyTable(H, S, A, std::move(probs));
}

}  // namespace cce_forge
