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

#include "cce_forge/game.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cce_forge/errors.h"

namespace cce_forge {

std::vector<int> JointStrides(std::span<const int> num_actions) {
  std::vector<int> strides(num_actions.size(), 1);
  for (int i = static_cast<int>(num_actions.size()) - 2; i >= 0; --i) {
    strides[i] = strides[i + 1] * num_actions[i + 1];
  }
  return strides;
}

std::vector<std::string> ValidateGameData(const GameData& data) {
  std::vector<std::string> issues;
  auto issue = [&issues](const std::string& message) {
    issues.push_back(message);
  };
  if (data.horizon <= 0) issue("H must be positive");
  if (data.num_states <= 0) issue("S must be positive");
  if (data.num_actions.empty()) issue("A must list at least one player");
  long long joint = 1;
  for (std::size_t i = 0; i < data.num_actions.size(); ++i) {
    if (data.num_actions[i] <= 0) {
      std::ostringstream os;
      os << "A[" << i << "] must be positive";
      issue(os.str());
    }
    joint *= std::max(data.num_actions[i], 1);
  }
  if (joint > (1 << 24)) issue("joint action space too large");
  if (!issues.empty()) return issues;
  if (data.initial_state < 0 || data.initial_state >= data.num_states) {
    issue("s1 out of range");
  }

  const std::size_t H = data.horizon, S = data.num_states, J = joint,
                    m = data.num_actions.size();
  if (data.transitions.size() != H * S * J * S) {
    std::ostringstream os;
    os << "P has " << data.transitions.size() << " entries, expected "
       << H * S * J * S;
    issue(os.str());
  } else {
    for (std::size_t h = 0; h < H; ++h) {
      for (std::size_t s = 0; s < S; ++s) {
        for (std::size_t a = 0; a < J; ++a) {
          const double* row = &data.transitions[((h * S + s) * J + a) * S];
          double sum = 0.0;
          bool negative = false, finite = true;
          for (std::size_t n = 0; n < S; ++n) {
            if (!std::isfinite(row[n])) finite = false;
            if (row[n] < 0.0) negative = true;
            sum += row[n];
          }
          std::ostringstream where;
          where << "(h=" << h << ", s=" << s << ", a=" << a << ")";
          if (!finite) issue("transition row " + where.str() + " not finite");
          if (negative) {
            issue("transition row " + where.str() + " has a negative entry");
          }
          if (finite && std::abs(sum - 1.0) > kRowSumTolerance) {
            std::ostringstream os;
            os.precision(17);
            os << "transition row " << where.str() << " sums to " << sum;
            issue(os.str());
          }
        }
      }
    }
  }
  if (data.rewards.size() != m * H * S * J) {
    std::ostringstream os;
    os << "R has " << data.rewards.size() << " entries, expected "
       << m * H * S * J;
    issue(os.str());
  } else {
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t s = 0; s < S; ++s) {
          for (std::size_t a = 0; a < J; ++a) {
            const double r = data.rewards[((i * H + h) * S + s) * J + a];
            if (!(r >= 0.0 && r <= 1.0)) {
              std::ostringstream os;
              os << "reward (i=" << i << ", h=" << h << ", s=" << s
                 << ", a=" << a << ") = " << r << " outside [0,1]";
              issue(os.str());
            }
          }
        }
      }
    }
  }
  return issues;
}

TabularMarkovGame::TabularMarkovGame(GameData data) : data_(std::move(data)) {
  const auto issues = ValidateGameData(data_);
  if (!issues.empty()) {
    std::string message = "invalid game:";
    for (const auto& line : issues) message += "\n  " + line;
    throw ConfigError(message);
  }
  strides_ = JointStrides(data_.num_actions);
  num_joint_ = strides_[0] * data_.num_actions[0];
}

int TabularMarkovGame::MaxActions() const {
  return *std::max_element(data_.num_actions.begin(), data_.num_actions.end());
}

int TabularMarkovGame::JointIndex(std::span<const int> actions) const {
  int joint = 0;
  for (int i = 0; i < NumPlayers(); ++i) joint += actions[i] * strides_[i];
  return joint;
}

void TabularMarkovGame::DecodeJoint(int joint, std::span<int> actions) const {
  for (int i = 0; i < NumPlayers(); ++i) actions[i] = PlayerAction(joint, i);
}

}  // namespace cce_forge
