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

// Command-line front end: run, verify-game, gen-game, eval-policy.

#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "cce_forge/errors.h"
#include "cce_forge/evaluation.h"
#include "cce_forge/game_io.h"
#include "cce_forge/harness.h"

namespace {

using nlohmann::json;

int ReportError(const char* type, const std::string& message) {
  std::cout << json{{"error", {{"type", type}, {"message", message}}}}.dump()
            << std::endl;
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace cce_forge;
  CLI::App app{"Equilibrium learning for finite-horizon Markov games"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "run an experiment config");
  std::string config_path;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  int eval_every = -1;
  int jobs = 1;
  run->add_option("--config", config_path, "experiment config JSON")->required();
  run->add_option("--seed", seeds, "seed (repeatable; overrides the config)");
  run->add_option("--out", out_dir, "output directory");
  run->add_option("--eval-every", eval_every, "evaluation period E");
  run->add_option("--jobs", jobs, "parallel seed workers")->check(CLI::PositiveNumber);

  auto* verify = app.add_subcommand("verify-game", "check a game file");
  std::string verify_path;
  verify->add_option("path", verify_path, "game JSON")->required();

  auto* gen = app.add_subcommand("gen-game", "write a generated game");
  std::string generator = "random";
  int gen_h = 2, gen_s = 3;
  std::vector<int> gen_a = {2, 2};
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--generator", generator, "random | rps_sequential")
      ->check(CLI::IsMember({"random", "rps_sequential"}));
  gen->add_option("--H", gen_h, "horizon")->check(CLI::PositiveNumber);
  gen->add_option("--S", gen_s, "states")->check(CLI::PositiveNumber);
  gen->add_option("--A", gen_a, "actions per player");
  gen->add_option("--seed", gen_seed, "generator seed");
  gen->add_option("--out", gen_out, "output path (stdout if omitted)");

  auto* eval = app.add_subcommand("eval-policy", "exact value and CCE gap");
  std::string eval_game, eval_policy;
  eval->add_option("--game", eval_game, "game JSON")->required();
  eval->add_option("--policy", eval_policy, "policy JSON")->required();

  CLI11_PARSE(app, argc, argv);
  ConfigureLogging();

  try {
    if (*run) {
      ExperimentConfig config = LoadConfig(config_path);
      if (!seeds.empty()) config.seeds = seeds;
      if (!out_dir.empty()) config.out = out_dir;
      if (eval_every >= 0) config.eval_every = eval_every;
      const json summary = RunExperiment(config, jobs);
      std::cout << summary.dump(2) << std::endl;
      return 0;
    }
    if (*verify) {
      const GameReport report = VerifyGameFile(verify_path);
      std::cout << json{{"ok", report.ok},
                        {"issues", report.issues},
                        {"summary", report.summary}}
                       .dump(2)
                << std::endl;
      return report.ok ? 0 : 1;
    }
    if (*gen) {
      const GameData data = generator == "random"
                                ? MakeRandomGame(gen_h, gen_s, gen_a, gen_seed)
                                : MakeRpsSequential(gen_h);
      // Constructing the game validates the generated data.
      TabularMarkovGame checked(data);
      const json j = GameToJson(data);
      if (gen_out.empty()) {
        std::cout << j.dump() << std::endl;
      } else {
        WriteJsonFile(gen_out, j);
      }
      return 0;
    }
    if (*eval) {
      const TabularMarkovGame game = GameFromSpec(ReadJsonFile(eval_game));
      const JointPolicyTable table = PolicyTableFromJson(ReadJsonFile(eval_policy));
      const GapReport report = CceGapReport(game, table);
      std::cout << json{{"exact_value", report.values},
                        {"best_response_value", report.best_responses},
                        {"cce_gap", report.gap}}
                       .dump(2)
                << std::endl;
      return 0;
    }
  } catch (const ConfigError& e) {
    return ReportError("config", e.what());
  } catch (const ResourceError& e) {
    return ReportError("resource", e.what());
  } catch (const ContractViolation& e) {
    return ReportError("contract", e.what());
  } catch (const InvariantViolation& e) {
    return ReportError("invariant", e.what());
  } catch (const std::exception& e) {
    return ReportError("internal", e.what());
  }
  return 0;
}
