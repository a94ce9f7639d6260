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

#ifndef CCE_FORGE_HARNESS_H_
#define CCE_FORGE_HARNESS_H_

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

#include "cce_forge/vlpr.h"

namespace cce_forge {

// Parsed experiment configuration, defaults filled in.
struct ExperimentConfig {
  nlohmann::json game;  // generator spec or inline game (files are inlined)
  std::string algorithm = "avlpr";       // vlpr | avlpr | dopmd
  std::string instantiation = "tabular";  // tabular | linear
  int T = 100;
  double budget_multiplier = 1.0;
  double delta = 0.05;
  // Constant knobs.
  double c1 = 1.0;
  double c2 = 1.0;
  double eta_scale = 1.0;
  double gamma_ratio = 0.5;
  double lambda_scale = 1.0;
  double ftpl_eta_scale = 1.0;
  double bonus_c = 1.0;
  double bonus_c2 = 1.0;
  double beta_c = 1.0;
  double hedge_eta_scale = 1.0;
  int value_n_mc = 1000;
  nlohmann::json features = {{"kind", "one_hot"}};
  nlohmann::json classes;  // dopmd only
  std::vector<int> dopmd_K;
  int eval_every = 10;
  int n_mc = 10000;
  std::int64_t max_episodes = 0;
  int max_replays = 0;
  bool record_wall_time = false;
  std::vector<std::uint64_t> seeds = {0};
  std::string out = "out";
};

// Throws ConfigError listing the offending field. Relative file paths in
// the config are resolved against `base_dir`.
ExperimentConfig ParseConfig(const nlohmann::json& j,
                             const std::string& base_dir = "");
ExperimentConfig LoadConfig(const std::string& path);

// The semantic fields only (no seeds, output directory or job count), in
// canonical key order.
nlohmann::json CanonicalConfig(const ExperimentConfig& config);
// FNV-1a 64 over the canonical dump, as 16 hex digits.
std::string ConfigHash(const ExperimentConfig& config);

struct SeedOutcome {
  std::uint64_t seed = 0;
  RunTrace trace;
  std::int64_t episodes = 0;
  int replays = 0;
  int output_index = 0;
  double output_gap = 0.0;  // gap of the returned pi^out (or Lambda-bar)
  double final_gap = 0.0;   // last evaluated trace gap
  double wall_ms = 0.0;
};

// One seed of the configured algorithm; no files written.
SeedOutcome RunSeed(const ExperimentConfig& config, std::uint64_t seed);

// Trace CSV: '#' header lines (config_hash, seed, algorithm, truncated),
// then "t,gap,episodes,replay,ms". gap is empty for rows that were not
// evaluated; ms is 0 unless record_wall_time is set.
std::string TraceCsv(const ExperimentConfig& config, const SeedOutcome& outcome);

struct ParsedTrace {
  std::string config_hash;
  std::uint64_t seed = 0;
  bool truncated = false;
  std::vector<TraceRow> rows;
};
ParsedTrace ParseTraceCsv(const std::string& text);

// Runs every seed (in parallel across `jobs` workers), writes
// trace_seed_<seed>.csv per seed and summary.json into config.out, and
// returns the summary.
nlohmann::json RunExperiment(const ExperimentConfig& config, int jobs = 1);

// Game validation report for verify-game.
struct GameReport {
  bool ok = false;
  std::vector<std::string> issues;
  nlohmann::json summary;
};
GameReport VerifyGame(const nlohmann::json& game_json);
GameReport VerifyGameFile(const std::string& path);

// Linear-interpolated quantile of unsorted data; q in [0, 1].
double Quantile(std::vector<double> data, double q);
double Median(std::vector<double> data);

// Median gap over the evaluated rows whose t lies in the first / last
// quarter of [1, T_completed].
double FirstQuarterMedianGap(const RunTrace& trace);
double FinalQuarterMedianGap(const RunTrace& trace);

// Reads CCE_FORGE_LOG (error | info | debug) and configures logging.
void ConfigureLogging();

}  // namespace cce_forge

#endif  // CCE_FORGE_HARNESS_H_
