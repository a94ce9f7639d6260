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

#include "cce_forge/harness.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "cce_forge/dopmd.h"
#include "cce_forge/errors.h"
#include "cce_forge/evaluation.h"
#include "cce_forge/game_io.h"
#include "cce_forge/linear.h"
#include "cce_forge/tabular.h"

namespace cce_forge {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

std::string Resolve(const std::string& path, const std::string& base_dir) {
  if (base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).string();
}

// Replaces {"file": path} with the file's parsed contents.
json Inline(const json& j, const std::string& base_dir) {
  if (j.is_object() && j.size() == 1 && j.contains("file")) {
    return ReadJsonFile(Resolve(j.at("file").get<std::string>(), base_dir));
  }
  return j;
}

template <typename T>
T Get(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("field \"") + key + "\" has the wrong type");
  }
}

void Require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

std::uint64_t Fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

// -- Config -------------------------------------------------------------------

ExperimentConfig ParseConfig(const json& j, const std::string& base_dir) {
  Require(j.is_object(), "config must be a JSON object");
  static const char* kKeys[] = {
      "game",         "algorithm",   "instantiation", "T",
      "budget_multiplier", "delta",  "knobs",         "features",
      "classes",      "dopmd_K",     "eval_every",    "n_mc",
      "max_episodes", "max_replays", "record_wall_time", "seeds",
      "out"};
  for (const auto& [key, value] : j.items()) {
    Require(std::find(std::begin(kKeys), std::end(kKeys), key) !=
                std::end(kKeys),
            "unknown config field \"" + key + "\"");
  }
  ExperimentConfig c;
  Require(j.contains("game"), "config needs a \"game\" field");
  c.game = Inline(j.at("game"), base_dir);
  c.algorithm = Get<std::string>(j, "algorithm", c.algorithm);
  Require(c.algorithm == "vlpr" || c.algorithm == "avlpr" ||
              c.algorithm == "dopmd",
          "algorithm must be vlpr, avlpr or dopmd");
  c.instantiation = Get<std::string>(j, "instantiation", c.instantiation);
  Require(c.instantiation == "tabular" || c.instantiation == "linear",
          "instantiation must be tabular or linear");
  c.T = Get<int>(j, "T", c.T);
  Require(c.T >= 1, "T must be positive");
  c.budget_multiplier = Get<double>(j, "budget_multiplier", c.budget_multiplier);
  Require(c.budget_multiplier > 0.0, "budget_multiplier must be positive");
  c.delta = Get<double>(j, "delta", c.delta);
  Require(c.delta > 0.0 && c.delta < 1.0, "delta must lie in (0, 1)");

  const json knobs = j.value("knobs", json::object());
  Require(knobs.is_object(), "knobs must be an object");
  static const char* kKnobs[] = {"c1",          "c2",           "eta_scale",
                                 "gamma_ratio", "lambda_scale", "ftpl_eta_scale",
                                 "bonus_c",     "bonus_c2",     "beta_c",
                                 "hedge_eta_scale", "value_n_mc"};
  for (const auto& [key, value] : knobs.items()) {
    Require(std::find(std::begin(kKnobs), std::end(kKnobs), key) !=
                std::end(kKnobs),
            "unknown knob \"" + key + "\"");
  }
  c.c1 = Get<double>(knobs, "c1", c.c1);
  c.c2 = Get<double>(knobs, "c2", c.c2);
  c.eta_scale = Get<double>(knobs, "eta_scale", c.eta_scale);
  c.gamma_ratio = Get<double>(knobs, "gamma_ratio", c.gamma_ratio);
  c.lambda_scale = Get<double>(knobs, "lambda_scale", c.lambda_scale);
  c.ftpl_eta_scale = Get<double>(knobs, "ftpl_eta_scale", c.ftpl_eta_scale);
  c.bonus_c = Get<double>(knobs, "bonus_c", c.bonus_c);
  c.bonus_c2 = Get<double>(knobs, "bonus_c2", c.bonus_c2);
  c.beta_c = Get<double>(knobs, "beta_c", c.beta_c);
  c.hedge_eta_scale = Get<double>(knobs, "hedge_eta_scale", c.hedge_eta_scale);
  c.value_n_mc = Get<int>(knobs, "value_n_mc", c.value_n_mc);
  Require(c.c1 >= 0 && c.c2 >= 0 && c.bonus_c >= 0 && c.bonus_c2 >= 0 &&
              c.gamma_ratio >= 0,
          "bonus constants must be nonnegative");
  Require(c.eta_scale > 0 && c.lambda_scale > 0 && c.ftpl_eta_scale > 0 &&
              c.beta_c > 0 && c.hedge_eta_scale >= 0 && c.value_n_mc >= 1,
          "scale knobs must be positive");

  if (j.contains("features")) c.features = Inline(j.at("features"), base_dir);
  if (j.contains("classes")) c.classes = Inline(j.at("classes"), base_dir);
  if (j.contains("dopmd_K")) {
    const json& k = j.at("dopmd_K");
    if (k.is_number_integer()) {
      c.dopmd_K = {k.get<int>()};
    } else {
      c.dopmd_K = Get<std::vector<int>>(j, "dopmd_K", {});
    }
    for (int x : c.dopmd_K) Require(x >= 1, "dopmd_K entries must be positive");
  }
  if (c.algorithm == "dopmd") {
    Require(!c.classes.is_null(), "dopmd needs a \"classes\" field");
    Require(!c.dopmd_K.empty(), "dopmd needs a \"dopmd_K\" field");
  }
  c.eval_every = Get<int>(j, "eval_every", c.eval_every);
  Require(c.eval_every >= 0, "eval_every must be nonnegative");
  c.n_mc = Get<int>(j, "n_mc", c.n_mc);
  Require(c.n_mc >= 1, "n_mc must be positive");
  c.max_episodes = Get<std::int64_t>(j, "max_episodes", c.max_episodes);
  Require(c.max_episodes >= 0, "max_episodes must be nonnegative");
  c.max_replays = Get<int>(j, "max_replays", c.max_replays);
  Require(c.max_replays >= 0, "max_replays must be nonnegative");
  c.record_wall_time = Get<bool>(j, "record_wall_time", c.record_wall_time);
  if (j.contains("seeds")) {
    c.seeds = Get<std::vector<std::uint64_t>>(j, "seeds", {});
    Require(!c.seeds.empty(), "seeds must be a nonempty list");
  }
  c.out = Get<std::string>(j, "out", c.out);
  return c;
}

ExperimentConfig LoadConfig(const std::string& path) {
  return ParseConfig(ReadJsonFile(path),
                     fs::path(path).parent_path().string());
}

json CanonicalConfig(const ExperimentConfig& c) {
  // nlohmann::json objects are key-sorted, so the dump is canonical.
  json j = {{"game", c.game},
            {"algorithm", c.algorithm},
            {"instantiation", c.instantiation},
            {"T", c.T},
            {"budget_multiplier", c.budget_multiplier},
            {"delta", c.delta},
            {"knobs",
             {{"c1", c.c1},
              {"c2", c.c2},
              {"eta_scale", c.eta_scale},
              {"gamma_ratio", c.gamma_ratio},
              {"lambda_scale", c.lambda_scale},
              {"ftpl_eta_scale", c.ftpl_eta_scale},
              {"bonus_c", c.bonus_c},
              {"bonus_c2", c.bonus_c2},
              {"beta_c", c.beta_c},
              {"hedge_eta_scale", c.hedge_eta_scale},
              {"value_n_mc", c.value_n_mc}}},
            {"eval_every", c.eval_every},
            {"n_mc", c.n_mc},
            {"max_episodes", c.max_episodes},
            {"max_replays", c.max_replays},
            {"record_wall_time", c.record_wall_time}};
  if (c.instantiation == "linear") j["features"] = c.features;
  if (c.algorithm == "dopmd") {
    j["classes"] = c.classes;
    j["dopmd_K"] = c.dopmd_K;
  }
  return j;
}

std::string ConfigHash(const ExperimentConfig& config) {
  return fmt::format("{:016x}", Fnv1a(CanonicalConfig(config).dump()));
}

// -- Runs ---------------------------------------------------------------------

namespace {

double LastEvaluatedGap(const RunTrace& trace) {
  for (auto it = trace.rows.rbegin(); it != trace.rows.rend(); ++it) {
    if (it->evaluated) return it->gap;
  }
  return std::nan("");
}

std::vector<double> QuarterGaps(const RunTrace& trace, bool first) {
  std::vector<double> gaps;
  if (trace.rows.empty()) return gaps;
  const int T = trace.rows.back().t;
  const int quarter = std::max(1, T / 4);
  for (const auto& r : trace.rows) {
    if (!r.evaluated) continue;
    if (first ? r.t <= quarter : r.t > T - quarter) gaps.push_back(r.gap);
  }
  return gaps;
}

}  // namespace

SeedOutcome RunSeed(const ExperimentConfig& config, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const TabularMarkovGame game = GameFromSpec(config.game);
  SeedOutcome out;
  out.seed = seed;
  spdlog::info("seed {}: {} / {} on H={} S={} m={}", seed, config.algorithm,
               config.instantiation, game.Horizon(), game.NumStates(),
               game.NumPlayers());
  if (config.algorithm == "dopmd") {
    const ClassSet classes = ClassesFromJson(config.classes, game);
    DopmdOptions options;
    options.T = config.T;
    options.K = config.dopmd_K.size() == 1
                    ? std::vector<int>(game.NumPlayers(), config.dopmd_K[0])
                    : config.dopmd_K;
    options.beta_c = config.beta_c;
    options.delta = config.delta;
    options.eta_scale = config.hedge_eta_scale;
    options.eval_every = config.eval_every;
    options.max_episodes = config.max_episodes;
    const DopmdResult r =
        RunDopmd(game, classes.functions, classes.policies, options, seed);
    out.trace = r.trace;
    out.episodes = r.episodes;
    out.output_gap = r.final_gap;
    out.final_gap = r.final_gap;
  } else {
    std::unique_ptr<SubroutineBundle> bundle;
    if (config.instantiation == "tabular") {
      TabularOptions t;
      t.delta = config.delta;
      t.c1 = config.c1;
      t.c2 = config.c2;
      t.eta_scale = config.eta_scale;
      t.gamma_ratio = config.gamma_ratio;
      bundle = std::make_unique<TabularBundle>(game, t);
    } else {
      LinearOptions l;
      l.delta = config.delta;
      l.lambda_scale = config.lambda_scale;
      l.eta_scale = config.ftpl_eta_scale;
      l.bonus_c = config.bonus_c;
      l.bonus_c2 = config.bonus_c2;
      l.n_mc = config.value_n_mc;
      bundle = std::make_unique<LinearBundle>(
          game, FeatureMap::FromJson(config.features, game), l);
    }
    VlprOptions options;
    options.T = config.T;
    options.budget_multiplier = config.budget_multiplier;
    options.eval_every = config.eval_every;
    options.n_mc = config.n_mc;
    options.max_episodes = config.max_episodes;
    options.max_replays = config.max_replays;
    const RunResult r = config.algorithm == "vlpr"
                            ? RunVlpr(game, *bundle, options, seed)
                            : RunAvlpr(game, *bundle, options, seed);
    out.trace = r.trace;
    out.episodes = r.episodes;
    out.output_index = r.output_index;
    out.replays = config.algorithm == "vlpr"
                      ? static_cast<int>(std::count_if(
                            r.trace.rows.begin(), r.trace.rows.end(),
                            [](const TraceRow& row) { return row.replay; }))
                      : static_cast<int>(r.trace.replays.size());
    out.output_gap = LearnedPolicyGap(
        game, *r.history[r.output_index], config.n_mc,
        DeriveSeed(seed, static_cast<std::uint64_t>(StreamTag::kOutput),
                   static_cast<std::uint64_t>(r.output_index)));
    out.final_gap = LastEvaluatedGap(r.trace);
  }
  out.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - start)
                    .count();
  spdlog::info("seed {}: final gap {}, {} episodes, {} replays", seed,
               out.final_gap, out.episodes, out.replays);
  return out;
}

std::string TraceCsv(const ExperimentConfig& config, const SeedOutcome& outcome) {
  std::string csv;
  csv += "# config_hash=" + ConfigHash(config) + "\n";
  csv += fmt::format("# seed={}\n", outcome.seed);
  csv += "# algorithm=" + config.algorithm;
  if (config.algorithm != "dopmd") csv += "/" + config.instantiation;
  csv += "\n";
  csv += fmt::format("# truncated={}\n", outcome.trace.truncated ? 1 : 0);
  csv += "t,gap,episodes,replay,ms\n";
  for (const auto& r : outcome.trace.rows) {
    csv += fmt::format("{},{},{},{},{}\n", r.t,
                       r.evaluated ? fmt::format("{}", r.gap) : std::string(),
                       r.episodes, r.replay ? 1 : 0,
                       config.record_wall_time ? fmt::format("{:.3f}", r.ms)
                                               : std::string("0"));
  }
  return csv;
}

ParsedTrace ParseTraceCsv(const std::string& text) {
  ParsedTrace out;
  std::istringstream in(text);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 1);
      if (key == "config_hash") out.config_hash = value;
      if (key == "seed") out.seed = std::stoull(value);
      if (key == "truncated") out.truncated = value == "1";
      continue;
    }
    if (!header_seen) {
      if (line != "t,gap,episodes,replay,ms") {
        throw ConfigError("trace CSV: unexpected header \"" + line + "\"");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    if (cells.size() != 5) throw ConfigError("trace CSV: bad row \"" + line + "\"");
    TraceRow row;
    row.t = std::stoi(cells[0]);
    row.evaluated = !cells[1].empty();
    if (row.evaluated) row.gap = std::stod(cells[1]);
    row.episodes = std::stoll(cells[2]);
    row.replay = cells[3] == "1";
    row.ms = std::stod(cells[4]);
    out.rows.push_back(row);
  }
  if (!header_seen) throw ConfigError("trace CSV: missing header");
  return out;
}

double Quantile(std::vector<double> data, double q) {
  if (data.empty()) return std::nan("");
  std::sort(data.begin(), data.end());
  const double pos = q * (data.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, data.size() - 1);
  return data[lo] + (pos - lo) * (data[hi] - data[lo]);
}

double Median(std::vector<double> data) { return Quantile(std::move(data), 0.5); }

double FirstQuarterMedianGap(const RunTrace& trace) {
  return Median(QuarterGaps(trace, true));
}

double FinalQuarterMedianGap(const RunTrace& trace) {
  return Median(QuarterGaps(trace, false));
}

json RunExperiment(const ExperimentConfig& config, int jobs) {
  // Fail fast on an unusable game before any worker starts.
  GameFromSpec(config.game);
  const std::size_t n = config.seeds.size();
  std::vector<SeedOutcome> outcomes(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < n; k = next++) {
      try {
        outcomes[k] = RunSeed(config, config.seeds[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  const int workers = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  fs::create_directories(config.out);
  json per_seed = json::array();
  std::vector<double> finals;
  std::int64_t total_episodes = 0;
  int total_replays = 0;
  bool any_truncated = false;
  for (const auto& o : outcomes) {
    const fs::path path = fs::path(config.out) / fmt::format("trace_seed_{}.csv", o.seed);
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ResourceError("cannot write " + path.string());
    file << TraceCsv(config, o);
    finals.push_back(o.final_gap);
    total_episodes += o.episodes;
    total_replays += o.replays;
    any_truncated = any_truncated || o.trace.truncated;
    per_seed.push_back({{"seed", o.seed},
                        {"final_gap", o.final_gap},
                        {"output_gap", o.output_gap},
                        {"output_index", o.output_index},
                        {"first_quarter_median_gap", FirstQuarterMedianGap(o.trace)},
                        {"final_quarter_median_gap", FinalQuarterMedianGap(o.trace)},
                        {"episodes", o.episodes},
                        {"replays", o.replays},
                        {"suppressed_replays", o.trace.suppressed_replays},
                        {"truncated", o.trace.truncated},
                        {"truncation_reason", o.trace.truncation_reason},
                        {"mc_resolution", o.trace.mc_resolution}});
    if (config.record_wall_time) per_seed.back()["wall_ms"] = o.wall_ms;
  }
  json summary = {{"config_hash", ConfigHash(config)},
                  {"algorithm", config.algorithm},
                  {"instantiation", config.instantiation},
                  {"T", config.T},
                  {"seeds", config.seeds},
                  {"final_gap",
                   {{"median", Median(finals)},
                    {"q1", Quantile(finals, 0.25)},
                    {"q3", Quantile(finals, 0.75)}}},
                  {"total_episodes", total_episodes},
                  {"replay_count", total_replays},
                  {"truncated", any_truncated},
                  {"per_seed", per_seed}};
  WriteJsonFile((fs::path(config.out) / "summary.json").string(), summary);
  return summary;
}

// -- Game verification --------------------------------------------------------

GameReport VerifyGame(const json& game_json) {
  GameReport report;
  GameData data;
  try {
    data = GameDataFromJson(game_json);
  } catch (const ConfigError& e) {
    report.issues.push_back(e.what());
    return report;
  }
  report.issues = ValidateGameData(data);
  report.ok = report.issues.empty();
  double rmin = 1.0, rmax = 0.0;
  for (double r : data.rewards) {
    rmin = std::min(rmin, r);
    rmax = std::max(rmax, r);
  }
  long long joint = 1;
  for (int a : data.num_actions) joint *= a;
  report.summary = {{"H", data.horizon},
                    {"S", data.num_states},
                    {"A", data.num_actions},
                    {"joint_actions", joint},
                    {"s1", data.initial_state},
                    {"reward_min", rmin},
                    {"reward_max", rmax}};
  return report;
}

GameReport VerifyGameFile(const std::string& path) {
  try {
    return VerifyGame(ReadJsonFile(path));
  } catch (const ConfigError& e) {
    GameReport report;
    report.issues.push_back(e.what());
    return report;
  }
}

void ConfigureLogging() {
  auto logger = spdlog::get("cce_forge");
  if (!logger) logger = spdlog::stderr_color_mt("cce_forge");
  spdlog::set_default_logger(logger);
  const char* env = std::getenv("CCE_FORGE_LOG");
  const std::string level = env ? env : "error";
  if (level == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else if (level == "info") {
    spdlog::set_level(spdlog::level::info);
  } else {
    spdlog::set_level(spdlog::level::err);
  }
}

}  // namespace cce_forge
