#pragma once

#include "fjsteer/simulator.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace fjsteer {

/// Scenario file schema (JSON):
///
///   name       string
///   community  {subjects, agents, stubborn: [ids]}
///   opinions   [[o_1..o_n] per agent, ids 1..N in order]
///   graph      {kind: "static"|"layered", edges: [{agent, neighbors: [ids]}], layers: [[ids]]}
///              {kind: "random", out_degree, allow_stubborn_prob, require_reachability}
///   weights    {mode: "fixed", default_lambda, agents: [{agent, lambda, weights: {"id": w}}]}
///              {mode: "reward", initial_lambda}
///   utility    {kind: "gaussian", mean: [..], cov_scale} | {kind: "grid", file}
///   run        {horizon, epsilon, seed, stop_on_convergence}
///
/// Missing optional keys take the defaults of the corresponding structs.
ScenarioConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Reads and parses a scenario file; relative paths inside it resolve
/// against the file's directory.
ScenarioConfig load_config(const std::filesystem::path& file);

nlohmann::json to_json(const ScenarioConfig& config);

void save_config(const ScenarioConfig& config, const std::filesystem::path& file);

// ---------------------------------------------------------------------------
// Reports

nlohmann::json to_json(const AnalysisSnapshot& analysis, const Community& community);
nlohmann::json to_json(const RunReport& report, const Community& community);
nlohmann::json to_json(const MonteCarloSummary& summary, const Community& community);

// ---------------------------------------------------------------------------
// Built-in scenarios

std::vector<std::string> builtin_names();

/// "dnn57", "irreducible100" or "random-tv"; throws InvalidInput otherwise.
ScenarioConfig builtin_scenario(const std::string& name);

/// Replaces reward-driven weights by fixed uniform weights with bias `lambda`
/// for every regular agent.
ScenarioConfig with_fixed_lambda(ScenarioConfig config, double lambda);

}  // namespace fjsteer
