#pragma once

#include "dsbo/runner.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>

namespace dsbo::config {

/// Run configuration file: a JSON object with sections problem, topology,
/// strategy, estimator, schedules, envelope, runner. Unknown keys and type
/// errors throw Error(config_error) with a "line N:" prefix naming the key.
runner::RunConfig parse_run_config(const std::string& text);
runner::RunConfig load_run_config(const std::filesystem::path& path);

/// Complete echo of a config; parse_run_config(dump(to_json(c))) reruns it
/// identically.
nlohmann::json to_json(const runner::RunConfig& cfg);

/// Grid file: {"n": [...], "topology": [{...}], "p": [...], "gamma": [...],
/// "strategy": [...], "seeds": [...] | "replicates": R}.
runner::Grid parse_grid(const std::string& text, std::uint64_t base_seed);
runner::Grid load_grid(const std::filesystem::path& path, std::uint64_t base_seed);

runner::TopologySpec parse_topology(const nlohmann::json& j, const std::string& where = "topology");
nlohmann::json to_json(const runner::TopologySpec& t);

std::string read_file(const std::filesystem::path& path);

}  // namespace dsbo::config
