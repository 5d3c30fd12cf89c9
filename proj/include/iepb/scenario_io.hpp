#pragma once

#include <string>

#include <json.hpp>

#include "iepb/sim.hpp"

namespace iepb {

/// Full parameter echo of a scenario, suitable for re-loading.
nlohmann::json scenario_to_json(const ScenarioSpec& spec);

/// Strict parse: every key must exist in the schema (unknown keys throw
/// std::invalid_argument naming the offending key path); missing keys keep
/// their defaults.
ScenarioSpec scenario_from_json(const nlohmann::json& j);

/// Reads and parses a scenario file. Throws std::invalid_argument on I/O
/// or parse failure.
ScenarioSpec load_scenario(const std::string& path);

/// Applies a dotted-path override of the form "group.key=value"
/// (e.g. "vehicle.mass_kg=1800" or "controller=pid"). The path must name
/// an existing scalar; throws std::invalid_argument otherwise.
void apply_override(ScenarioSpec& spec, const std::string& assignment);

}  // namespace iepb
