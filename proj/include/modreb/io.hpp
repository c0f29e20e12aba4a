#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "modreb/mincostflow.hpp"
#include "modreb/network.hpp"
#include "modreb/rebalancer.hpp"

namespace modreb {

using Json = nlohmann::json;

// Instance files: {"n", "lambda", "mu", "p", "T", "f", "meta": {"seed", "generator_config"}}.
// Matrices are row-major arrays of rows; a flat n*n array is also accepted on
// input, and "f" may be a scalar that is broadcast to every pair.

Json instance_to_json(const StationNetwork& net);
/// Parses and validates; throws ValidationError naming the offending field.
StationNetwork instance_from_json(const Json& doc);

void save_instance(const std::filesystem::path& path, const StationNetwork& net);
StationNetwork load_instance(const std::filesystem::path& path);

// Assignment files: {"alpha", "beta", "v_alpha", "r_alpha_beta", "objective_alpha",
// "objective_beta", "status", "meta"}.

Json assignment_to_json(const RebalanceSolution& solution, const Json& meta = Json::object());
/// Structural parse only; use validate(assignment, net) to check it against an instance.
RebalanceSolution assignment_from_json(const Json& doc);

void save_assignment(const std::filesystem::path& path, const RebalanceSolution& solution,
                     const Json& meta = Json::object());
RebalanceSolution load_assignment(const std::filesystem::path& path);

/// Debug dump of a flow problem and (optionally) its solution, assignment-file style plus "arcs".
Json flow_debug_json(const FlowProblem& problem, const FlowSolution* solution = nullptr);

Json to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const Json& doc);

/// Writes `text` to `path`, creating parent directories. Throws std::runtime_error on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
Json read_json(const std::filesystem::path& path);

}  // namespace modreb
