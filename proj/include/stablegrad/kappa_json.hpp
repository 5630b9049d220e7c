#pragma once

// JSON form of KappaSpec, the CLI ingestion format:
//   {"type": "constant", "c": 1}
//   {"type": "single_pair_bump", "base": 1, "bump": "indicator", "a": 50, "eps": 0.2}
//   {"type": "cascade", "base": 1, "bump": "indicator", "A": 10, "eps": 0.25, "levels": 2}
//   {"type": "tabulated", "grid": [[0, 1.0], [5, 1.5], ...]}
// "bump" is "indicator" (default) or "smooth"; cascade accepts an optional "scale".

#include <filesystem>
#include <string>

#include "json.hpp"
#include "stablegrad/symbol.hpp"

namespace stablegrad {

nlohmann::ordered_json kappa_to_json(const KappaSpec& spec);
/// Throws Error(ParseError) on malformed input.
KappaSpec kappa_from_json(const nlohmann::json& j);
KappaSpec load_kappa_spec(const std::filesystem::path& path);

std::string to_string(BumpShape shape);
BumpShape bump_shape_from_string(const std::string& name);

}  // namespace stablegrad
