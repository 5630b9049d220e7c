#pragma once

// Bit-stable serialization of results: JSON with fixed key order and CSV,
// both with 17 significant digits, written atomically.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "stablegrad/counterexample.hpp"
#include "stablegrad/perturb.hpp"

namespace stablegrad {

using Json = nlohmann::ordered_json;

/// %.17g; nan and infinities as "nan", "inf", "-inf".
std::string format_double(double v);
/// Two-space indented JSON; doubles via format_double (non-finite as null).
std::string dump_json(const Json& j);

/// Writes to a sibling temporary and renames it over `path`. Throws IoFailure.
void write_atomic(const std::filesystem::path& path, std::string_view content);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
std::string dump_csv(const CsvTable& table);

Json to_json(const CounterexampleConfig& config);
Json to_json(const JDecomposition& j);
Json to_json(const MonteCarloEstimate& mc);
Json to_json(const GammaEstimate& g);
Json to_json(const LevelRecord& r);
Json to_json(const LowerBoundReport& report);
Json to_json(const Es1Report& report);
Json to_json(const Es2Report& report);

}  // namespace stablegrad
