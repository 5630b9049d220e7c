#include "stablegrad/kappa_json.hpp"

#include <fstream>

#include "stablegrad/error.hpp"

namespace stablegrad {

std::string to_string(BumpShape shape) {
  return shape == BumpShape::Indicator ? "indicator" : "smooth";
}

BumpShape bump_shape_from_string(const std::string& name) {
  if (name == "indicator") return BumpShape::Indicator;
  if (name == "smooth") return BumpShape::SmoothBump;
  throw Error(ErrorCode::ParseError, "unknown bump shape '" + name + "'");
}

nlohmann::ordered_json kappa_to_json(const KappaSpec& spec) {
  nlohmann::ordered_json j;
  if (const auto* c = std::get_if<Constant>(&spec)) {
    j["type"] = "constant";
    j["c"] = c->c;
  } else if (const auto* s = std::get_if<SinglePairBump>(&spec)) {
    j["type"] = "single_pair_bump";
    j["base"] = s->base;
    j["bump"] = to_string(s->bump);
    j["a"] = s->a;
    j["eps"] = s->eps;
  } else if (const auto* k = std::get_if<Cascade>(&spec)) {
    j["type"] = "cascade";
    j["base"] = k->base;
    j["bump"] = to_string(k->bump);
    j["A"] = k->A;
    j["eps"] = k->eps;
    j["levels"] = k->levels;
    if (k->scale != 1.0) j["scale"] = k->scale;
  } else {
    const auto& t = std::get<Tabulated>(spec);
    j["type"] = "tabulated";
    auto grid = nlohmann::ordered_json::array();
    for (const auto& [y, v] : t.grid) grid.push_back({y, v});
    j["grid"] = grid;
  }
  return j;
}

namespace {

double number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    throw Error(ErrorCode::ParseError, std::string("kappa spec needs numeric field '") + key + "'");
  return j.at(key).get<double>();
}

BumpShape shape(const nlohmann::json& j) {
  if (!j.contains("bump")) return BumpShape::Indicator;
  if (!j.at("bump").is_string()) throw Error(ErrorCode::ParseError, "'bump' must be a string");
  return bump_shape_from_string(j.at("bump").get<std::string>());
}

}  // namespace

KappaSpec kappa_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("type") || !j.at("type").is_string())
    throw Error(ErrorCode::ParseError, "kappa spec must be an object with a string 'type'");
  const auto type = j.at("type").get<std::string>();
  if (type == "constant") return Constant{number(j, "c")};
  if (type == "single_pair_bump")
    return SinglePairBump{number(j, "base"), shape(j), number(j, "a"), number(j, "eps")};
  if (type == "cascade") {
    Cascade c{number(j, "base"), shape(j), number(j, "A"), number(j, "eps"), 0, 1.0};
    if (!j.contains("levels") || !j.at("levels").is_number_integer())
      throw Error(ErrorCode::ParseError, "cascade needs integer field 'levels'");
    c.levels = j.at("levels").get<int>();
    if (j.contains("scale")) c.scale = number(j, "scale");
    return c;
  }
  if (type == "tabulated") {
    if (!j.contains("grid") || !j.at("grid").is_array())
      throw Error(ErrorCode::ParseError, "tabulated kappa needs array field 'grid'");
    Tabulated t;
    for (const auto& node : j.at("grid")) {
      if (!node.is_array() || node.size() != 2 || !node[0].is_number() || !node[1].is_number())
        throw Error(ErrorCode::ParseError, "grid entries must be [y, kappa] pairs");
      t.grid.emplace_back(node[0].get<double>(), node[1].get<double>());
    }
    return t;
  }
  throw Error(ErrorCode::ParseError, "unknown kappa type '" + type + "'");
}

KappaSpec load_kappa_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open kappa spec " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
  return kappa_from_json(j);
}

}  // namespace stablegrad
