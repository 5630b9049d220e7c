#include "stablegrad/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "stablegrad/error.hpp"
#include "stablegrad/kappa_json.hpp"

namespace stablegrad {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void dump_string(std::ostringstream& os, const std::string& s) {
  os << Json(s).dump();
}

void dump_value(std::ostringstream& os, const Json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << pad;
        dump_string(os, it.key());
        os << ": ";
        dump_value(os, it.value(), indent + 2);
      }
      os << "\n" << close << "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << pad;
        dump_value(os, j[i], indent + 2);
      }
      os << "\n" << close << "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        os << "null";
        return;
      }
      std::string s = format_double(v);
      if (s.find_first_of(".en") == std::string::npos) s += ".0";
      os << s;
      return;
    }
    default: os << j.dump(); return;
  }
}

Json optional_number(const std::optional<double>& v) {
  return v ? Json(*v) : Json(nullptr);
}

}  // namespace

std::string dump_json(const Json& j) {
  std::ostringstream os;
  dump_value(os, j, 0);
  os << "\n";
  return os.str();
}

void write_atomic(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoFailure, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw Error(ErrorCode::IoFailure, "write to " + tmp.string() + " failed");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::IoFailure, "cannot move output into place at " + path.string());
  }
}

std::string dump_csv(const CsvTable& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

Json to_json(const CounterexampleConfig& c) {
  Json j;
  j["alpha"] = c.alpha.value();
  j["z0"] = c.z0;
  j["eps"] = c.eps;
  j["bump"] = to_string(c.bump);
  j["A"] = c.A;
  j["levels"] = c.levels;
  j["seed"] = c.seed;
  j["mc_samples"] = c.mc_samples;
  j["fourier_limit"] = c.fourier_limit;
  return j;
}

Json to_json(const JDecomposition& d) {
  Json j;
  j["x"] = d.x;
  j["J0"] = d.J0;
  j["J1"] = d.J1;
  j["J1_plus"] = d.J1_plus;
  j["J1_minus"] = d.J1_minus;
  j["J2"] = d.J2;
  j["total"] = d.total();
  j["abs_error"] = d.abs_error;
  return j;
}

Json to_json(const MonteCarloEstimate& mc) { return Json::array({mc.estimate, mc.std_error}); }

Json to_json(const GammaEstimate& g) {
  Json j;
  j["gamma"] = g.gamma;
  j["A_valid"] = g.A_valid;
  j["sup_gradient"] = g.sup_gradient;
  Json probes = Json::array();
  for (const auto& p : g.probes) probes.push_back(Json{{"A", p.A}, {"sup_weighted", p.sup_weighted}});
  j["probes"] = probes;
  return j;
}

Json to_json(const LevelRecord& r) {
  Json j;
  j["k"] = r.k;
  j["A_k"] = r.A_k;
  j["x"] = r.x;
  j["gradient"] = r.gradient;
  j["ratio"] = r.ratio;
  j["baseline_ratio"] = r.baseline_ratio;
  Json routes;
  routes["series"] = r.routes.series;
  routes["fourier"] = optional_number(r.routes.fourier);
  routes["mc"] = r.routes.mc ? to_json(*r.routes.mc) : Json(nullptr);
  j["routes"] = routes;
  j["abs_error"] = r.abs_error;
  j["baseline_gradient"] = r.baseline_gradient;
  j["weighted"] = r.weighted;
  j["lower_shape"] = r.lower_shape;
  j["margin"] = r.margin;
  j["j"] = r.j ? to_json(*r.j) : Json(nullptr);
  j["pass"] = r.pass;
  return j;
}

Json to_json(const LowerBoundReport& rep) {
  Json j;
  j["config"] = to_json(rep.config);
  Json levels = Json::array();
  for (const auto& r : rep.levels) levels.push_back(to_json(r));
  j["levels"] = levels;
  const auto& c = rep.constants;
  Json k;
  k["delta"] = c.delta;
  k["gamma"] = c.gamma;
  k["lambda"] = c.lambda;
  k["lambda_tilde_bound"] = c.lambda_tilde_bound;
  k["threshold_a"] = c.threshold_a;
  k["A_valid"] = c.A_valid;
  k["lambda0"] = c.lambda0;
  k["lambda_tilde"] = c.lambda_tilde;
  k["lambda_tilde_first"] = c.lambda_tilde_first;
  k["M"] = c.M;
  k["tail_allowance"] = c.tail_allowance;
  k["c_floor"] = c.c_floor;
  j["constants"] = k;
  j["pass"] = rep.pass;
  j["kind"] = rep.kind;
  j["notes"] = rep.notes;
  return j;
}

Json to_json(const Es1Report& r) {
  Json j;
  j["delta"] = r.delta;
  j["lambda"] = r.lambda;
  j["lambda0"] = r.lambda0;
  j["in_regime"] = r.in_regime;
  j["min_gradient"] = r.min_gradient;
  j["argmin"] = r.argmin;
  j["margin"] = r.margin;
  j["points"] = r.points;
  j["pass"] = r.pass;
  return j;
}

Json to_json(const Es2Report& r) {
  Json j;
  j["A"] = r.A;
  j["lambda"] = r.lambda;
  j["gamma"] = r.gamma;
  j["split_discrepancy"] = r.split_discrepancy;
  Json pts = Json::array();
  for (const auto& p : r.points) {
    pts.push_back(Json{{"x", p.x},
                       {"gradient", p.gradient},
                       {"weighted", p.weighted},
                       {"low", p.low},
                       {"high", p.high},
                       {"full", p.full}});
  }
  j["points"] = pts;
  j["pass"] = r.pass;
  return j;
}

}  // namespace stablegrad
