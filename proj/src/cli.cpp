#include "stablegrad/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "stablegrad/counterexample.hpp"
#include "stablegrad/error.hpp"
#include "stablegrad/kappa_json.hpp"
#include "stablegrad/kernel.hpp"
#include "stablegrad/perturb.hpp"
#include "stablegrad/report.hpp"

namespace stablegrad::cli {

namespace {

double parse_number(std::string_view s, const std::string& what) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end)
    throw Error(ErrorCode::InvalidArgument, "cannot parse " + what + " '" + std::string(s) + "'");
  return v;
}

std::vector<double> parse_list(const std::string& s, const std::string& what) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= s.size() && !s.empty()) {
    const auto comma = s.find(',', pos);
    const auto piece = s.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    out.push_back(parse_number(piece, what));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

struct Common {
  double alpha = 1.0;
  std::string kappa_path;
  double t = 1.0;
  std::string out_path;
  std::string format;
  std::uint64_t seed = 0;
  std::optional<double> tolerance;
  std::string grid;
};

void add_common(CLI::App* app, Common& c, bool with_grid) {
  app->add_option("--alpha", c.alpha, "stability index, 0 < alpha < 2");
  app->add_option("--kappa", c.kappa_path, "path to a kappa spec JSON file");
  app->add_option("--t", c.t, "time t > 0");
  app->add_option("--out", c.out_path, "output path (stdout when omitted)");
  app->add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--seed", c.seed, "random seed (default 0)");
  app->add_option("--tolerance", c.tolerance, "absolute error target");
  if (with_grid) app->add_option("--x-grid", c.grid, "start:stop:step");
}

KappaSpec load_or_default(const Common& c, const KappaSpec& fallback) {
  return c.kappa_path.empty() ? fallback : load_kappa_spec(c.kappa_path);
}

void require_t(double t) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw Error(ErrorCode::InvalidArgument, "time must satisfy t > 0");
}

void emit(const Common& c, const std::string& content, std::ostream& out) {
  if (c.out_path.empty())
    out << content;
  else
    write_atomic(c.out_path, content);
}

Json config_json(const Common& c, const KappaSpec& kappa) {
  Json j;
  j["alpha"] = c.alpha;
  j["t"] = c.t;
  j["kappa"] = kappa_to_json(kappa);
  return j;
}

// --- subcommands -------------------------------------------------------------------

int run_symbol(const Common& c, std::ostream& out) {
  const Alpha alpha(c.alpha);
  const auto kappa = load_or_default(c, Constant{1.0});
  const auto xs = parse_grid(c.grid.empty() ? "0:10:0.5" : c.grid);
  const auto validation = validate_kappa_spec(kappa, alpha);
  SymbolConfig sc;
  if (c.tolerance) sc.abs_tol = *c.tolerance;
  const LevySymbol sym(alpha, kappa, sc);
  if (c.format == "json") {
    Json j;
    j["config"] = config_json(c, kappa);
    j["validation"] = Json{{"K0", validation.K0},
                           {"min", validation.min_value},
                           {"max", validation.max_value},
                           {"notes", validation.notes}};
    Json rows = Json::array();
    for (double xi : xs) rows.push_back(Json{{"xi", xi}, {"psi", sym(xi)}});
    j["rows"] = rows;
    emit(c, dump_json(j), out);
  } else {
    CsvTable t{{"xi", "psi"}, {}};
    for (double xi : xs) t.rows.push_back({xi, sym(xi)});
    emit(c, dump_csv(t), out);
  }
  return 0;
}

int run_kernel(const Common& c, std::ostream& out, std::ostream& err) {
  const Alpha alpha(c.alpha);
  require_t(c.t);
  const auto kappa = load_or_default(c, Constant{1.0});
  const auto xs = parse_grid(c.grid.empty() ? "0:20:0.1" : c.grid);
  validate_kappa_spec(kappa, alpha);
  InversionConfig ic;
  if (c.tolerance) ic.abs_target = *c.tolerance;
  const KernelEvaluator ev(LevySymbol(alpha, kappa), c.t, ic);

  CsvTable t{{"x", "density", "gradient", "abs_error_estimate"}, {}};
  bool within = true;
  for (double x : xs) {
    const auto d = ev.density_with_error(x);
    const auto g = ev.gradient_with_error(x);
    const double e = std::max(d.abs_error, g.abs_error);
    within = within && e <= ic.abs_target;
    t.rows.push_back({x, d.value, g.value, e});
  }
  if (c.format == "json") {
    Json j;
    j["config"] = config_json(c, kappa);
    Json rows = Json::array();
    for (const auto& r : t.rows)
      rows.push_back(Json{{"x", r[0]}, {"density", r[1]}, {"gradient", r[2]}, {"abs_error_estimate", r[3]}});
    j["rows"] = rows;
    j["pass"] = within;
    emit(c, dump_json(j), out);
  } else {
    emit(c, dump_csv(t), out);
  }
  if (!within) {
    err << "kernel: error estimate above the target " << format_double(ic.abs_target)
        << " at some grid points\n";
    return 1;
  }
  return 0;
}

int run_perturb(const Common& c, std::uint64_t mc_samples, double fourier_limit, std::ostream& out) {
  const Alpha alpha(c.alpha);
  if (c.t != 1.0) throw Error(ErrorCode::InvalidArgument, "perturb works at t = 1");
  if (c.kappa_path.empty()) throw Error(ErrorCode::InvalidArgument, "perturb needs --kappa");
  const auto kappa = load_kappa_spec(c.kappa_path);
  const auto xs = parse_grid(c.grid.empty() ? "0:20:1" : c.grid);
  validate_kappa_spec(kappa, alpha);
  const double base = base_level(kappa);
  auto pairs = bump_pairs(kappa);
  if (pairs.empty() && !std::holds_alternative<Constant>(kappa))
    throw Error(ErrorCode::InvalidArgument, "perturb needs a constant or bump kappa");

  const double lambda = jump_intensity(pairs, alpha);
  const int K = poisson_truncation(lambda);
  double reach = 0.0;
  for (const auto& p : pairs) reach = std::max(reach, p.centre + p.eps * bump_half_width(p.shape));
  double x_max = 0.0;
  for (double x : xs) x_max = std::max(x_max, std::abs(x));
  const auto base_kernel = BaseKernel::for_kappa(alpha, Constant{base}, x_max + K * reach + 5.0);
  const PerturbationSeries series(alpha, base_kernel, pairs);
  const KernelEvaluator fourier(LevySymbol(alpha, kappa), 1.0);

  Json rows = Json::array();
  CsvTable t{{"x", "density", "gradient", "abs_error_estimate", "J0", "J1", "J2"}, {}};
  for (double x : xs) {
    const auto d = series.density_with_error(x);
    const auto g = series.gradient_with_error(x);
    const auto j = series.j_decomposition(x);
    const double e = std::max(d.abs_error, g.abs_error);
    t.rows.push_back({x, d.value, g.value, e, j.J0, j.J1, j.J2});
    Json r;
    r["x"] = x;
    r["density"] = d.value;
    r["gradient"] = g.value;
    r["abs_error_estimate"] = e;
    r["J0"] = j.J0;
    r["J1"] = j.J1;
    r["J1_plus"] = j.J1_plus;
    r["J1_minus"] = j.J1_minus;
    r["J2"] = j.J2;
    r["total"] = j.total();
    Json disc;
    if (std::abs(x) <= fourier_limit) {
      disc["fourier_density"] = d.value - fourier.density_with_error(x).value;
      disc["fourier_gradient"] = g.value - fourier.gradient_with_error(x).value;
    } else {
      disc["fourier_density"] = nullptr;
      disc["fourier_gradient"] = nullptr;
    }
    if (mc_samples > 0) {
      const auto mc = series.monte_carlo(x, 1, mc_samples, c.seed);
      disc["mc_gradient"] = to_json(mc);
    } else {
      disc["mc_gradient"] = nullptr;
    }
    r["route_discrepancies"] = disc;
    rows.push_back(r);
  }
  if (c.format == "json") {
    Json j;
    j["config"] = config_json(c, kappa);
    j["lambda"] = series.lambda();
    j["K_max"] = series.k_max();
    j["rows"] = rows;
    emit(c, dump_json(j), out);
  } else {
    emit(c, dump_csv(t), out);
  }
  return 0;
}

struct CounterexampleFlags {
  std::string mode;
  double z0 = -0.5;
  double eps = 0.2;
  double A = 10.0;
  int levels = 2;
  std::string bump = "indicator";
  double a = 50.0;
  std::string a_list = "20,50,100,200";
  std::string supplementary;
  std::optional<double> es2_A;
  std::uint64_t mc_samples = 1'000'000;
  bool allow_out_of_range = false;
};

CsvTable level_table(const LowerBoundReport& rep) {
  CsvTable t{{"k", "A_k", "x", "gradient", "abs_error", "ratio", "baseline_ratio", "weighted"}, {}};
  for (const auto& r : rep.levels)
    t.rows.push_back({static_cast<double>(r.k), r.A_k, r.x, r.gradient, r.abs_error, r.ratio,
                      r.baseline_ratio, r.weighted});
  return t;
}

int run_counterexample(const Common& c, const CounterexampleFlags& f, std::ostream& out) {
  CounterexampleConfig cfg;
  cfg.alpha = Alpha(c.alpha);
  cfg.z0 = f.z0;
  cfg.eps = f.eps;
  cfg.A = f.A;
  cfg.levels = f.levels;
  cfg.bump = bump_shape_from_string(f.bump);
  cfg.seed = c.seed;
  cfg.mc_samples = f.mc_samples;
  cfg.allow_out_of_range = f.allow_out_of_range;
  validate_config(cfg);
  if (f.levels >= 3 && !f.allow_out_of_range)
    throw Error(ErrorCode::OutOfDeskRange,
                "levels >= 3 are out of desk range; pass --allow-out-of-range to force");
  const auto a_list = parse_list(f.a_list, "--a-list");
  const auto supplementary = parse_list(f.supplementary, "--supplementary");
  const bool csv = c.format == "csv";

  auto finish = [&](const Json& j, bool pass, const CsvTable* table) {
    emit(c, csv && table ? dump_csv(*table) : dump_json(j), out);
    return pass ? 0 : 1;
  };

  if (f.mode == "delta") {
    Json j;
    j["config"] = to_json(cfg);
    j["delta"] = estimate_delta(cfg.alpha, cfg.z0, cfg.eps);
    j["gamma"] = to_json(estimate_gamma_A(cfg.alpha, Constant{1.0}));
    return finish(j, true, nullptr);
  }
  if (f.mode == "lemma21") {
    const auto rep = lemma21_verify(cfg, f.a);
    const auto t = level_table(rep);
    return finish(to_json(rep), rep.pass, &t);
  }
  if (f.mode == "corollary") {
    const auto rep = corollary_report(cfg, a_list);
    Json j = to_json(rep);
    if (!supplementary.empty()) {
      auto extra = cfg;
      extra.mc_samples = 0;
      j["supplementary"] = to_json(corollary_report(extra, supplementary));
    }
    const auto t = level_table(rep);
    return finish(j, rep.pass, &t);
  }
  if (f.mode == "theorem") {
    const auto rep = theorem_verify(cfg);
    const auto t = level_table(rep);
    return finish(to_json(rep), rep.pass, &t);
  }
  const Cascade layers{0.0, cfg.bump, cfg.A, cfg.eps, cfg.levels, 1.0};
  if (f.mode == "es1") {
    const auto rep = lemma23_es1_check(cfg, layers);
    Json j;
    j["config"] = to_json(cfg);
    j["es1"] = to_json(rep);
    j["pass"] = rep.pass;
    return finish(j, rep.pass, nullptr);
  }
  // es2
  double A = 0.0;
  for (const auto& p : perturbation_pairs(layers))
    A = std::max(A, p.centre + p.eps * bump_half_width(p.shape));
  if (f.es2_A) A = *f.es2_A;
  if (!(A > 0.0)) A = cfg.A;
  const auto rep = lemma23_es2_check(cfg, layers, A);
  Json j;
  j["config"] = to_json(cfg);
  j["es2"] = to_json(rep);
  j["pass"] = rep.pass;
  CsvTable t{{"x", "gradient", "weighted", "low", "high", "full"}, {}};
  for (const auto& p : rep.points) t.rows.push_back({p.x, p.gradient, p.weighted, p.low, p.high, p.full});
  return finish(j, rep.pass, &t);
}

int run_bounds(const Common& c, const std::string& variant, std::ostream& out) {
  const Alpha alpha(c.alpha);
  require_t(c.t);
  const auto kappa = load_or_default(c, Constant{1.0});
  const auto xs = parse_grid(c.grid.empty() ? "0:200:1" : c.grid);
  validate_kappa_spec(kappa, alpha);
  InversionConfig ic;
  if (c.tolerance) ic.abs_target = *c.tolerance;
  const KernelEvaluator ev(LevySymbol(alpha, kappa), c.t, ic);
  const double a = alpha.value();
  const double power = variant == "sharp" ? 2.0 + a : 1.0 + a;

  CsvTable t{{"x", "density", "gradient", "ratio"}, {}};
  if (variant == "sharp") t.header.push_back("bound_integral_ratio");
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  double x_max = 0.0;
  for (double x : xs) x_max = std::max(x_max, std::abs(x));
  double last_decade = 0.0;
  double previous_decade = 0.0;
  for (double x : xs) {
    const double p = ev.density_with_error(x).value;
    const double g = ev.gradient_with_error(x).value;
    const double w = std::pow(1.0 + std::abs(x), power);
    const double ratio = (variant == "two-sided" ? p : std::abs(g)) * w;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    if (std::abs(x) >= 0.1 * x_max) last_decade = std::max(last_decade, ratio);
    else if (std::abs(x) >= 0.01 * x_max) previous_decade = std::max(previous_decade, ratio);
    std::vector<double> row{x, p, g, ratio};
    if (variant == "sharp")
      row.push_back(x == 0.0 ? 0.0 : sharp_bound_integral(alpha, c.t, x) * w);
    t.rows.push_back(std::move(row));
  }
  if (c.format == "json") {
    Json j;
    j["variant"] = variant;
    j["config"] = config_json(c, kappa);
    Json rows = Json::array();
    for (const auto& r : t.rows) {
      Json row;
      for (std::size_t i = 0; i < r.size(); ++i) row[t.header[i]] = r[i];
      rows.push_back(row);
    }
    j["rows"] = rows;
    Json s;
    s["min_ratio"] = lo;
    s["max_ratio"] = hi;
    if (variant == "two-sided") s["K"] = std::max(hi, 1.0 / lo);
    s["last_decade_sup"] = last_decade;
    s["previous_decade_sup"] = previous_decade;
    j["summary"] = s;
    emit(c, dump_json(j), out);
  } else {
    emit(c, dump_csv(t), out);
  }
  return 0;
}

}  // namespace

std::vector<double> parse_grid(const std::string& spec) {
  const auto c1 = spec.find(':');
  const auto c2 = c1 == std::string::npos ? std::string::npos : spec.find(':', c1 + 1);
  if (c2 == std::string::npos || spec.find(':', c2 + 1) != std::string::npos)
    throw Error(ErrorCode::InvalidArgument, "grid must be start:stop:step, got '" + spec + "'");
  const double start = parse_number(spec.substr(0, c1), "grid start");
  const double stop = parse_number(spec.substr(c1 + 1, c2 - c1 - 1), "grid stop");
  const double step = parse_number(spec.substr(c2 + 1), "grid step");
  if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0.0) || !(stop >= start))
    throw Error(ErrorCode::InvalidArgument, "grid needs finite start <= stop and step > 0");
  const double span = (stop - start) / step;
  if (span > 1e7) throw Error(ErrorCode::InvalidArgument, "grid has more than 1e7 points");
  auto n = static_cast<long>(std::floor(span));
  if (start + static_cast<double>(n + 1) * step <= stop + 1e-12) ++n;
  std::vector<double> xs;
  for (long i = 0; i <= n; ++i) xs.push_back(start + static_cast<double>(i) * step);
  return xs;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Heat kernels and gradients of 1-D stable-like operators", "stablegrad"};
  app.require_subcommand(1);

  Common common;
  auto* symbol = app.add_subcommand("symbol", "evaluate the Levy symbol on a grid");
  add_common(symbol, common, false);
  symbol->add_option("--xi-grid", common.grid, "start:stop:step");

  auto* kernel = app.add_subcommand("kernel", "density and gradient by Fourier inversion");
  add_common(kernel, common, true);

  std::uint64_t perturb_mc = 0;
  double fourier_limit = 50.0;
  auto* perturb = app.add_subcommand("perturb", "compound-Poisson series for base + bumps");
  add_common(perturb, common, true);
  perturb->add_option("--mc-samples", perturb_mc, "Monte Carlo samples per point (0: off)");
  perturb->add_option("--fourier-limit", fourier_limit, "Fourier cross-check up to |x|");

  CounterexampleFlags cf;
  auto* counter = app.add_subcommand("counterexample", "counterexample verification");
  add_common(counter, common, false);
  counter->add_option("mode", cf.mode, "lemma21|corollary|theorem|es1|es2|delta")
      ->required()
      ->check(CLI::IsMember({"lemma21", "corollary", "theorem", "es1", "es2", "delta"}));
  counter->add_option("--z0", cf.z0);
  counter->add_option("--eps", cf.eps);
  counter->add_option("--A", cf.A);
  counter->add_option("--levels", cf.levels);
  counter->add_option("--bump", cf.bump)->check(CLI::IsMember({"indicator", "smooth"}));
  counter->add_option("--a", cf.a, "bump position for lemma21");
  counter->add_option("--a-list", cf.a_list, "comma-separated positions for corollary");
  counter->add_option("--supplementary", cf.supplementary, "extra positions for corollary");
  counter->add_option("--es2-A", cf.es2_A, "support radius for es2");
  counter->add_option("--mc-samples", cf.mc_samples);
  counter->add_flag("--allow-out-of-range", cf.allow_out_of_range);

  std::string variant;
  auto* bounds = app.add_subcommand("bounds", "weighted-ratio sweeps of the kernel estimates");
  add_common(bounds, common, true);
  bounds->add_option("variant", variant, "two-sided|grad|sharp")
      ->required()
      ->check(CLI::IsMember({"two-sided", "grad", "sharp"}));

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (common.format.empty()) common.format = counter->parsed() ? "json" : "csv";
    if (symbol->parsed()) return run_symbol(common, out);
    if (kernel->parsed()) return run_kernel(common, out, err);
    if (perturb->parsed()) return run_perturb(common, perturb_mc, fourier_limit, out);
    if (counter->parsed()) {
      const int code = run_counterexample(common, cf, out);
      if (code != 0) err << "counterexample " << cf.mode << ": FAIL\n";
      return code;
    }
    return run_bounds(common, variant, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace stablegrad::cli
