#include "stablegrad/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "stablegrad/error.hpp"
#include "stablegrad/kernel.hpp"

namespace stablegrad {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

bool is_unit_constant(const KappaSpec& kappa) {
  const auto* c = std::get_if<Constant>(&kappa);
  return c && c->c == 1.0;
}

std::function<double(double)> gradient_of(Alpha alpha, const KappaSpec& kappa) {
  if (alpha.value() == 1.0 && is_unit_constant(kappa))
    return [](double x) { return cauchy_derivative(1, 1.0, x); };
  auto ev = std::make_shared<const KernelEvaluator>(LevySymbol(alpha, kappa), 1.0);
  return [ev](double x) { return ev->gradient_with_error(x).value; };
}

double grid_sup_abs(const std::function<double(double)>& g, double lo, double hi, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s = std::max(s, std::abs(g(lo + (hi - lo) * i / (n - 1))));
  return s;
}

// Series for kappa = 1 + f, with a base table wide enough for x up to x_max
// when alpha != 1.
PerturbationSeries make_series(const CounterexampleConfig& config, std::vector<BumpPair> f,
                               double x_max, double tail_mass = 1e-12) {
  const Alpha alpha = config.alpha;
  SeriesConfig sc;
  sc.tail_mass = tail_mass;
  if (alpha.value() == 1.0)
    return PerturbationSeries(alpha, BaseKernel::cauchy(1.0), std::move(f), sc);
  const double lambda = jump_intensity(f, alpha);
  const int K = poisson_truncation(lambda, tail_mass);
  double reach = 0.0;
  for (const auto& p : f) reach = std::max(reach, p.centre + p.eps * bump_half_width(p.shape));
  const double extent = x_max + K * reach + 5.0;
  auto base = BaseKernel::for_kappa(alpha, Constant{1.0}, extent, config.table_spacing);
  return PerturbationSeries(alpha, std::move(base), std::move(f), sc);
}

struct UnitConstants {
  double delta;
  GammaEstimate gamma;
  double sup_unit;  // sup |p'_1|
  double lambda0;
  double threshold;
};

UnitConstants unit_constants(const CounterexampleConfig& config) {
  UnitConstants u;
  u.delta = estimate_delta(config.alpha, config.z0, config.eps);
  u.gamma = estimate_gamma_A(config.alpha, Constant{1.0});
  u.sup_unit = u.gamma.sup_gradient;
  u.lambda0 = std::log1p(u.delta / (3.0 * std::max(u.sup_unit, 1.0)));
  u.threshold = std::max(std::pow(2.0 * u.gamma.gamma / u.delta, 2.0 + config.alpha.value()), 2.0);
  return u;
}

LevelRecord measure_level(const CounterexampleConfig& config, const PerturbationSeries& series,
                          const KappaSpec& kappa, int k, double A_k, double x, bool with_mc) {
  const double alpha = config.alpha.value();
  LevelRecord r;
  r.k = k;
  r.A_k = A_k;
  r.x = x;
  const auto g = series.gradient_with_error(x);
  r.gradient = g.value;
  r.abs_error = g.abs_error;
  r.baseline_gradient = unit_gradient(config.alpha)(x);
  r.routes.series = g.value;
  if (x <= config.fourier_limit) {
    const KernelEvaluator ev(LevySymbol(config.alpha, kappa), 1.0);
    r.routes.fourier = ev.gradient_with_error(x).value;
  }
  if (with_mc && config.mc_samples > 0)
    r.routes.mc = series.monte_carlo(x, 1, config.mc_samples, config.seed);
  r.j = series.j_decomposition(x);
  r.weighted = r.gradient * std::pow(A_k, 2.0 + alpha);
  return r;
}

bool resolved(const LevelRecord& r) { return 10.0 * r.abs_error <= std::abs(r.gradient); }

void boundary_note(const CounterexampleConfig& config, std::vector<std::string>& notes) {
  if (config.eps == std::abs(config.z0) / 2.0)
    notes.push_back("eps = |z0|/2 sits on the boundary of the admissible range");
}

void fill_constants(ReportConstants& c, const UnitConstants& u) {
  c.delta = u.delta;
  c.gamma = u.gamma.gamma;
  c.A_valid = u.gamma.A_valid;
  c.lambda0 = u.lambda0;
  c.threshold_a = u.threshold;
}

LevelRecord single_bump_level(const CounterexampleConfig& config, const UnitConstants& u,
                              double a, bool with_mc, std::vector<std::string>& notes) {
  const double alpha = config.alpha.value();
  const SinglePairBump f{0.0, config.bump, a, config.eps};
  const KappaSpec kappa = combined_kappa(1.0, f);
  validate_kappa_spec(kappa, config.alpha);
  const double x = config.z0 + a;
  const auto series = make_series(config, perturbation_pairs(f), x);
  auto r = measure_level(config, series, kappa, 1, a, x, with_mc);
  r.ratio = r.gradient * std::pow(x, 1.0 + alpha);
  r.baseline_ratio = r.baseline_gradient * std::pow(x, 1.0 + alpha);
  const double lambda = series.lambda();
  r.lower_shape = std::exp(-lambda) * lambda * u.delta / 4.0 * std::pow(x, 1.0 + alpha);
  r.margin = r.gradient;
  r.pass = r.gradient > 0.0 && r.ratio >= 0.1 * r.lower_shape && resolved(r);
  if (a < u.threshold)
    notes.push_back("a = " + fmt(a) + " is below the threshold (2 gamma/delta)^{2+alpha} v 2 = " +
                    fmt(u.threshold));
  if (!(r.gradient > 0.0))
    notes.push_back("a = " + fmt(a) + ": gradient at z0 + a is not positive (" + fmt(r.gradient) + ")");
  return r;
}

}  // namespace

void validate_config(const CounterexampleConfig& c) {
  if (!(c.z0 > -1.0 && c.z0 < 0.0))
    throw Error(ErrorCode::InvalidArgument, "z0 must lie in (-1, 0), got " + fmt(c.z0));
  if (!(c.eps > 0.0 && c.eps <= std::abs(c.z0) / 2.0))
    throw Error(ErrorCode::InvalidArgument,
                "eps must lie in (0, |z0|/2] = (0, " + fmt(std::abs(c.z0) / 2.0) + "], got " +
                    fmt(c.eps));
  if (!(c.A >= 2.0)) throw Error(ErrorCode::InvalidArgument, "A must be >= 2, got " + fmt(c.A));
  if (c.levels < 0) throw Error(ErrorCode::InvalidArgument, "levels must be >= 0");
}

std::function<double(double)> unit_gradient(Alpha alpha) {
  return gradient_of(alpha, Constant{1.0});
}

double estimate_delta(Alpha alpha, double z0, double eps) {
  if (!(z0 > -1.0 && z0 < 0.0) || !(eps > 0.0 && eps <= std::abs(z0) / 2.0))
    throw Error(ErrorCode::InvalidArgument,
                "need z0 in (-1, 0) and 0 < eps <= |z0|/2, got z0 = " + fmt(z0) + ", eps = " + fmt(eps));
  const auto g = unit_gradient(alpha);
  auto grid_min = [&](int n) {
    double m = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) m = std::min(m, g(z0 - eps + 2.0 * eps * i / (n - 1)));
    return m;
  };
  int n = 201;
  double m = grid_min(n);
  for (int round = 0; round < 6; ++round) {
    n = 2 * n - 1;
    const double next = grid_min(n);
    const bool settled = std::abs(next - m) < 1e-6 * std::abs(next);
    m = next;
    if (settled) break;
  }
  if (!(m > 0.0))
    throw Error(ErrorCode::NonPositiveDelta,
                "min of p'_1 over [z0 - eps, z0 + eps] is " + fmt(m) + " <= 0");
  return m;
}

GammaEstimate estimate_gamma_A(Alpha alpha, const KappaSpec& kappa, double max_candidate) {
  const double a = alpha.value();
  const auto g = gradient_of(alpha, kappa);
  GammaEstimate out;
  out.sup_gradient = grid_sup_abs(g, 0.0, 20.0, 2001);
  for (double Ac = 2.0; Ac <= max_candidate * (1.0 + 1e-12); Ac *= 2.0) {
    TailProbe p;
    p.A = Ac;
    for (int i = 0; i <= 40; ++i) {
      const double x = Ac * std::pow(4.0, i / 40.0);
      p.sup_weighted = std::max(p.sup_weighted, std::abs(g(x)) * std::pow(x, 2.0 + a));
    }
    out.probes.push_back(p);
  }
  if (out.probes.size() >= 2) {
    const double last = out.probes.back().sup_weighted;
    const double prev = out.probes[out.probes.size() - 2].sup_weighted;
    if (last > 1.05 * prev)
      throw Error(ErrorCode::TailBoundNotObserved,
                  "weighted tail sup |p'| x^{2+alpha} still grows: " + fmt(prev) + " on [" +
                      fmt(out.probes[out.probes.size() - 2].A) + ", 4A] vs " + fmt(last) +
                      " on [" + fmt(out.probes.back().A) + ", 4A]");
  }
  out.gamma = std::max(out.sup_gradient, 1.05 * out.probes.back().sup_weighted);
  out.A_valid = out.probes.back().A;
  for (std::size_t i = out.probes.size(); i-- > 0;) {
    if (out.probes[i].sup_weighted > out.gamma) break;
    out.A_valid = out.probes[i].A;
  }
  return out;
}

LowerBoundReport lemma21_verify(const CounterexampleConfig& config, double a) {
  validate_config(config);
  LowerBoundReport rep;
  rep.kind = "lemma21";
  rep.config = config;
  boundary_note(config, rep.notes);
  const auto u = unit_constants(config);
  fill_constants(rep.constants, u);
  auto r = single_bump_level(config, u, a, true, rep.notes);
  rep.constants.lambda = jump_intensity(std::vector<BumpPair>{{a, config.eps, config.bump}}, config.alpha);
  rep.constants.c_floor = r.ratio;
  rep.pass = r.pass;
  rep.levels.push_back(std::move(r));
  return rep;
}

LowerBoundReport corollary_report(const CounterexampleConfig& config,
                                  const std::vector<double>& a_list) {
  validate_config(config);
  LowerBoundReport rep;
  rep.kind = "corollary";
  rep.config = config;
  if (a_list.empty()) {
    rep.pass = true;
    return rep;
  }
  boundary_note(config, rep.notes);
  const auto u = unit_constants(config);
  fill_constants(rep.constants, u);
  const double alpha = config.alpha.value();
  bool all = true;
  double c_floor = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a_list.size(); ++i) {
    auto r = single_bump_level(config, u, a_list[i], i == 0, rep.notes);
    r.k = static_cast<int>(i) + 1;
    r.weighted = r.gradient * std::pow(a_list[i], 2.0 + alpha);
    all = all && r.pass;
    c_floor = std::min(c_floor, r.ratio);
    rep.levels.push_back(std::move(r));
  }
  rep.constants.c_floor = c_floor;
  rep.constants.lambda =
      jump_intensity(std::vector<BumpPair>{{a_list.front(), config.eps, config.bump}}, config.alpha);
  if (rep.levels.size() >= 2) {
    const auto& first = rep.levels.front();
    const auto& last = rep.levels.back();
    const double growth = last.weighted / first.weighted;
    const double span = last.A_k / first.A_k;
    const bool grows = first.weighted > 0.0 && growth >= 4.0;
    const bool linear = std::abs(growth / span - 1.0) <= 0.5;
    if (!grows)
      rep.notes.push_back("weighted gradient p' a^{2+alpha} grows by " + fmt(growth) +
                          ", need >= 4 with a positive start");
    if (!linear)
      rep.notes.push_back("growth " + fmt(growth) + " is not linear in a (span " + fmt(span) +
                          ") within 50%");
    all = all && grows && linear;
  }
  rep.pass = all;
  return rep;
}

LowerBoundReport theorem_verify(const CounterexampleConfig& config) {
  validate_config(config);
  if (config.levels >= 3 && !config.allow_out_of_range)
    throw Error(ErrorCode::OutOfDeskRange,
                "cascade level " + std::to_string(config.levels) +
                    " needs gradient accuracy near 1e-17 at x ~ 1e4; use levels <= 2");
  const double alpha = config.alpha.value();
  LowerBoundReport rep;
  rep.kind = "theorem";
  rep.config = config;
  boundary_note(config, rep.notes);
  const auto u = unit_constants(config);
  fill_constants(rep.constants, u);

  const Cascade f{0.0, config.bump, config.A, config.eps, config.levels, 1.0};
  const KappaSpec kappa = combined_kappa(1.0, f);
  validate_kappa_spec(kappa, config.alpha);
  const auto pairs = perturbation_pairs(f);

  // Level positions; n = 0 keeps A_1 as the control position.
  auto positions = cascade_positions(config.A, config.eps, std::max(config.levels, 1) + 2);
  const int n = config.levels;
  const int shown = std::max(n, 1);
  const double x_max = config.z0 + positions[static_cast<std::size_t>(shown - 1)];
  const auto series = make_series(config, pairs, std::max(x_max, 20.0));
  rep.constants.lambda = series.lambda();

  // Per-level lambda brackets.
  for (const auto& p : pairs) {
    const double lk = jump_intensity(std::vector<BumpPair>{p}, config.alpha);
    const double lo = 2.0 * p.eps * std::pow(p.centre + p.eps, -1.0 - alpha);
    const double hi = 2.0 * p.eps * std::pow(p.centre - p.eps, -1.0 - alpha);
    if (!(lo <= lk && lk <= hi))
      rep.notes.push_back("lambda bracket fails at A_k = " + fmt(p.centre));
  }

  // Discarded tail f~_n: levels n+1, n+2, ...
  double bound = 0.0;
  double first = 0.0;
  std::vector<BumpPair> omitted;
  for (int k = n; k < static_cast<int>(positions.size()); ++k) {
    const double Ak = positions[static_cast<std::size_t>(k)];
    const double term = 2.0 * config.eps * std::pow(Ak - config.eps, -1.0 - alpha);
    if (k == n) first = term;
    bound += term;
    omitted.push_back({Ak, config.eps, config.bump});
  }
  rep.constants.lambda_tilde = jump_intensity(omitted, config.alpha);
  rep.constants.lambda_tilde_bound = bound;
  rep.constants.lambda_tilde_first = first;
  if (!(rep.constants.lambda_tilde <= bound))
    rep.notes.push_back("lambda~ exceeds its bound 2 eps sum (A_k - eps)^{-1-alpha}");
  if (!(bound <= 1.01 * first))
    rep.notes.push_back("lambda~ bound is not dominated by the first omitted level");

  double M = 0.0;
  for (int i = 0; i <= 400; ++i) M = std::max(M, std::abs(series.gradient(0.05 * i)));
  rep.constants.M = M;
  rep.constants.tail_allowance = M * std::expm1(rep.constants.lambda_tilde_bound);

  bool all = n > 0;
  double c_floor = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= shown; ++k) {
    const double Ak = positions[static_cast<std::size_t>(k - 1)];
    const double x = config.z0 + Ak;
    auto r = measure_level(config, series, kappa, k, Ak, x, true);
    r.ratio = r.gradient * std::pow(Ak, 1.0 + alpha);
    r.baseline_ratio = r.baseline_gradient * std::pow(Ak, 1.0 + alpha);
    r.lower_shape = std::exp(-series.lambda()) * series.lambda() * u.delta / 4.0 *
                    std::pow(x, 1.0 + alpha);
    r.margin = r.gradient - rep.constants.tail_allowance;
    r.pass = n > 0 && r.ratio > 0.0 && r.margin > 0.0 && resolved(r);
    if (n > 0 && r.gradient > 0.0 && !(r.margin > 0.0))
      rep.notes.push_back("level " + std::to_string(k) + ": tail allowance " +
                          fmt(rep.constants.tail_allowance) + " dominates the margin");
    if (n > 0 && !(r.gradient > 0.0))
      rep.notes.push_back("level " + std::to_string(k) + ": gradient at z0 + A_k is not positive (" +
                          fmt(r.gradient) + ")");
    c_floor = std::min(c_floor, r.ratio);
    all = all && r.pass;
    rep.levels.push_back(std::move(r));
  }
  if (n == 0) rep.notes.push_back("levels = 0: kappa == 1 control case");
  rep.constants.c_floor = c_floor;
  rep.pass = all;
  return rep;
}

Es1Report lemma23_es1_check(const CounterexampleConfig& config, const KappaSpec& f) {
  validate_config(config);
  Es1Report out;
  out.delta = estimate_delta(config.alpha, config.z0, config.eps);
  const double sup_unit = grid_sup_abs(unit_gradient(config.alpha), 0.0, 20.0, 2001);
  out.lambda0 = std::log1p(out.delta / (3.0 * std::max(sup_unit, 1.0)));
  const auto series = make_series(config, perturbation_pairs(f), 1.0);
  out.lambda = series.lambda();
  out.in_regime = out.lambda <= out.lambda0;
  out.points = 201;
  out.min_gradient = std::numeric_limits<double>::infinity();
  for (int i = 0; i < out.points; ++i) {
    const double x = config.z0 - config.eps + 2.0 * config.eps * i / (out.points - 1);
    const double g = series.gradient(x);
    if (g < out.min_gradient) {
      out.min_gradient = g;
      out.argmin = x;
    }
  }
  out.margin = out.min_gradient - out.delta / 2.0;
  out.pass = out.margin >= 0.0;
  return out;
}

Es2Report lemma23_es2_check(const CounterexampleConfig& config, const KappaSpec& f, double A) {
  validate_config(config);
  const double alpha = config.alpha.value();
  auto pairs = perturbation_pairs(f);
  for (const auto& p : pairs)
    if (p.centre + p.eps * bump_half_width(p.shape) > A)
      throw Error(ErrorCode::InvalidArgument, "supp f must lie in [-A, A], A = " + fmt(A));
  Es2Report out;
  out.A = A;
  const double x_hi = 4.0 * A * A;
  const auto series = make_series(config, std::move(pairs), x_hi, 1e-24);
  out.lambda = series.lambda();
  if (out.lambda > 1.0)
    throw Error(ErrorCode::InvalidArgument, "the tail check needs lambda <= 1, got " + fmt(out.lambda));
  bool resolved_all = true;
  for (int i = 0; i <= 40; ++i) {
    Es2Point p;
    p.x = A * A * std::pow(4.0, i / 40.0);
    const auto g = series.gradient_with_error(p.x);
    p.gradient = g.value;
    p.weighted = std::abs(g.value) * std::pow(p.x, 2.0 + alpha);
    const auto split = series.partial_sums(p.x, std::sqrt(p.x) / 2.0, 1);
    p.low = split.low;
    p.high = split.high;
    p.full = split.full;
    out.split_discrepancy = std::max(out.split_discrepancy, std::abs(p.low + p.high - p.full));
    out.gamma = std::max(out.gamma, p.weighted);
    resolved_all = resolved_all && 10.0 * g.abs_error <= std::abs(g.value);
    out.points.push_back(p);
  }
  out.pass = std::isfinite(out.gamma) && out.split_discrepancy <= 1e-12 && resolved_all;
  return out;
}

}  // namespace stablegrad
