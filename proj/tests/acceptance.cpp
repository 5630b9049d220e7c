// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fails.
// Usage: stablegrad_acceptance <path to stablegrad executable> <scratch dir>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "stablegrad/counterexample.hpp"
#include "stablegrad/kernel.hpp"
#include "stablegrad/perturb.hpp"

using namespace stablegrad;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int failures = 0;

void criterion(int n, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += "; over the " + fmt("%.0f", budget_s) + " s budget";
  }
  if (!o.pass) ++failures;
  std::printf("criterion %2d: %s  [%.1f s]  %s\n", n, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
  std::fflush(stdout);
}

struct TestKappa {
  const char* name;
  KappaSpec spec;
};

const std::vector<TestKappa>& test_kappas() {
  static const std::vector<TestKappa> k{
      {"constant", Constant{1.0}},
      {"bump", SinglePairBump{1.0, BumpShape::Indicator, 3.0, 0.4}},
      {"cascade", Cascade{1.0, BumpShape::Indicator, 6.0, 0.3, 1}},
  };
  return k;
}

KernelEvaluator evaluator(double alpha, const KappaSpec& k, double t = 1.0) {
  return KernelEvaluator(LevySymbol(Alpha(alpha), k), t);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome closed_form() {
  auto ev = evaluator(1.0, Constant{1.0});
  double worst = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double x = 0.5 * i;
    const auto c = cauchy_closed_form(1.0, x);
    worst = std::max({worst, std::abs(ev.density(x) - c.density), std::abs(ev.gradient(x) - c.gradient)});
  }
  return {worst <= 1e-8, "max |fourier - closed form| = " + fmt("%.3g", worst) + " over 101 points"};
}

Outcome route_triangle() {
  const std::vector<BumpPair> f{{10.0, 0.2, BumpShape::Indicator}};
  PerturbationSeries s(Alpha(1.0), BaseKernel::cauchy(), f);
  KernelEvaluator ev(LevySymbol(Alpha(1.0), combined_kappa(1.0, SinglePairBump{0.0, BumpShape::Indicator, 10.0, 0.2})),
                     1.0);
  double worst = 0.0, worst_z = 0.0;
  for (double x : {0.0, 2.5, 5.0, 9.5, 10.0, 12.0, 15.0}) {
    worst = std::max({worst, std::abs(s.density(x) - ev.density(x)), std::abs(s.gradient(x) - ev.gradient(x))});
    const auto mc = s.monte_carlo(x, 0, 1'000'000, 0);
    worst_z = std::max(worst_z, std::abs(mc.estimate - s.density(x)) / mc.std_error);
  }
  return {worst <= 1e-8 && worst_z <= 4.0,
          "max series-fourier = " + fmt("%.3g", worst) + ", max MC z-score = " + fmt("%.2f", worst_z)};
}

Outcome kernel_invariants() {
  bool ok = true;
  double mass_err = 0.0, semigroup_err = 0.0, scaling_err = 0.0, min_density = 1e300, sym_err = 0.0;
  for (double alpha : {0.7, 1.0, 1.5}) {
    for (const auto& k : test_kappas()) {
      auto ev = evaluator(alpha, k.spec);
      mass_err = std::max(mass_err, std::abs(total_mass(ev).total() - 1.0));
      for (double x : {0.0, 0.5, 2.0, 3.1, 7.0, 25.0, 100.0}) {
        const double d = ev.density(x);
        min_density = std::min(min_density, d);
        sym_err = std::max({sym_err, std::abs(ev.density(-x) - d), std::abs(ev.gradient(-x) + ev.gradient(x))});
      }
      auto half = evaluator(alpha, k.spec, 0.5);
      const double h = 0.01;
      const auto sampled = sample_density(half, h, 80.0);
      for (long node : {0L, 70L, 300L, 650L, 1200L}) {
        semigroup_err =
            std::max(semigroup_err, std::abs(convolve_sampled(sampled, sampled, node) - ev.density(node * h)));
      }
      for (double lam : {0.5, 2.0}) {
        const double s = std::pow(lam, 1.0 / alpha);
        auto lhs = evaluator(alpha, k.spec, lam);
        auto rhs = evaluator(alpha, rescale_kappa(k.spec, Alpha(alpha), lam));
        for (double x : {0.0, 0.7, 2.0, 5.5, 12.0})
          scaling_err = std::max(scaling_err, std::abs(s * lhs.density(s * x) - rhs.density(x)));
      }
    }
  }
  ok = mass_err <= 1e-6 && min_density > 0.0 && sym_err == 0.0 && semigroup_err <= 1e-6 && scaling_err <= 1e-7;
  return {ok, "mass " + fmt("%.2g", mass_err) + ", min density " + fmt("%.3g", min_density) + ", symmetry " +
                  fmt("%.2g", sym_err) + ", semigroup " + fmt("%.2g", semigroup_err) + ", scaling " +
                  fmt("%.2g", scaling_err)};
}

Outcome sharp_estimate() {
  bool ok = true;
  std::string detail;
  for (double alpha : {0.7, 1.0, 1.5}) {
    auto ev = evaluator(alpha, Constant{1.0});
    double sup = 0.0, last = 0.0, end = 0.0;
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int n = 0;
    for (int i = 0; i <= 400; ++i) {
      const double x = 0.5 * i;
      const double w = std::pow(1.0 + x, 2.0 + alpha) * std::abs(ev.gradient(x));
      sup = std::max(sup, w);
      end = w;
      if (x >= 20.0) {
        last = std::max(last, w);
        const double lx = std::log(x), ly = std::log(w);
        sx += lx, sy += ly, sxx += lx * lx, sxy += lx * ly, ++n;
      }
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    // Jump-measure tail: |p'(1, x)| x^{2+alpha} -> 1 + alpha.
    const bool pass = std::isfinite(sup) && slope < 0.25 && std::abs(end / (1.0 + alpha) - 1.0) <= 0.1;
    ok = ok && pass;
    detail += "alpha " + fmt("%.1f", alpha) + ": sup " + fmt("%.4g", sup) + ", last-decade sup " +
              fmt("%.4g", last) + ", at 200 " + fmt("%.4g", end) + ", slope " + fmt("%.3f", slope) + "; ";
  }
  return {ok, detail};
}

LowerBoundReport& corollary() {
  static LowerBoundReport rep = [] {
    CounterexampleConfig c;
    c.eps = 0.2;
    return corollary_report(c, {20.0, 50.0, 100.0, 200.0});
  }();
  return rep;
}

Outcome sign_flip() {
  const auto& rep = corollary();
  const auto& k = rep.constants;
  bool positive = true, baseline = true;
  double min_ratio = 1e300;
  std::string rows;
  for (const auto& l : rep.levels) {
    positive = positive && l.gradient > 0.0;
    min_ratio = std::min(min_ratio, l.ratio);
    const double expected = -2.0 / l.x;
    baseline = baseline && l.baseline_ratio < 0.0 && std::abs(l.baseline_ratio / expected - 1.0) <= 0.1;
    rows += fmt("a=%.0f", l.A_k) + fmt(" r=%.3g", l.ratio) + "; ";
  }
  const double floor = 0.1 * (0.2 * k.delta / 2.0);
  bool mc_ok = true;
  if (!rep.levels.empty() && rep.levels[0].routes.mc) {
    const auto& mc = *rep.levels[0].routes.mc;
    mc_ok = std::abs(mc.estimate - rep.levels[0].gradient) <= 4.0 * mc.std_error;
  }
  return {positive && min_ratio >= floor && baseline && mc_ok,
          rows + "c_floor " + fmt("%.3g", min_ratio) + " vs required " + fmt("%.3g", floor) +
              (positive ? "" : "; perturbed gradient not positive") + (baseline ? "" : "; baseline off 2/a") +
              (mc_ok ? "" : "; MC disagrees")};
}

Outcome growth() {
  const auto& rep = corollary();
  const auto& first = rep.levels.front();
  const auto& last = rep.levels.back();
  const double g = last.weighted / first.weighted;
  const double span = last.A_k / first.A_k;
  const bool ok = first.weighted > 0.0 && g >= 4.0 && std::abs(g / span - 1.0) <= 0.5;
  return {ok, "weighted p' a^{2+alpha}: " + fmt("%.4g", first.weighted) + " -> " + fmt("%.4g", last.weighted) +
                  ", growth " + fmt("%.3g", g) + " over span " + fmt("%.0f", span)};
}

Outcome cascade() {
  CounterexampleConfig c;
  c.eps = 0.25;
  c.A = 10.0;
  c.levels = 2;
  const auto rep = theorem_verify(c);
  const auto& k = rep.constants;
  bool levels_ok = rep.levels.size() == 2 && rep.levels[0].A_k == 10.0 && rep.levels[1].A_k == 105.0625;
  bool margins = true;
  std::string rows;
  for (const auto& l : rep.levels) {
    margins = margins && l.ratio > 0.0 && l.margin > 0.0;
    rows += fmt("A_k=%.4f", l.A_k) + fmt(" r=%.3g", l.ratio) + fmt(" margin=%.3g", l.margin) + "; ";
  }
  double lambda_lo = 0.0, lambda_hi = 0.0;
  for (double a : cascade_positions(10.0, 0.25, 2)) {
    lambda_lo += 2 * 0.25 * std::pow(a + 0.25, -2.0);
    lambda_hi += 2 * 0.25 * std::pow(a - 0.25, -2.0);
  }
  const bool bracket = k.lambda >= lambda_lo && k.lambda <= lambda_hi && k.lambda_tilde <= k.lambda_tilde_bound;
  return {levels_ok && margins && bracket,
          rows + "lambda " + fmt("%.5g", k.lambda) + (bracket ? " brackets hold" : " brackets violated")};
}

Outcome interval_and_tail() {
  CounterexampleConfig c;
  c.eps = 0.25;
  bool lower = true, tail = true;
  double split = 0.0;
  std::string detail;
  for (int n : {1, 2}) {
    const Cascade f{0.0, BumpShape::Indicator, 10.0, 0.25, n};
    const auto r1 = lemma23_es1_check(c, f);
    const double A = cascade_positions(10.0, 0.25, n).back() + 0.125;
    const auto r2 = lemma23_es2_check(c, f, A);
    lower = lower && r1.pass;
    tail = tail && r2.pass;
    split = std::max(split, r2.split_discrepancy);
    detail += "n=" + std::to_string(n) + ": interval min " + fmt("%.4g", r1.min_gradient) + " vs " +
              fmt("%.4g", r1.delta / 2) + ", tail gamma " + fmt("%.3g", r2.gamma) + (r2.pass ? "" : " unresolved") +
              "; ";
  }
  int poisson_fail = 0;
  double worst = 0.0;
  for (double x : {16.0, 100.0, 400.0}) {
    for (double lam : {0.01, 0.5, 1.0}) {
      const auto s = stirling_tail_check(Alpha(1.0), x, lam, 10.0);
      if (!s.pass) ++poisson_fail;
      worst = std::max(worst, s.tail / s.bound);
    }
  }
  detail += "split " + fmt("%.2g", split) + "; Poisson tail with C=10 fails at " + std::to_string(poisson_fail) +
            " of 9 probes (worst tail/bound " + fmt("%.3g", worst) + ")";
  return {lower && tail && split <= 1e-12 && poisson_fail == 0, detail};
}

Outcome j_exactness() {
  struct Cfg {
    double a, eps;
    BumpShape shape;
  };
  const std::vector<Cfg> cfgs{{20.0, 0.2, BumpShape::Indicator},
                              {50.0, 0.2, BumpShape::Indicator},
                              {100.0, 0.2, BumpShape::Indicator},
                              {200.0, 0.2, BumpShape::SmoothBump},
                              {10.0, 0.25, BumpShape::SmoothBump}};
  double worst = 0.0;
  bool bound = true;
  for (const auto& c : cfgs) {
    PerturbationSeries s(Alpha(1.0), BaseKernel::cauchy(), {BumpPair{c.a, c.eps, c.shape}});
    const auto j = j_decomposition(s, -0.5, c.a);
    worst = std::max(worst, std::abs(j.total() - s.gradient(-0.5 + c.a)));
    bound = bound && std::abs(j.J2) <= 2.0 * s.base().sup_bound(1) * s.lambda() * s.lambda();
  }
  return {worst <= 1e-10 && bound,
          "max |J0+J1+J2 - gradient| = " + fmt("%.3g", worst) + (bound ? ", J2 bound holds" : ", J2 bound violated")};
}

Outcome finite_differences() {
  const double h = 1e-4;
  double worst = 0.0;
  int configs = 0;
  for (double alpha : {0.7, 1.0, 1.5}) {
    for (const auto& k : test_kappas()) {
      auto ev = evaluator(alpha, k.spec);
      for (int i = 0; i < 10; ++i) {
        const double x = -19.0 + 4.1 * i;
        worst = std::max(worst, std::abs((ev.density(x + h) - ev.density(x - h)) / (2 * h) - ev.gradient(x)));
      }
      ++configs;
    }
  }
  PerturbationSeries s(Alpha(1.0), BaseKernel::cauchy(), {BumpPair{10.0, 0.2, BumpShape::Indicator}});
  for (int i = 0; i < 10; ++i) {
    const double x = -19.0 + 4.1 * i;
    worst = std::max(worst, std::abs((s.density(x + h) - s.density(x - h)) / (2 * h) - s.gradient(x)));
  }
  ++configs;
  return {worst <= 1e-6, std::to_string(configs) + " configurations, max |FD - gradient| = " + fmt("%.3g", worst)};
}

Outcome determinism(const std::string& exe, const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream(dir / "bump.json") << R"({"type": "single_pair_bump", "base": 1, "bump": "indicator", "a": 10, "eps": 0.2})";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"kernel --alpha 1.5 --kappa " + (dir / "bump.json").string() + " --x-grid 0:20:0.5", "csv"},
      {"perturb --kappa " + (dir / "bump.json").string() + " --x-grid 0:12:1 --mc-samples 100000 --seed 3 --format json",
       "json"},
      {"counterexample lemma21 --a 50 --mc-samples 100000 --seed 9", "json"},
  };
  bool same = true;
  int i = 0;
  for (const auto& [args, ext] : runs) {
    std::string files[2];
    for (int r = 0; r < 2; ++r) {
      files[r] = (dir / ("run" + std::to_string(i) + "_" + std::to_string(r) + "." + ext)).string();
      const std::string cmd = "\"" + exe + "\" " + args + " --out \"" + files[r] + "\" 2>/dev/null";
      const int rc = std::system(cmd.c_str());
      if (rc == -1 || !fs::exists(files[r])) return {false, "could not run: " + cmd};
    }
    same = same && slurp(files[0]) == slurp(files[1]) && !slurp(files[0]).empty();
    ++i;
  }
  return {same, same ? "3 command pairs byte-identical" : "outputs differ"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <stablegrad executable> <scratch dir>\n", argv[0]);
    return 2;
  }
  const std::string exe = argv[1];
  const fs::path dir = argv[2];
  criterion(1, 30, closed_form);
  criterion(2, 120, route_triangle);
  criterion(3, 300, kernel_invariants);
  criterion(4, 120, sharp_estimate);
  criterion(5, 180, sign_flip);
  criterion(6, 180, growth);
  criterion(7, 300, cascade);
  criterion(8, 180, interval_and_tail);
  criterion(9, 60, j_exactness);
  criterion(10, 60, finite_differences);
  criterion(11, 60, [&] { return determinism(exe, dir); });
  std::printf("%d of 11 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
