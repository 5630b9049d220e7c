#pragma once

// Counterexample coefficients kappa = 1 + bumps and the checks of the lower
// gradient bound, the tail bounds, and the cascade construction.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "stablegrad/perturb.hpp"
#include "stablegrad/symbol.hpp"

namespace stablegrad {

struct CounterexampleConfig {
  Alpha alpha{1.0};
  double z0 = -0.5;
  double eps = 0.2;
  BumpShape bump = BumpShape::Indicator;
  double A = 10.0;
  int levels = 2;
  bool allow_out_of_range = false;   // permit levels >= 3
  double fourier_limit = 200.0;      // Fourier cross-check for x up to here
  std::uint64_t mc_samples = 1'000'000;  // 0 disables the Monte Carlo route
  std::uint64_t seed = 0;
  double table_spacing = 0.02;       // base kernel table when alpha != 1
};

/// Throws InvalidArgument unless z0 in (-1, 0), 0 < eps <= |z0|/2, A >= 2.
void validate_config(const CounterexampleConfig& config);

/// p'_1(1, .) for kappa == 1: closed form at alpha = 1, Fourier otherwise.
std::function<double(double)> unit_gradient(Alpha alpha);

/// min of p'_1(1, .) over a uniform grid of [z0 - eps, z0 + eps] (201 points,
/// doubled until the minimum moves by less than 1e-6 relative).
/// Throws NonPositiveDelta.
double estimate_delta(Alpha alpha, double z0, double eps);

struct TailProbe {
  double A = 0.0;
  double sup_weighted = 0.0;  // sup over [A, 4A] of |p'(x)| x^{2+alpha}
};

struct GammaEstimate {
  double gamma = 0.0;
  double A_valid = 0.0;
  double sup_gradient = 0.0;
  std::vector<TailProbe> probes;
};

/// gamma = max(sup |p'|, 1.05 * tail constant at the largest candidate) and
/// the smallest candidate A = 2, 4, 8, ... from which |p'(x)| <= gamma
/// |x|^{-2-alpha} at every later probe. Throws TailBoundNotObserved when the
/// weighted tail has not settled by the last candidate.
GammaEstimate estimate_gamma_A(Alpha alpha, const KappaSpec& kappa, double max_candidate = 1024.0);

struct RouteValues {
  double series = 0.0;
  std::optional<double> fourier;
  std::optional<MonteCarloEstimate> mc;
};

struct LevelRecord {
  int k = 0;
  double A_k = 0.0;
  double x = 0.0;
  double gradient = 0.0;
  double abs_error = 0.0;
  double ratio = 0.0;
  double baseline_gradient = 0.0;
  double baseline_ratio = 0.0;
  double weighted = 0.0;        // gradient * A_k^{2+alpha}
  double lower_shape = 0.0;     // exp(-lambda) lambda delta / 4 * x^{1+alpha}
  double margin = 0.0;          // gradient minus the tail allowance
  RouteValues routes;
  std::optional<JDecomposition> j;
  bool pass = false;
};

struct ReportConstants {
  double delta = 0.0;
  double gamma = 0.0;
  double A_valid = 0.0;
  double lambda = 0.0;
  double lambda0 = 0.0;
  double lambda_tilde = 0.0;
  double lambda_tilde_bound = 0.0;
  double lambda_tilde_first = 0.0;
  double M = 0.0;
  double tail_allowance = 0.0;
  double threshold_a = 0.0;
  double c_floor = 0.0;
};

struct LowerBoundReport {
  std::string kind;
  CounterexampleConfig config;
  std::vector<LevelRecord> levels;
  ReportConstants constants;
  std::vector<std::string> notes;
  bool pass = false;
};

/// Single bump pair at +-a; checks p'(z0 + a) > 0 and the ratio floor.
LowerBoundReport lemma21_verify(const CounterexampleConfig& config, double a);

/// One row per a; the (2+alpha)-weighted gradient must grow at least 4x and
/// linearly in a within 50%.
LowerBoundReport corollary_report(const CounterexampleConfig& config,
                                  const std::vector<double>& a_list);

/// Cascade kappa_n = 1 + sum_{k<=n} h_k; levels >= 3 throw OutOfDeskRange
/// unless allowed.
LowerBoundReport theorem_verify(const CounterexampleConfig& config);

struct Es1Report {
  double delta = 0.0;
  double lambda = 0.0;
  double lambda0 = 0.0;
  bool in_regime = false;  // lambda <= lambda0
  double min_gradient = 0.0;
  double argmin = 0.0;
  double margin = 0.0;     // min_gradient - delta / 2
  int points = 0;
  bool pass = false;
};

/// min of p'_{1+f} over [z0 - eps, z0 + eps] against delta / 2.
Es1Report lemma23_es1_check(const CounterexampleConfig& config, const KappaSpec& f);

struct Es2Point {
  double x = 0.0;
  double gradient = 0.0;
  double weighted = 0.0;  // |p'| x^{2+alpha}
  double low = 0.0;       // k <= sqrt(x)/2
  double high = 0.0;
  double full = 0.0;
};

struct Es2Report {
  double A = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
  double split_discrepancy = 0.0;
  std::vector<Es2Point> points;
  bool pass = false;
};

/// |p'_{1+f}(x)| <= gamma |x|^{-2-alpha} on a log grid of [A^2, 4A^2].
Es2Report lemma23_es2_check(const CounterexampleConfig& config, const KappaSpec& f, double A);

}  // namespace stablegrad
