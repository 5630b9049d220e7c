#pragma once

// Compound-Poisson perturbation: p_{kappa+f} = sum_k P(N = k) p_kappa * q^{*k}
// with intensity lambda = int f(y)|y|^{-1-alpha} dy and jump law
// q = f(y)|y|^{-1-alpha} / lambda.

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "stablegrad/kernel.hpp"
#include "stablegrad/symbol.hpp"

namespace stablegrad {

/// p_kappa(1, .) and its first derivatives, from one of three sources.
class BaseKernel {
 public:
  enum class Source { CauchyClosedForm, Fourier, Table };

  /// alpha = 1, kappa == 1.
  static BaseKernel cauchy(double t = 1.0);
  static BaseKernel fourier(std::shared_ptr<const KernelEvaluator> ev);
  static BaseKernel table(std::shared_ptr<const KernelEvaluator> ev, double extent,
                          double spacing);
  /// Closed form when alpha = 1 and kappa == 1, a table of the given extent otherwise.
  static BaseKernel for_kappa(Alpha alpha, const KappaSpec& kappa, double extent,
                              double spacing = 0.02);

  /// d^order/dx^order p_kappa(t, x), order 0 or 1.
  double value(int order, double x) const;
  /// Analytic bound (1/pi) int xi^m exp(-t rate xi^alpha) dxi on sup |p^{(m)}|.
  double sup_bound(int m) const;
  /// Bound on sup |p^{(m)}| over [lo, hi]; sharper than sup_bound away from
  /// the origin for the closed form.
  double sup_bound_on(int m, double lo, double hi) const;
  /// Error allowance per evaluation.
  double evaluation_error(int order) const;

  Source source() const noexcept { return source_; }
  double alpha() const noexcept { return alpha_; }
  double t() const noexcept { return t_; }
  /// Largest |x| the source can evaluate.
  double reach() const noexcept { return reach_; }
  const KernelEvaluator* evaluator() const noexcept { return evaluator_.get(); }

 private:
  BaseKernel() = default;

  Source source_ = Source::CauchyClosedForm;
  double alpha_ = 1.0;
  double t_ = 1.0;
  double decay_ = 0.0;  // t * c_alpha * inf kappa
  double reach_ = 0.0;
  std::shared_ptr<const KernelEvaluator> evaluator_;
  std::shared_ptr<const KernelTable> table_;
};

/// The bump pairs of a bump spec; Constant(0) is the zero perturbation.
std::vector<BumpPair> perturbation_pairs(const KappaSpec& f);

/// lambda = int f(y)|y|^{-1-alpha} dy. Throws DivergentIntensity when a
/// support reaches the origin.
double jump_intensity(const std::vector<BumpPair>& f, Alpha alpha);
double jump_intensity(const KappaSpec& f, Alpha alpha);

/// Point masses on the nodes j * spacing, j = first .. first + size - 1.
struct GridMeasure {
  double spacing = 0.0;
  long first = 0;
  std::vector<double> mass;

  double node(std::size_t i) const {
    return spacing * static_cast<double>(first + static_cast<long>(i));
  }
  double total() const;
  double mean() const;
  /// Mass on nodes within [lo, hi].
  double mass_in(double lo, double hi) const;
};

struct JumpLawConfig {
  double spacing = 0.0;          // 0: min eps / 50
  std::size_t max_nodes = 50'000'000;
  std::size_t cdf_cells = 4096;  // per bump, for sampling
};

/// q on the support of f: exact cell masses, a mass- and mean-preserving
/// deposit on the uniform grid, and a CDF table for sampling.
class JumpLaw {
 public:
  JumpLaw(std::vector<BumpPair> f, Alpha alpha, JumpLawConfig config = {});

  double lambda() const noexcept { return lambda_; }
  double spacing() const noexcept { return grid_.spacing; }
  /// q(y)
  double density(double y) const;
  /// Largest |y| in the support.
  double reach() const noexcept { return reach_; }
  const std::vector<BumpPair>& pairs() const noexcept { return pairs_; }

  /// q deposited on the grid.
  const GridMeasure& grid() const noexcept { return grid_; }
  /// q^{*k} on the grid, k >= 1. Throws GridOverflow past max_nodes.
  GridMeasure convolution_power(int k) const;
  /// m * q on the grid.
  GridMeasure convolve(const GridMeasure& m) const;
  /// Inverse CDF; u in [0, 1).
  double sample(double u) const;

 private:
  std::vector<BumpPair> pairs_;
  double alpha_;
  JumpLawConfig config_;
  double lambda_ = 0.0;
  double reach_ = 0.0;
  GridMeasure grid_;
  std::vector<std::size_t> support_;  // nonzero indices of grid_
  // Sampling cells on the y > 0 side and their cumulative mass (ends at 1/2).
  std::vector<double> cell_lo_, cell_hi_, cdf_;
};

/// P(N > K) for N ~ Poisson(lambda).
double poisson_tail(double lambda, int K);
/// P(N = k)
double poisson_weight(double lambda, int k);
/// Smallest K with P(N > K) < tail.
int poisson_truncation(double lambda, double tail = 1e-12);

struct StirlingCheck {
  double x = 0.0;
  double lambda = 0.0;
  int m = 0;              // ceil(sqrt|x| / 2)
  double tail = 0.0;      // P(N > m)
  double bound = 0.0;     // |x|^{-2-alpha} C
  bool pass = false;
};

StirlingCheck stirling_tail_check(Alpha alpha, double x, double lambda, double C = 10.0);

struct SeriesConfig {
  double tail_mass = 1e-12;
  std::optional<int> k_max;  // override; must reach tail_mass or TruncationInsufficient
  double quad_tol = 1e-16;
  JumpLawConfig law;
};

struct JDecomposition {
  double x = 0.0;
  double J0 = 0.0;
  double J1 = 0.0;
  double J1_plus = 0.0;   // k = 1 term restricted to y > 0
  double J1_minus = 0.0;  // k = 1 term restricted to y < 0
  double J2 = 0.0;
  double total() const { return J0 + J1 + J2; }
  double abs_error = 0.0;
};

struct PartialSums {
  double low = 0.0;   // k <= split
  double high = 0.0;  // k > split
  double full = 0.0;
};

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::uint64_t samples = 0;
};

/// Series evaluator for p_{kappa+f} and its gradient, built once per problem.
class PerturbationSeries {
 public:
  PerturbationSeries(Alpha alpha, BaseKernel base, std::vector<BumpPair> f,
                     SeriesConfig config = {});

  double lambda() const noexcept { return law_.lambda(); }
  int k_max() const noexcept { return k_max_; }
  const JumpLaw& law() const noexcept { return law_; }
  const BaseKernel& base() const noexcept { return base_; }
  double weight(int k) const { return weights_.at(static_cast<std::size_t>(k)); }

  /// (p^{(order)} * q^{*k})(x), k = 0..k_max, unweighted.
  std::vector<double> terms(double x, int order) const;

  KernelValue density_with_error(double x) const { return evaluate(x, 0); }
  KernelValue gradient_with_error(double x) const { return evaluate(x, 1); }
  double density(double x) const { return evaluate(x, 0).value; }
  double gradient(double x) const { return evaluate(x, 1).value; }

  JDecomposition j_decomposition(double x) const;
  /// Weighted series split at k <= split.
  PartialSums partial_sums(double x, double split, int order) const;

  /// Mean of p^{(order)}(x - Y) over n compound-Poisson samples Y.
  MonteCarloEstimate monte_carlo(double x, int order, std::uint64_t n, std::uint64_t seed) const;

 private:
  KernelValue evaluate(double x, int order) const;
  double first_term(double x, int order, int side) const;  // side: +1, -1 or 0 (both)
  double grid_term(int k, double x, int order) const;

  double alpha_;
  BaseKernel base_;
  SeriesConfig config_;
  JumpLaw law_;
  int k_max_ = 0;
  std::vector<double> weights_;
  std::vector<GridMeasure> powers_;  // q^{*k} for k = 2..k_max at index k - 2
  double truncated_mass_ = 0.0;
};

double series_density(const PerturbationSeries& s, double x);
double series_gradient(const PerturbationSeries& s, double x);
MonteCarloEstimate mc_gradient(const PerturbationSeries& s, double x, std::uint64_t n,
                               std::uint64_t seed);
JDecomposition j_decomposition(const PerturbationSeries& s, double z0, double a);

/// The combined coefficient base + f as one spec, for the Fourier route.
KappaSpec combined_kappa(double base, const KappaSpec& f);

}  // namespace stablegrad
