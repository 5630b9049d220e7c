#pragma once

// Heat kernel p_kappa(t, x) and its x-derivatives by Fourier inversion of the
// Levy symbol, plus the closed forms and bounding integrals available for
// kappa == 1.

#include <functional>
#include <memory>
#include <vector>

#include "stablegrad/symbol.hpp"

namespace stablegrad {

enum class OscillationStrategy {
  Auto,           // direct quadrature for |x| <= direct_radius, zero intervals beyond
  Direct,         // adaptive quadrature over [0, cutoff] for every x
  ZeroIntervals,  // zero-to-zero panels summed up to the cutoff, no early exit (direct at x = 0)
};

struct InversionConfig {
  double abs_target = 1e-9;     // contract error target per value
  double quad_tol = 1e-13;      // absolute tolerance handed to the quadrature
  double cutoff_decay = 1e-16;  // exp(t psi(Xi)) <= cutoff_decay
  double direct_radius = 5.0;
  OscillationStrategy strategy = OscillationStrategy::Auto;
  int min_euler_terms = 24;     // zero-interval terms before Euler may stop early
  bool cache_symbol = true;     // Chebyshev cache of the bump correction
};

struct KernelValue {
  double value = 0.0;
  double abs_error = 0.0;
};

/// Piecewise Chebyshev interpolant of a smooth function on [0, hi].
class ChebyshevCache {
 public:
  ChebyshevCache() = default;
  ChebyshevCache(const std::function<double(double)>& f, double hi, double panel_width);
  double operator()(double x) const;
  bool empty() const noexcept { return values_.empty(); }
  double upper() const noexcept { return hi_; }

 private:
  static constexpr int kNodes = 16;
  double hi_ = 0.0;
  double width_ = 1.0;
  std::vector<double> values_;  // kNodes per panel
};

/// p(t, x) = (1/pi) int_0^inf cos(xi x) exp(t psi(xi)) dxi and derivatives.
class KernelEvaluator {
 public:
  KernelEvaluator(LevySymbol symbol, double t, InversionConfig config = {});

  KernelValue density_with_error(double x) const { return transform(0, x); }
  KernelValue gradient_with_error(double x) const { return transform(1, x); }
  KernelValue second_derivative_with_error(double x) const { return transform(2, x); }

  /// Throw Error(AccuracyNotReached) when the error estimate exceeds the target.
  double density(double x) const;
  double gradient(double x) const;

  double t() const noexcept { return t_; }
  double cutoff() const noexcept { return cutoff_; }
  /// (1/pi) int_cutoff^inf xi^order exp(-t rate xi^alpha) dxi
  double tail_bound(int order) const;
  const LevySymbol& symbol() const noexcept { return *symbol_; }
  const InversionConfig& config() const noexcept { return config_; }

  /// exp(t psi(xi))
  double weight(double xi) const;

 private:
  KernelValue transform(int order, double x) const;
  KernelValue direct(int order, double x) const;
  KernelValue zero_intervals(int order, double x, bool allow_early_exit) const;

  std::shared_ptr<const LevySymbol> symbol_;
  double t_;
  InversionConfig config_;
  double cutoff_;
  std::shared_ptr<const ChebyshevCache> cache_;
};

double density(const KernelEvaluator& ev, double x);
double gradient(const KernelEvaluator& ev, double x);

struct CauchyValue {
  double density;
  double gradient;
};

/// alpha = 1, kappa == 1: Cauchy law with scale pi t,
/// p(t, x) = t / ((pi t)^2 + x^2).
CauchyValue cauchy_closed_form(double t, double x);
/// d^m/dx^m p(t, x) for m = 0..3.
double cauchy_derivative(int m, double t, double x);

/// Subordinator clock c of the 1/2-stable subordinator with density
/// c t / (2 sqrt(pi)) s^{-3/2} exp(-c^2 t^2 / (4 s)), calibrated once so that
/// the subordinated Gaussian reproduces p(1, 0) = 1/pi^2.
double subordinator_clock();
/// int_0^inf phi(s, x) g(t, s) ds with phi the Gaussian kernel of variance s.
double subordination_density_alpha1(double t, double x);

/// B(t, x) = t|x| int_0^inf s^{-2-(1+alpha)/2} exp(-t s^{-alpha/2} - x^2/(2s)) ds
double sharp_bound_integral(Alpha alpha, double t, double x);

/// kappa_lambda(y) = kappa(lambda^{1/alpha} y).
KappaSpec rescale_kappa(const KappaSpec& spec, Alpha alpha, double lambda);

/// Uniform table of p, p', p'' on [0, extent]; cubic Hermite interpolation
/// for p (from p, p') and p' (from p', p''), extended by parity.
class KernelTable {
 public:
  KernelTable(const KernelEvaluator& ev, double extent, double spacing,
              std::size_t max_nodes = 4'000'000);

  double density(double x) const;
  double gradient(double x) const;
  double extent() const noexcept { return extent_; }
  double spacing() const noexcept { return h_; }
  /// Largest quadrature error estimate over all stored node values.
  double max_node_error() const noexcept { return max_node_error_; }
  /// max |p^{(m)}| over the nodes, m = 0..2.
  double node_sup(int m) const;

 private:
  double hermite(const std::vector<double>& f, const std::vector<double>& df, double x) const;

  double extent_;
  double h_;
  std::vector<double> p_, dp_, d2p_;
  double max_node_error_ = 0.0;
};

/// p on the nodes j*h, j = 0..n (even extension), with a fitted power-law
/// tail c1 y^{-1-alpha} + c2 y^{-1-2alpha} + c3 y^{-1-3alpha} beyond n*h.
struct SampledDensity {
  double spacing = 0.0;
  double alpha = 1.0;
  std::vector<double> values;
  double tail[3] = {0.0, 0.0, 0.0};

  double at(long j) const;
  double tail_model(double y) const;
};

SampledDensity sample_density(const KernelEvaluator& ev, double spacing, double extent);

/// (a * b)(x) at x = node * spacing by the trapezoid rule on the common grid,
/// summing out to `reach` times the sampled extent with the tail models.
double convolve_sampled(const SampledDensity& a, const SampledDensity& b, long node,
                        double reach = 50.0);

struct MassBreakdown {
  double core = 0.0;      // int_{-L}^{L} p
  double middle = 0.0;    // L < |x| < L_far, adaptive in log x
  double far_tail = 0.0;  // |x| > L_far, fitted power-law tail
  double total() const { return core + middle + far_tail; }
  double abs_error = 0.0;
};

/// int p(t, x) dx by adaptive quadrature over density values plus an
/// analytic power-law tail beyond `far`.
MassBreakdown total_mass(const KernelEvaluator& ev, double core = 50.0, double far = 1e4);

}  // namespace stablegrad
