#include "stablegrad/kernel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "stablegrad/error.hpp"
#include "stablegrad/quadrature.hpp"

namespace stablegrad {

namespace {

constexpr double kPi = std::numbers::pi;

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// xi^order times the cosine/sine factor of the order-th x-derivative of
// cos(xi x): 0 -> cos, 1 -> -xi sin, 2 -> -xi^2 cos.
double oscillatory_factor(int order, double xi, double x) {
  switch (order) {
    case 0: return std::cos(xi * x);
    case 1: return -xi * std::sin(xi * x);
    default: return -xi * xi * std::cos(xi * x);
  }
}

// int exp(phi(u)) du over the real line, for phi unimodal and decaying at
// both ends; evaluated around the maximum of phi.
template <class Phi>
double integrate_log_space(Phi&& phi, double rel_tol = 1e-13) {
  double best = -std::numeric_limits<double>::infinity();
  double u_best = 0.0;
  for (double u = -80.0; u <= 80.0; u += 0.05) {
    const double v = phi(u);
    if (v > best) {
      best = v;
      u_best = u;
    }
  }
  if (!std::isfinite(best))
    throw Error(ErrorCode::QuadratureFailure, "log-space integrand has no finite maximum");
  constexpr double kDrop = 60.0;
  double lo = u_best;
  while (phi(lo) > best - kDrop && lo > -400.0) lo -= 0.25;
  double hi = u_best;
  while (phi(hi) > best - kDrop && hi < 400.0) hi += 0.25;
  quad::Options opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = rel_tol;
  opt.max_panels = 2000;
  auto g = [&](double u) { return std::exp(phi(u) - best); };
  std::array<double, 1> mid{u_best};
  const auto r = quad::integrate(g, lo, hi, mid, opt);
  if (!r.converged)
    throw Error(ErrorCode::QuadratureFailure,
                "log-space quadrature did not reach relative tolerance");
  return r.value * std::exp(best);
}

std::string fmt(double v) { return std::to_string(v); }

}  // namespace

// --- ChebyshevCache --------------------------------------------------------

ChebyshevCache::ChebyshevCache(const std::function<double(double)>& f, double hi,
                               double panel_width)
    : hi_(hi) {
  const auto panels = static_cast<std::size_t>(std::ceil(hi / panel_width));
  width_ = hi / static_cast<double>(std::max<std::size_t>(panels, 1));
  values_.resize(std::max<std::size_t>(panels, 1) * kNodes);
  for (std::size_t p = 0; p * kNodes < values_.size(); ++p) {
    const double lo = width_ * static_cast<double>(p);
    for (int j = 0; j < kNodes; ++j) {
      const double s = 0.5 * (1.0 - std::cos(kPi * j / (kNodes - 1)));
      values_[p * kNodes + j] = f(lo + width_ * s);
    }
  }
}

double ChebyshevCache::operator()(double x) const {
  const std::size_t panels = values_.size() / kNodes;
  auto p = static_cast<std::size_t>(std::max(0.0, x / width_));
  if (p >= panels) p = panels - 1;
  const double lo = width_ * static_cast<double>(p);
  const double s = 2.0 * (x - lo) / width_ - 1.0;  // local coordinate in [-1, 1]
  const double* v = &values_[p * kNodes];
  // Barycentric formula on Chebyshev-Lobatto points, ordered from s = -1.
  double num = 0.0;
  double den = 0.0;
  for (int j = 0; j < kNodes; ++j) {
    const double node = -std::cos(kPi * j / (kNodes - 1));
    const double diff = s - node;
    if (diff == 0.0) return v[j];
    double w = (j % 2 == 0) ? 1.0 : -1.0;
    if (j == 0 || j == kNodes - 1) w *= 0.5;
    const double c = w / diff;
    num += c * v[j];
    den += c;
  }
  return num / den;
}

// --- KernelEvaluator --------------------------------------------------------

KernelEvaluator::KernelEvaluator(LevySymbol symbol, double t, InversionConfig config)
    : symbol_(std::make_shared<const LevySymbol>(std::move(symbol))), t_(t), config_(config) {
  if (!(t > 0.0) || !std::isfinite(t))
    throw Error(ErrorCode::InvalidArgument, "time must be positive, got " + fmt(t));
  const double rate = t_ * symbol_->decay_rate();
  if (!(rate > 0.0))
    throw Error(ErrorCode::InvalidArgument, "symbol has no positive decay rate");
  const double alpha = symbol_->alpha().value();
  cutoff_ = std::pow(-std::log(config_.cutoff_decay) / rate, 1.0 / alpha);
  for (int guard = 0; guard < 64 && tail_bound(2) > 1e-3 * config_.abs_target; ++guard)
    cutoff_ *= 1.25;

  const bool bumps = !bump_pairs(symbol_->kappa()).empty();
  if (config_.cache_symbol && bumps) {
    double reach = 1.0;
    for (const auto& p : bump_pairs(symbol_->kappa()))
      reach = std::max(reach, p.centre + p.eps * bump_half_width(p.shape));
    const auto sym = symbol_;
    cache_ = std::make_shared<const ChebyshevCache>(
        [sym](double xi) { return sym->correction(xi); }, cutoff_, std::min(0.5, 2.0 / reach));
  }
}

double KernelEvaluator::tail_bound(int order) const {
  const double alpha = symbol_->alpha().value();
  const double b = t_ * symbol_->decay_rate();
  const double s = (order + 1.0) / alpha;
  return boost::math::tgamma(s, b * std::pow(cutoff_, alpha)) * std::pow(b, -s) / (kPi * alpha);
}

double KernelEvaluator::weight(double xi) const {
  xi = std::abs(xi);
  if (xi == 0.0) return 1.0;
  double psi = symbol_->stable_part(xi);
  if (cache_ && xi <= cache_->upper())
    psi += (*cache_)(xi);
  else if (symbol_->has_correction())
    psi += symbol_->correction(xi);
  return std::exp(t_ * psi);
}

KernelValue KernelEvaluator::transform(int order, double x) const {
  if (!std::isfinite(x)) throw Error(ErrorCode::InvalidArgument, "x must be finite");
  if (x < 0.0) {
    auto r = transform(order, -x);
    if (order == 1) r.value = -r.value;
    return r;
  }
  if (order == 1 && x == 0.0) return {0.0, 0.0};
  switch (config_.strategy) {
    case OscillationStrategy::Direct: return direct(order, x);
    case OscillationStrategy::ZeroIntervals:
      return x > 0.0 ? zero_intervals(order, x, false) : direct(order, x);
    case OscillationStrategy::Auto: break;
  }
  return x <= config_.direct_radius ? direct(order, x) : zero_intervals(order, x, true);
}

KernelValue KernelEvaluator::direct(int order, double x) const {
  const double step = std::min(1.0, kPi / std::max(x, 1e-300));
  std::vector<double> breaks;
  for (double b = step; b < cutoff_; b += step) breaks.push_back(b);
  quad::Options opt;
  opt.abs_tol = config_.quad_tol * kPi;
  opt.max_panels = 40000;
  auto integrand = [&](double xi) { return oscillatory_factor(order, xi, x) * weight(xi); };
  const auto r = quad::integrate(integrand, 0.0, cutoff_, breaks, opt);
  return {r.value / kPi, r.abs_error / kPi + tail_bound(order)};
}

// Integrates between consecutive zeros of the oscillatory factor. The signed
// panel integrals form an alternating series; its Euler transform is allowed
// to end the sum early once it has settled.
KernelValue KernelEvaluator::zero_intervals(int order, double x, bool allow_early_exit) const {
  const double period = kPi / x;
  const double offset = (order == 1) ? 0.0 : 0.5;  // zeros of sin vs cos
  auto integrand = [&](double xi) { return oscillatory_factor(order, xi, x) * weight(xi); };

  quad::Options opt;
  opt.rel_tol = 1e-14;
  opt.max_panels = 400;
  const double per_panel_tol = config_.quad_tol * kPi * period / cutoff_;
  opt.abs_tol = per_panel_tol;

  CompensatedSum plain;
  quad::EulerAccelerator euler;
  double quad_err = 0.0;
  double prev_euler = std::numeric_limits<double>::quiet_NaN();
  double prev_term = 0.0;
  double window_change = 0.0;
  int settled = 0;
  constexpr int kSettle = 6;
  const double settle_tol = 0.1 * config_.quad_tol * kPi;
  constexpr long kMaxPanels = 20'000'000;

  double lo = 0.0;
  for (long j = 0;; ++j) {
    double hi = (static_cast<double>(j) + offset) * period;
    if (hi <= lo) continue;
    const bool last = hi >= cutoff_;
    if (last) hi = cutoff_;
    const auto r = quad::integrate(integrand, lo, hi, opt);
    plain.add(r.value);
    euler.add(r.value);
    quad_err += r.abs_error;

    if (allow_early_exit) {
      const double e = euler.sum();
      const double change = std::abs(e - prev_euler);
      const bool alternates = (r.value > 0.0) != (prev_term > 0.0);
      if (j >= config_.min_euler_terms && alternates && change <= settle_tol) {
        window_change = std::max(window_change, change);
        if (++settled >= kSettle) {
          return {e / kPi, (quad_err + 10.0 * window_change) / kPi + tail_bound(order)};
        }
      } else {
        settled = 0;
        window_change = 0.0;
      }
      prev_euler = e;
      prev_term = r.value;
    }
    if (last) break;
    if (j > kMaxPanels)
      return {plain.value() / kPi, std::numeric_limits<double>::infinity()};
    lo = hi;
  }
  return {plain.value() / kPi, quad_err / kPi + tail_bound(order)};
}

double KernelEvaluator::density(double x) const {
  const auto r = density_with_error(x);
  if (!(r.abs_error <= config_.abs_target))
    throw Error(ErrorCode::AccuracyNotReached,
                "density at x = " + fmt(x) + ": error estimate " + std::to_string(r.abs_error));
  return r.value;
}

double KernelEvaluator::gradient(double x) const {
  const auto r = gradient_with_error(x);
  if (!(r.abs_error <= config_.abs_target))
    throw Error(ErrorCode::AccuracyNotReached,
                "gradient at x = " + fmt(x) + ": error estimate " + std::to_string(r.abs_error));
  return r.value;
}

double density(const KernelEvaluator& ev, double x) { return ev.density(x); }
double gradient(const KernelEvaluator& ev, double x) { return ev.gradient(x); }

// --- closed forms -------------------------------------------------------------

CauchyValue cauchy_closed_form(double t, double x) {
  return {cauchy_derivative(0, t, x), cauchy_derivative(1, t, x)};
}

double cauchy_derivative(int m, double t, double x) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "time must be positive");
  const double c2 = kPi * kPi * t * t;
  const double d = c2 + x * x;
  switch (m) {
    case 0: return t / d;
    case 1: return -2.0 * t * x / (d * d);
    case 2: return t * (6.0 * x * x - 2.0 * c2) / (d * d * d);
    case 3: return 24.0 * t * x * (c2 - x * x) / (d * d * d * d);
    default: throw Error(ErrorCode::InvalidArgument, "cauchy_derivative supports m <= 3");
  }
}

namespace {

// log of phi(s, x) g_c(t, s) ds in s = e^u, for clock c.
double subordination_log_integrand(double c, double t, double x, double u) {
  const double s = std::exp(u);
  const double log_phi = -0.5 * std::log(2.0 * kPi * s) - x * x / (2.0 * s);
  const double log_g = std::log(c * t / (2.0 * std::sqrt(kPi))) - 1.5 * u - c * c * t * t / (4.0 * s);
  return log_phi + log_g + u;
}

double subordinated(double c, double t, double x) {
  return integrate_log_space(
      [&](double u) { return subordination_log_integrand(c, t, x, u); });
}

}  // namespace

double subordinator_clock() {
  // The subordinated law scales linearly with the clock, so p_c(1, 0) =
  // p_1(1, 0) / c and one evaluation fixes c.
  static const double clock = subordinated(1.0, 1.0, 0.0) * kPi * kPi;
  return clock;
}

double subordination_density_alpha1(double t, double x) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "time must be positive");
  return subordinated(subordinator_clock(), t, x);
}

double sharp_bound_integral(Alpha alpha, double t, double x) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "time must be positive");
  if (x == 0.0) throw Error(ErrorCode::InvalidArgument, "sharp bound integral needs x != 0");
  const double a = alpha.value();
  const double power = -2.0 - (1.0 + a) / 2.0 + 1.0;  // includes ds = s du
  auto phi = [&](double u) {
    return power * u - t * std::exp(-0.5 * a * u) - 0.5 * x * x * std::exp(-u);
  };
  return t * std::abs(x) * integrate_log_space(phi);
}

KappaSpec rescale_kappa(const KappaSpec& spec, Alpha alpha, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::InvalidArgument, "scaling factor must be positive");
  const double s = std::pow(lambda, -1.0 / alpha.value());
  if (const auto* b = std::get_if<SinglePairBump>(&spec)) {
    auto out = *b;
    out.a *= s;
    out.eps *= s;
    return out;
  }
  if (const auto* c = std::get_if<Cascade>(&spec)) {
    auto out = *c;
    out.scale *= s;
    return out;
  }
  if (const auto* tab = std::get_if<Tabulated>(&spec)) {
    auto out = *tab;
    for (auto& node : out.grid) node.first *= s;
    return out;
  }
  return spec;
}

// --- KernelTable ------------------------------------------------------------

KernelTable::KernelTable(const KernelEvaluator& ev, double extent, double spacing,
                         std::size_t max_nodes)
    : extent_(extent), h_(spacing) {
  if (!(spacing > 0.0) || !(extent > 0.0))
    throw Error(ErrorCode::InvalidArgument, "kernel table needs positive extent and spacing");
  const double count = std::ceil(extent / spacing) + 1.0;
  if (count > static_cast<double>(max_nodes))
    throw Error(ErrorCode::GridOverflow,
                "kernel table of extent " + fmt(extent) + " needs " + fmt(count) + " nodes");
  const auto n = static_cast<std::size_t>(count);
  extent_ = spacing * static_cast<double>(n - 1);
  p_.resize(n);
  dp_.resize(n);
  d2p_.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double x = spacing * static_cast<double>(j);
    const auto v0 = ev.density_with_error(x);
    const auto v1 = ev.gradient_with_error(x);
    const auto v2 = ev.second_derivative_with_error(x);
    p_[j] = v0.value;
    dp_[j] = v1.value;
    d2p_[j] = v2.value;
    max_node_error_ = std::max({max_node_error_, v0.abs_error, v1.abs_error, v2.abs_error});
  }
}

double KernelTable::hermite(const std::vector<double>& f, const std::vector<double>& df,
                            double x) const {
  if (x > extent_ * (1.0 + 1e-14))
    throw Error(ErrorCode::GridOverflow,
                "kernel table queried at " + fmt(x) + " beyond extent " + fmt(extent_));
  const double pos = std::min(x / h_, static_cast<double>(f.size() - 1));
  auto j = static_cast<std::size_t>(pos);
  if (j + 1 >= f.size()) return f.back();
  const double s = pos - static_cast<double>(j);
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1;
  const double h10 = s3 - 2 * s2 + s;
  const double h01 = -2 * s3 + 3 * s2;
  const double h11 = s3 - s2;
  return h00 * f[j] + h10 * h_ * df[j] + h01 * f[j + 1] + h11 * h_ * df[j + 1];
}

double KernelTable::density(double x) const { return hermite(p_, dp_, std::abs(x)); }

double KernelTable::gradient(double x) const {
  const double v = hermite(dp_, d2p_, std::abs(x));
  return x < 0.0 ? -v : v;
}

double KernelTable::node_sup(int m) const {
  const auto& v = m == 0 ? p_ : (m == 1 ? dp_ : d2p_);
  double s = 0.0;
  for (double e : v) s = std::max(s, std::abs(e));
  return s;
}

// --- sampled densities, convolution and mass ----------------------------------

namespace {

// Solves for c in sum_k c_k y_i^{-1-k alpha} = p_i, k = 1..3, rows scaled by
// y_i^{1+alpha}.
std::array<double, 3> fit_power_tail(double alpha, const std::array<double, 3>& y,
                                     const std::array<double, 3>& p) {
  double m[3][4];
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 3; ++k) m[i][k] = std::pow(y[i], -k * alpha);
    m[i][3] = p[i] * std::pow(y[i], 1.0 + alpha);
  }
  for (int col = 0; col < 3; ++col) {
    int piv = col;
    for (int r = col + 1; r < 3; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    for (int k = 0; k < 4; ++k) std::swap(m[col][k], m[piv][k]);
    for (int r = 0; r < 3; ++r) {
      if (r == col) continue;
      const double f = m[r][col] / m[col][col];
      for (int k = col; k < 4; ++k) m[r][k] -= f * m[col][k];
    }
  }
  return {m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]};
}

}  // namespace

double SampledDensity::tail_model(double y) const {
  y = std::abs(y);
  double v = 0.0;
  for (int k = 0; k < 3; ++k) v += tail[k] * std::pow(y, -1.0 - (k + 1) * alpha);
  return v;
}

double SampledDensity::at(long j) const {
  const auto idx = static_cast<std::size_t>(j < 0 ? -j : j);
  if (idx < values.size()) return values[idx];
  return tail_model(spacing * static_cast<double>(idx));
}

SampledDensity sample_density(const KernelEvaluator& ev, double spacing, double extent) {
  SampledDensity out;
  out.spacing = spacing;
  out.alpha = ev.symbol().alpha().value();
  const auto n = static_cast<std::size_t>(std::llround(extent / spacing));
  out.values.resize(n + 1);
  for (std::size_t j = 0; j <= n; ++j) out.values[j] = ev.density(spacing * static_cast<double>(j));
  const double L = spacing * static_cast<double>(n);
  const std::array<double, 3> ps{out.values[n / 4], out.values[n / 2], out.values[n]};
  const std::array<double, 3> ys{spacing * static_cast<double>(n / 4),
                                 spacing * static_cast<double>(n / 2), L};
  const auto c = fit_power_tail(out.alpha, ys, ps);
  for (int k = 0; k < 3; ++k) out.tail[k] = c[k];
  return out;
}

double convolve_sampled(const SampledDensity& a, const SampledDensity& b, long node,
                        double reach) {
  if (a.spacing != b.spacing)
    throw Error(ErrorCode::InvalidArgument, "sampled densities must share the grid spacing");
  const auto n = static_cast<long>(std::max(a.values.size(), b.values.size()));
  const long m = static_cast<long>(reach * static_cast<double>(n)) + std::labs(node);
  CompensatedSum sum;
  for (long j = -m; j <= m; ++j) sum.add(a.at(j) * b.at(node - j));
  return sum.value() * a.spacing;
}

MassBreakdown total_mass(const KernelEvaluator& ev, double core, double far) {
  MassBreakdown out;
  const double alpha = ev.symbol().alpha().value();

  std::vector<double> breaks;
  for (double b = 0.5; b < core; b += 0.5) breaks.push_back(b);
  quad::Options opt;
  opt.abs_tol = 1e-11;
  opt.max_panels = 4000;
  const auto rc = quad::integrate([&](double x) { return ev.density(x); }, 0.0, core, breaks, opt);
  out.core = 2.0 * rc.value;

  const double ulo = std::log(core);
  const double uhi = std::log(far);
  std::vector<double> ubreaks;
  for (double u = ulo + 0.5; u < uhi; u += 0.5) ubreaks.push_back(u);
  const auto rm = quad::integrate(
      [&](double u) {
        const double x = std::exp(u);
        return ev.density(x) * x;
      },
      ulo, uhi, ubreaks, opt);
  out.middle = 2.0 * rm.value;

  const std::array<double, 3> ys{0.25 * far, 0.5 * far, far};
  const std::array<double, 3> ps{ev.density(ys[0]), ev.density(ys[1]), ev.density(ys[2])};
  const auto c = fit_power_tail(alpha, ys, ps);
  double tail = 0.0;
  for (int k = 0; k < 3; ++k) tail += c[k] * std::pow(far, -(k + 1) * alpha) / ((k + 1) * alpha);
  out.far_tail = 2.0 * tail;
  out.abs_error = 2.0 * (rc.abs_error + rm.abs_error);
  return out;
}

}  // namespace stablegrad
