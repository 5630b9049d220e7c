#include "stablegrad/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "stablegrad/error.hpp"
#include "stablegrad/quadrature.hpp"

namespace stablegrad {

namespace {

constexpr double kPi = std::numbers::pi;

std::string fmt(double v) { return std::to_string(v); }

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

double half_support(const BumpPair& p) { return p.eps * bump_half_width(p.shape); }

// f(y) |y|^{-1-alpha} for y > 0 restricted to one bump.
double bump_intensity(const BumpPair& p, double alpha, double y) {
  return bump_value(p.shape, (p.centre - y) / p.eps) * std::pow(y, -1.0 - alpha);
}

double bump_integral(const BumpPair& p, double alpha, double lo, double hi,
                     bool first_moment = false) {
  quad::Options opt;
  opt.abs_tol = 0.0;
  opt.rel_tol = 1e-15;
  opt.max_panels = 200;
  const auto r = quad::integrate(
      [&](double y) { return bump_intensity(p, alpha, y) * (first_moment ? y : 1.0); }, lo, hi,
      opt);
  return r.value;
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace

// --- BaseKernel ---------------------------------------------------------------

BaseKernel BaseKernel::cauchy(double t) {
  if (!(t > 0.0)) throw Error(ErrorCode::InvalidArgument, "time must be positive");
  BaseKernel b;
  b.source_ = Source::CauchyClosedForm;
  b.alpha_ = 1.0;
  b.t_ = t;
  b.decay_ = t * kPi;
  b.reach_ = std::numeric_limits<double>::infinity();
  return b;
}

BaseKernel BaseKernel::fourier(std::shared_ptr<const KernelEvaluator> ev) {
  BaseKernel b;
  b.source_ = Source::Fourier;
  b.alpha_ = ev->symbol().alpha().value();
  b.t_ = ev->t();
  b.decay_ = ev->t() * ev->symbol().decay_rate();
  b.reach_ = std::numeric_limits<double>::infinity();
  b.evaluator_ = std::move(ev);
  return b;
}

BaseKernel BaseKernel::table(std::shared_ptr<const KernelEvaluator> ev, double extent,
                             double spacing) {
  BaseKernel b = fourier(std::move(ev));
  b.source_ = Source::Table;
  b.table_ = std::make_shared<const KernelTable>(*b.evaluator_, extent, spacing);
  b.reach_ = b.table_->extent();
  return b;
}

BaseKernel BaseKernel::for_kappa(Alpha alpha, const KappaSpec& kappa, double extent,
                                 double spacing) {
  const auto* c = std::get_if<Constant>(&kappa);
  if (alpha.value() == 1.0 && c && c->c == 1.0) return cauchy(1.0);
  auto ev = std::make_shared<const KernelEvaluator>(LevySymbol(alpha, kappa), 1.0);
  return table(std::move(ev), extent, spacing);
}

double BaseKernel::value(int order, double x) const {
  switch (source_) {
    case Source::CauchyClosedForm: return cauchy_derivative(order, t_, x);
    case Source::Fourier:
      return order == 0 ? evaluator_->density_with_error(x).value
                        : evaluator_->gradient_with_error(x).value;
    case Source::Table: return order == 0 ? table_->density(x) : table_->gradient(x);
  }
  return 0.0;
}

double BaseKernel::sup_bound(int m) const {
  const double s = (m + 1.0) / alpha_;
  return std::tgamma(s) / (kPi * alpha_ * std::pow(decay_, s));
}

double BaseKernel::sup_bound_on(int m, double lo, double hi) const {
  if (source_ != Source::CauchyClosedForm) return sup_bound(m);
  // |p^{(m)}(z)| <= m! t / (c (c^2 + z^2)^{(m+1)/2}), c = pi t
  const double d = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
  const double c = kPi * t_;
  return std::tgamma(m + 1.0) * t_ / (c * std::pow(c * c + d * d, 0.5 * (m + 1)));
}

double BaseKernel::evaluation_error(int order) const {
  switch (source_) {
    case Source::CauchyClosedForm:
      return 4.0 * std::numeric_limits<double>::epsilon() * sup_bound(order);
    case Source::Fourier: return evaluator_->config().abs_target;
    case Source::Table: {
      const double h = table_->spacing();
      return table_->max_node_error() + std::pow(h, 4) / 384.0 * sup_bound(order + 4);
    }
  }
  return 0.0;
}

// --- intensity and jump law ---------------------------------------------------

std::vector<BumpPair> perturbation_pairs(const KappaSpec& f) {
  if (const auto* c = std::get_if<Constant>(&f)) {
    if (c->c != 0.0)
      throw Error(ErrorCode::DivergentIntensity,
                  "a constant perturbation has infinite intensity; only Constant(0) is allowed");
    return {};
  }
  if (std::holds_alternative<Tabulated>(f))
    throw Error(ErrorCode::InvalidArgument, "tabulated perturbations are not supported");
  return bump_pairs(f);
}

double jump_intensity(const std::vector<BumpPair>& f, Alpha alpha) {
  const double a = alpha.value();
  double lambda = 0.0;
  for (const auto& p : f) {
    const double w = half_support(p);
    const double lo = p.centre - w;
    if (!(lo > 0.0))
      throw Error(ErrorCode::DivergentIntensity,
                  "bump support [" + fmt(lo) + ", " + fmt(p.centre + w) + "] reaches the origin");
    if (p.shape == BumpShape::Indicator) {
      // (lo^{-a} - hi^{-a}) / a without cancellation
      lambda += -2.0 * std::pow(lo, -a) * std::expm1(-a * std::log1p(2.0 * w / lo)) / a;
    } else {
      lambda += 2.0 * bump_integral(p, a, lo, p.centre + w);
    }
  }
  return lambda;
}

double jump_intensity(const KappaSpec& f, Alpha alpha) {
  return jump_intensity(perturbation_pairs(f), alpha);
}

double GridMeasure::total() const {
  CompensatedSum s;
  for (double m : mass) s.add(m);
  return s.value();
}

double GridMeasure::mean() const {
  CompensatedSum s;
  for (std::size_t i = 0; i < mass.size(); ++i) s.add(mass[i] * node(i));
  return s.value() / total();
}

double GridMeasure::mass_in(double lo, double hi) const {
  CompensatedSum s;
  for (std::size_t i = 0; i < mass.size(); ++i) {
    const double y = node(i);
    if (y >= lo && y <= hi) s.add(mass[i]);
  }
  return s.value();
}

JumpLaw::JumpLaw(std::vector<BumpPair> f, Alpha alpha, JumpLawConfig config)
    : pairs_(std::move(f)), alpha_(alpha.value()), config_(config) {
  lambda_ = jump_intensity(pairs_, alpha);
  if (pairs_.empty()) return;

  double min_eps = std::numeric_limits<double>::infinity();
  for (const auto& p : pairs_) {
    min_eps = std::min(min_eps, p.eps);
    reach_ = std::max(reach_, p.centre + half_support(p));
  }
  const double h = config_.spacing > 0.0 ? config_.spacing : min_eps / 50.0;
  const long J = static_cast<long>(std::ceil(reach_ / h)) + 2;
  if (static_cast<double>(2 * J + 1) > static_cast<double>(config_.max_nodes))
    throw Error(ErrorCode::GridOverflow, "jump law grid needs " + fmt(2.0 * J + 1) + " nodes");
  grid_.spacing = h;
  grid_.first = -J;
  grid_.mass.assign(static_cast<std::size_t>(2 * J + 1), 0.0);

  // Cell masses and means on the y > 0 side, deposited on the two nearest
  // nodes so that mass and first moment are kept; mirrored onto y < 0.
  std::vector<double> positive(static_cast<std::size_t>(J + 1), 0.0);
  for (const auto& p : pairs_) {
    const double lo = p.centre - half_support(p);
    const double hi = p.centre + half_support(p);
    const long j0 = static_cast<long>(std::floor(lo / h + 0.5));
    const long j1 = static_cast<long>(std::floor(hi / h + 0.5));
    for (long j = j0; j <= j1; ++j) {
      const double a = std::max(lo, (static_cast<double>(j) - 0.5) * h);
      const double b = std::min(hi, (static_cast<double>(j) + 0.5) * h);
      if (!(b > a)) continue;
      const double m = bump_integral(p, alpha_, a, b);
      if (m <= 0.0) continue;
      const double mu = bump_integral(p, alpha_, a, b, true) / m;
      const double u = mu / h - static_cast<double>(j);
      const long nb = u >= 0.0 ? j + 1 : j - 1;
      const double share = std::min(1.0, std::abs(u));
      positive[static_cast<std::size_t>(j)] += m * (1.0 - share) / lambda_;
      positive[static_cast<std::size_t>(nb)] += m * share / lambda_;
    }
  }
  for (long j = 1; j <= J; ++j) {
    const double m = positive[static_cast<std::size_t>(j)];
    grid_.mass[static_cast<std::size_t>(J + j)] += m;
    grid_.mass[static_cast<std::size_t>(J - j)] += m;
  }
  for (std::size_t i = 0; i < grid_.mass.size(); ++i)
    if (grid_.mass[i] != 0.0) support_.push_back(i);

  double cum = 0.0;
  for (const auto& p : pairs_) {
    const double lo = p.centre - half_support(p);
    const double hi = p.centre + half_support(p);
    const double w = (hi - lo) / static_cast<double>(config_.cdf_cells);
    for (std::size_t c = 0; c < config_.cdf_cells; ++c) {
      const double a = lo + w * static_cast<double>(c);
      const double b = c + 1 == config_.cdf_cells ? hi : a + w;
      cum += bump_integral(p, alpha_, a, b) / lambda_;
      cell_lo_.push_back(a);
      cell_hi_.push_back(b);
      cdf_.push_back(cum);
    }
  }
}

double JumpLaw::density(double y) const {
  if (lambda_ == 0.0) return 0.0;
  const double ay = std::abs(y);
  double v = 0.0;
  for (const auto& p : pairs_) {
    if (std::abs(ay - p.centre) <= half_support(p)) v += bump_intensity(p, alpha_, ay);
  }
  return v / lambda_;
}

GridMeasure JumpLaw::convolve(const GridMeasure& m) const {
  if (pairs_.empty())
    throw Error(ErrorCode::InvalidArgument, "the zero perturbation has no jump law");
  const long q_first = grid_.first;
  const long q_last = grid_.first + static_cast<long>(grid_.mass.size()) - 1;
  GridMeasure out;
  out.spacing = grid_.spacing;
  out.first = m.first + q_first;
  const long last = m.first + static_cast<long>(m.mass.size()) - 1 + q_last;
  const auto size = static_cast<std::size_t>(last - out.first + 1);
  if (size > config_.max_nodes)
    throw Error(ErrorCode::GridOverflow, "convolution power needs " + std::to_string(size) +
                                             " nodes, limit " + std::to_string(config_.max_nodes));
  out.mass.assign(size, 0.0);
  for (std::size_t i = 0; i < m.mass.size(); ++i) {
    const double mi = m.mass[i];
    if (mi == 0.0) continue;
    double* dst = out.mass.data() + i;
    for (std::size_t j : support_) dst[j] += mi * grid_.mass[j];
  }
  return out;
}

GridMeasure JumpLaw::convolution_power(int k) const {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "convolution power needs k >= 1");
  if (pairs_.empty())
    throw Error(ErrorCode::InvalidArgument, "the zero perturbation has no jump law");
  GridMeasure out = grid_;
  for (int i = 2; i <= k; ++i) out = convolve(out);
  return out;
}

double JumpLaw::sample(double u) const {
  if (pairs_.empty())
    throw Error(ErrorCode::InvalidArgument, "the zero perturbation has no jump law");
  const double sign = u < 0.5 ? -1.0 : 1.0;
  const double v = (u < 0.5 ? u : u - 0.5) * (cdf_.back() / 0.5);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), v);
  if (it == cdf_.end()) --it;
  const auto c = static_cast<std::size_t>(it - cdf_.begin());
  const double before = c == 0 ? 0.0 : cdf_[c - 1];
  const double width = cdf_[c] - before;
  const double s = width > 0.0 ? std::clamp((v - before) / width, 0.0, 1.0) : 0.5;
  return sign * (cell_lo_[c] + s * (cell_hi_[c] - cell_lo_[c]));
}

// --- Poisson weights ------------------------------------------------------------

double poisson_weight(double lambda, int k) {
  if (k < 0) return 0.0;
  if (lambda == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(-lambda + k * std::log(lambda) - std::lgamma(k + 1.0));
}

double poisson_tail(double lambda, int K) {
  if (lambda == 0.0 || K < 0) return K < 0 ? 1.0 : 0.0;
  if (K + 1 <= lambda) {
    double head = 0.0;
    for (int k = 0; k <= K; ++k) head += poisson_weight(lambda, k);
    return std::max(0.0, 1.0 - head);
  }
  double sum = 0.0;
  double term = poisson_weight(lambda, K + 1);
  for (int k = K + 1; term > 1e-18 * sum || k == K + 1; ++k) {
    sum += term;
    term *= lambda / (k + 1.0);
    if (term == 0.0) break;
  }
  return sum;
}

int poisson_truncation(double lambda, double tail) {
  int K = 0;
  while (poisson_tail(lambda, K) >= tail) {
    if (++K > 100000)
      throw Error(ErrorCode::TruncationInsufficient, "intensity " + fmt(lambda) + " too large");
  }
  return K;
}

StirlingCheck stirling_tail_check(Alpha alpha, double x, double lambda, double C) {
  StirlingCheck out;
  out.x = x;
  out.lambda = lambda;
  out.m = static_cast<int>(std::ceil(std::sqrt(std::abs(x)) / 2.0));
  out.tail = poisson_tail(lambda, out.m);
  out.bound = C * std::pow(std::abs(x), -2.0 - alpha.value());
  out.pass = out.tail <= out.bound;
  return out;
}

// --- series -------------------------------------------------------------------

PerturbationSeries::PerturbationSeries(Alpha alpha, BaseKernel base, std::vector<BumpPair> f,
                                       SeriesConfig config)
    : alpha_(alpha.value()),
      base_(std::move(base)),
      config_(config),
      law_(std::move(f), alpha, config.law) {
  const int needed = poisson_truncation(law_.lambda(), config_.tail_mass);
  if (config_.k_max) {
    if (*config_.k_max < needed)
      throw Error(ErrorCode::TruncationInsufficient,
                  "K_max = " + std::to_string(*config_.k_max) + " leaves Poisson tail " +
                      fmt(poisson_tail(law_.lambda(), *config_.k_max)) + ", need K_max >= " +
                      std::to_string(needed));
    k_max_ = *config_.k_max;
  } else {
    k_max_ = needed;
  }
  if (k_max_ > 200)
    throw Error(ErrorCode::TruncationInsufficient,
                "intensity " + fmt(law_.lambda()) + " needs more than 200 series terms");
  for (int k = 0; k <= k_max_; ++k) weights_.push_back(poisson_weight(law_.lambda(), k));
  truncated_mass_ = poisson_tail(law_.lambda(), k_max_);
  if (k_max_ >= 2) {
    powers_.push_back(law_.convolve(law_.grid()));
    for (int k = 3; k <= k_max_; ++k) powers_.push_back(law_.convolve(powers_.back()));
  }
}

double PerturbationSeries::first_term(double x, int order, int side) const {
  quad::Options opt;
  opt.abs_tol = config_.quad_tol * law_.lambda();
  opt.rel_tol = 1e-14;
  opt.max_panels = 400;
  CompensatedSum total;
  for (const auto& p : law_.pairs()) {
    const double lo = p.centre - half_support(p);
    const double hi = p.centre + half_support(p);
    auto integrand = [&](double y) {
      const double w = bump_intensity(p, alpha_, y);
      switch (side) {
        case 1: return w * base_.value(order, x - y);
        case -1: return w * base_.value(order, x + y);
        default: return w * (base_.value(order, x - y) + base_.value(order, x + y));
      }
    };
    total.add(quad::integrate(integrand, lo, hi, opt).value);
  }
  return total.value() / law_.lambda();
}

double PerturbationSeries::grid_term(int k, double x, int order) const {
  const auto& m = powers_.at(static_cast<std::size_t>(k - 2));
  CompensatedSum s;
  for (std::size_t i = 0; i < m.mass.size(); ++i) {
    if (m.mass[i] == 0.0) continue;
    s.add(m.mass[i] * base_.value(order, x - m.node(i)));
  }
  return s.value();
}

std::vector<double> PerturbationSeries::terms(double x, int order) const {
  if (order < 0 || order > 1)
    throw Error(ErrorCode::InvalidArgument, "series supports order 0 and 1");
  std::vector<double> out;
  out.push_back(base_.value(order, x));
  if (k_max_ >= 1) out.push_back(first_term(x, order, 0));
  for (int k = 2; k <= k_max_; ++k) out.push_back(grid_term(k, x, order));
  return out;
}

KernelValue PerturbationSeries::evaluate(double x, int order) const {
  const auto t = terms(x, order);
  CompensatedSum s;
  for (std::size_t k = 0; k < t.size(); ++k) s.add(weights_[k] * t[k]);
  double err = truncated_mass_ * base_.sup_bound(order) + base_.evaluation_error(order);
  if (k_max_ >= 1) err += weights_[1] * config_.quad_tol * base_.sup_bound(order);
  const double h = law_.spacing();
  for (int k = 2; k <= k_max_; ++k) {
    const double r = k * law_.reach();
    err += weights_[static_cast<std::size_t>(k)] * k * h * h / 8.0 *
           base_.sup_bound_on(order + 2, x - r, x + r);
  }
  return {s.value(), err};
}

JDecomposition PerturbationSeries::j_decomposition(double x) const {
  JDecomposition out;
  out.x = x;
  const auto t = terms(x, 1);
  out.J0 = weights_[0] * t[0];
  if (k_max_ >= 1) {
    out.J1 = weights_[1] * t[1];
    out.J1_plus = weights_[1] * first_term(x, 1, 1);
    out.J1_minus = weights_[1] * first_term(x, 1, -1);
  }
  CompensatedSum j2;
  for (int k = 2; k <= k_max_; ++k) j2.add(weights_[static_cast<std::size_t>(k)] * t[static_cast<std::size_t>(k)]);
  out.J2 = j2.value();
  out.abs_error = evaluate(x, 1).abs_error;
  return out;
}

PartialSums PerturbationSeries::partial_sums(double x, double split, int order) const {
  const auto t = terms(x, order);
  CompensatedSum low, high, full;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double v = weights_[k] * t[k];
    (static_cast<double>(k) <= split ? low : high).add(v);
    full.add(v);
  }
  return {low.value(), high.value(), full.value()};
}

// Chunked sampling: chunk c draws from an mt19937_64 seeded by the c-th output
// of a SplitMix64 stream started at `seed`; chunk statistics are merged with
// Chan's update, so the result does not depend on how chunks are scheduled.
MonteCarloEstimate PerturbationSeries::monte_carlo(double x, int order, std::uint64_t n,
                                                   std::uint64_t seed) const {
  if (n < 2) throw Error(ErrorCode::InvalidArgument, "Monte Carlo needs at least 2 samples");
  constexpr std::uint64_t kChunk = 1u << 16;
  const double lambda = law_.lambda();
  const double p0 = std::exp(-lambda);
  std::uint64_t stream = seed;

  double mean = 0.0;
  double m2 = 0.0;
  std::uint64_t count = 0;
  for (std::uint64_t done = 0; done < n; done += kChunk) {
    std::mt19937_64 gen(splitmix64(stream));
    const std::uint64_t len = std::min(kChunk, n - done);
    double cmean = 0.0;
    double cm2 = 0.0;
    for (std::uint64_t i = 0; i < len; ++i) {
      double y = 0.0;
      if (lambda > 0.0) {
        const double u = uniform01(gen);
        int K = 0;
        double p = p0;
        double F = p;
        while (u > F && K < 10000) {
          ++K;
          p *= lambda / K;
          F += p;
        }
        for (int j = 0; j < K; ++j) y += law_.sample(uniform01(gen));
      }
      const double v = base_.value(order, x - y);
      const double delta = v - cmean;
      cmean += delta / static_cast<double>(i + 1);
      cm2 += delta * (v - cmean);
    }
    const auto total = count + len;
    const double delta = cmean - mean;
    mean += delta * static_cast<double>(len) / static_cast<double>(total);
    m2 += cm2 + delta * delta * static_cast<double>(count) * static_cast<double>(len) /
                    static_cast<double>(total);
    count = total;
  }
  const double var = m2 / static_cast<double>(count - 1);
  return {mean, std::sqrt(var / static_cast<double>(count)), count};
}

double series_density(const PerturbationSeries& s, double x) { return s.density(x); }
double series_gradient(const PerturbationSeries& s, double x) { return s.gradient(x); }

MonteCarloEstimate mc_gradient(const PerturbationSeries& s, double x, std::uint64_t n,
                               std::uint64_t seed) {
  return s.monte_carlo(x, 1, n, seed);
}

JDecomposition j_decomposition(const PerturbationSeries& s, double z0, double a) {
  return s.j_decomposition(z0 + a);
}

KappaSpec combined_kappa(double base, const KappaSpec& f) {
  if (auto* b = std::get_if<SinglePairBump>(&f)) {
    auto out = *b;
    out.base = base;
    return out;
  }
  if (auto* c = std::get_if<Cascade>(&f)) {
    auto out = *c;
    out.base = base;
    return out;
  }
  if (auto* c = std::get_if<Constant>(&f); c && c->c == 0.0) return Constant{base};
  throw Error(ErrorCode::InvalidArgument, "perturbation must be a bump spec or Constant(0)");
}

}  // namespace stablegrad
