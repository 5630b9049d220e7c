#include "stablegrad/symbol.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "stablegrad/error.hpp"
#include "stablegrad/quadrature.hpp"

namespace stablegrad {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double smooth_bump_raw(double u) {
  const double s = 1.0 - u * u;
  return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

// Linear interpolation in a table with nodes y_0 < y_1 < ...
double table_value(const Tabulated& t, double y) {
  const auto& g = t.grid;
  y = std::abs(y);
  if (y <= g.front().first) return g.front().second;
  if (y >= g.back().first) return g.back().second;
  auto it = std::upper_bound(g.begin(), g.end(), y,
                             [](double v, const auto& node) { return v < node.first; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  const double w = (y - lo.first) / (hi.first - lo.first);
  return lo.second + w * (hi.second - lo.second);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

Alpha::Alpha(double value) : value_(value) {
  if (!(value > 0.0 && value < 2.0))
    throw Error(ErrorCode::InvalidArgument,
                "stability index must satisfy 0 < alpha < 2, got " + fmt(value));
}

double smooth_bump_normalisation() {
  static const double norm = [] {
    quad::Options opt;
    opt.abs_tol = 1e-16;
    const auto r = quad::integrate(smooth_bump_raw, -1.0, 1.0, opt);
    return 1.0 / r.value;
  }();
  return norm;
}

double bump_value(BumpShape shape, double u) noexcept {
  switch (shape) {
    case BumpShape::Indicator:
      return std::abs(u) <= 0.5 ? 1.0 : 0.0;
    case BumpShape::SmoothBump:
      return smooth_bump_normalisation() * smooth_bump_raw(u);
  }
  return 0.0;
}

double bump_half_width(BumpShape shape) noexcept {
  return shape == BumpShape::Indicator ? 0.5 : 1.0;
}

std::vector<double> cascade_positions(double A, double eps, int levels) {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(std::max(levels, 0)));
  double Ak = A;
  for (int k = 0; k < levels; ++k) {
    out.push_back(Ak);
    Ak = (Ak + eps) * (Ak + eps);
  }
  return out;
}

double base_level(const KappaSpec& spec) {
  return std::visit(Overloaded{
                        [](const Constant& c) { return c.c; },
                        [](const SinglePairBump& s) { return s.base; },
                        [](const Cascade& c) { return c.base; },
                        [](const Tabulated& t) {
                          return t.grid.empty() ? 0.0 : t.grid.back().second;
                        },
                    },
                    spec);
}

std::vector<BumpPair> bump_pairs(const KappaSpec& spec) {
  return std::visit(
      Overloaded{
          [](const Constant&) { return std::vector<BumpPair>{}; },
          [](const SinglePairBump& s) {
            return std::vector<BumpPair>{{s.a, s.eps, s.bump}};
          },
          [](const Cascade& c) {
            std::vector<BumpPair> out;
            for (double Ak : cascade_positions(c.A, c.eps, c.levels))
              out.push_back({Ak * c.scale, c.eps * c.scale, c.bump});
            return out;
          },
          [](const Tabulated&) { return std::vector<BumpPair>{}; },
      },
      spec);
}

double kappa_lower_bound(const KappaSpec& spec) {
  if (const auto* t = std::get_if<Tabulated>(&spec)) {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& [y, k] : t->grid) m = std::min(m, k);
    return m;
  }
  return base_level(spec);
}

double eval_kappa(const KappaSpec& spec, double y) {
  if (const auto* t = std::get_if<Tabulated>(&spec)) return table_value(*t, y);
  double value = base_level(spec);
  for (const auto& p : bump_pairs(spec))
    value += bump_value(p.shape, (p.centre - y) / p.eps) +
             bump_value(p.shape, (p.centre + y) / p.eps);
  return value;
}

ValidationResult validate_kappa_spec(const KappaSpec& spec, Alpha alpha,
                                     std::optional<double> declared_K0) {
  ValidationResult res;
  std::vector<double> probes;

  if (const auto* t = std::get_if<Tabulated>(&spec)) {
    if (t->grid.empty())
      throw Error(ErrorCode::InvalidArgument, "tabulated kappa needs at least one node");
    if (t->grid.front().first < 0.0)
      throw Error(ErrorCode::InvalidArgument, "tabulated kappa nodes must satisfy y >= 0");
    for (std::size_t i = 0; i < t->grid.size(); ++i) {
      const auto [y, k] = t->grid[i];
      if (!std::isfinite(y) || !std::isfinite(k))
        throw Error(ErrorCode::InvalidArgument, "tabulated kappa has a non-finite entry");
      if (i > 0 && !(y > t->grid[i - 1].first))
        throw Error(ErrorCode::InvalidArgument, "tabulated kappa nodes must be strictly increasing");
      probes.push_back(y);
      if (i > 0) probes.push_back(0.5 * (y + t->grid[i - 1].first));
    }
    probes.push_back(t->grid.back().first + 1.0);
  } else {
    const auto pairs = bump_pairs(spec);
    for (const auto& p : pairs) {
      if (!(p.eps > 0.0) || !std::isfinite(p.centre) || !std::isfinite(p.eps))
        throw Error(ErrorCode::InvalidArgument, "bump position and width must be finite, eps > 0");
    }
    if (const auto* c = std::get_if<Cascade>(&spec); c && c->levels < 0)
      throw Error(ErrorCode::InvalidArgument, "cascade levels must be >= 0");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const auto& p = pairs[i];
      if (p.centre - p.eps <= 1.0)
        throw Error(ErrorCode::OverlappingBumps,
                    "bump support [" + fmt(p.centre - p.eps) + ", " + fmt(p.centre + p.eps) +
                        "] meets [-1, 1]");
      if (i > 0 && pairs[i - 1].centre + pairs[i - 1].eps >= p.centre - p.eps)
        throw Error(ErrorCode::OverlappingBumps,
                    "bump supports around " + fmt(pairs[i - 1].centre) + " and " +
                        fmt(p.centre) + " intersect");
    }
    double reach = 2.0;
    for (const auto& p : pairs) {
      reach = std::max(reach, p.centre + p.eps + 1.0);
      constexpr int kLocal = 200;
      for (int j = 0; j <= kLocal; ++j)
        probes.push_back(p.centre - p.eps + 2.0 * p.eps * j / kLocal);
      probes.push_back(p.centre);
    }
    constexpr int kGlobal = 1000;
    for (int j = 0; j <= kGlobal; ++j) probes.push_back(reach * j / kGlobal);
  }

  res.min_value = std::numeric_limits<double>::infinity();
  res.max_value = -std::numeric_limits<double>::infinity();
  for (double y : probes) {
    const double k = eval_kappa(spec, y);
    if (k != eval_kappa(spec, -y))
      throw Error(ErrorCode::InvalidArgument, "kappa is not even at y = " + fmt(y));
    res.min_value = std::min(res.min_value, k);
    res.max_value = std::max(res.max_value, k);
  }
  res.probes = static_cast<int>(probes.size());

  if (!(res.min_value > 0.0))
    throw Error(ErrorCode::BoundsViolated,
                "kappa must be bounded below by a positive constant, min = " + fmt(res.min_value));
  res.K0 = std::max({1.0, res.max_value, 1.0 / res.min_value});
  if (declared_K0) {
    const double K0 = *declared_K0;
    constexpr double slack = 1e-12;
    if (K0 < 1.0 || res.min_value < 1.0 / K0 - slack || res.max_value > K0 + slack)
      throw Error(ErrorCode::BoundsViolated,
                  "kappa range [" + fmt(res.min_value) + ", " + fmt(res.max_value) +
                      "] escapes [1/K0, K0] with K0 = " + fmt(K0));
    res.K0 = K0;
  }

  res.notes.push_back("even by construction");
  if (alpha.value() == 1.0)
    res.notes.push_back("alpha = 1: evenness cancels the odd moment of the truncated jump measure");
  return res;
}

double stable_constant(Alpha alpha) {
  const double a = alpha.value();
  const double e = 1.0 - a;
  // sin(pi e / 2) / e, evaluated stably near e = 0.
  const double z = 0.5 * kPi * e;
  const double sinc = std::abs(z) < 1e-4 ? 1.0 - z * z / 6.0 : std::sin(z) / z;
  return 2.0 * std::tgamma(2.0 - a) * 0.5 * kPi * sinc / a;
}

LevySymbol::LevySymbol(Alpha alpha, KappaSpec kappa, SymbolConfig config)
    : alpha_(alpha),
      kappa_(std::move(kappa)),
      config_(config),
      c_alpha_(stable_constant(alpha)),
      base_(base_level(kappa_)),
      kappa_min_(kappa_lower_bound(kappa_)),
      pairs_(bump_pairs(kappa_)) {}

bool LevySymbol::has_correction() const noexcept {
  if (!pairs_.empty()) return true;
  if (const auto* t = std::get_if<Tabulated>(&kappa_)) {
    for (const auto& [y, k] : t->grid)
      if (k != base_) return true;
  }
  return false;
}

double LevySymbol::stable_part(double xi) const {
  return -c_alpha_ * base_ * std::pow(std::abs(xi), alpha_.value());
}

double LevySymbol::correction(double xi) const {
  xi = std::abs(xi);
  if (xi == 0.0) return 0.0;
  if (std::holds_alternative<Tabulated>(kappa_)) return tabulated_correction(xi);

  const double a = alpha_.value();
  quad::Options opt;
  opt.abs_tol = config_.abs_tol / std::max<std::size_t>(1, pairs_.size());
  double total = 0.0;
  for (const auto& p : pairs_) {
    const double w = p.eps * bump_half_width(p.shape);
    auto integrand = [&](double y) {
      const double s = std::sin(0.5 * xi * y);
      return -2.0 * s * s * bump_value(p.shape, (p.centre - y) / p.eps) * std::pow(y, -1.0 - a);
    };
    const auto r = quad::integrate(integrand, p.centre - w, p.centre + w, opt);
    if (!r.converged)
      throw Error(ErrorCode::QuadratureFailure,
                  "bump correction of the symbol at xi = " + fmt(xi) + ", error " + fmt(r.abs_error));
    total += 2.0 * r.value;
  }
  return total;
}

// 2 int_0^Ymax (cos(xi y) - 1)(kappa(y) - kappa_last) y^{-1-alpha} dy.
// Below r0 = min(1, 1/xi) the cosine series is integrated term by term
// against each linear piece; |xi y| <= 1 there, so 12 terms leave a
// remainder below 1/26!.
double LevySymbol::tabulated_correction(double xi) const {
  const auto& g = std::get<Tabulated>(kappa_).grid;
  const double a = alpha_.value();
  const double r0 = std::min(1.0, 1.0 / xi);

  // Linear pieces of kappa - base on [0, Ymax], including a flat lead-in
  // from 0 to the first node.
  struct Piece {
    double lo, hi, c0, c1;  // value = c0 + c1 * y
  };
  std::vector<Piece> pieces;
  if (g.front().first > 0.0) pieces.push_back({0.0, g.front().first, g.front().second - base_, 0.0});
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    const auto [y0, k0] = g[i];
    const auto [y1, k1] = g[i + 1];
    const double slope = (k1 - k0) / (y1 - y0);
    pieces.push_back({y0, y1, (k0 - base_) - slope * y0, slope});
  }

  constexpr int kTerms = 12;
  double series = 0.0;
  double outer = 0.0;
  quad::Options opt;
  opt.abs_tol = config_.abs_tol / std::max<std::size_t>(1, pieces.size());
  for (const auto& p : pieces) {
    if (p.c0 == 0.0 && p.c1 == 0.0) continue;
    const double lo = std::min(p.lo, r0);
    const double hi = std::min(p.hi, r0);
    if (hi > lo) {
      double coef = 1.0;  // (-1)^j xi^{2j} / (2j)!
      for (int j = 1; j <= kTerms; ++j) {
        coef *= -xi * xi / ((2.0 * j - 1.0) * (2.0 * j));
        const double e0 = 2.0 * j - a;
        const double e1 = 2.0 * j + 1.0 - a;
        series += coef * (p.c0 * (std::pow(hi, e0) - std::pow(lo, e0)) / e0 +
                          p.c1 * (std::pow(hi, e1) - std::pow(lo, e1)) / e1);
      }
    }
    const double olo = std::max(p.lo, r0);
    if (p.hi > olo) {
      auto integrand = [&](double y) {
        const double s = std::sin(0.5 * xi * y);
        return -2.0 * s * s * (p.c0 + p.c1 * y) * std::pow(y, -1.0 - a);
      };
      const auto r = quad::integrate(integrand, olo, p.hi, opt);
      if (!r.converged)
        throw Error(ErrorCode::QuadratureFailure,
                    "tabulated symbol at xi = " + fmt(xi) + ", error " + fmt(r.abs_error));
      outer += r.value;
    }
  }
  return 2.0 * (series + outer);
}

double LevySymbol::operator()(double xi) const {
  if (xi == 0.0) return 0.0;
  return stable_part(xi) + correction(xi);
}

double eval_symbol(const LevySymbol& sym, double xi) { return sym(xi); }

}  // namespace stablegrad
