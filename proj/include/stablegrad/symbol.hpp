#pragma once

// Coefficient functions kappa and the Levy symbol of the jump measure
// kappa(y)|y|^{-1-alpha} dy in one dimension.

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace stablegrad {

/// Stability index, 0 < alpha < 2.
class Alpha {
 public:
  explicit Alpha(double value);
  double value() const noexcept { return value_; }

 private:
  double value_;
};

enum class BumpShape {
  Indicator,   // h = 1 on [-1/2, 1/2]
  SmoothBump,  // C exp(-1/(1-u^2)) on (-1, 1), unit integral
};

/// h(u) for the given shape; 0 <= h <= 1, supp h in [-1, 1], int h = 1.
double bump_value(BumpShape shape, double u) noexcept;
/// Half-width of supp h: 1/2 for Indicator, 1 for SmoothBump.
double bump_half_width(BumpShape shape) noexcept;
/// Normalisation C of the smooth bump.
double smooth_bump_normalisation();

struct Constant {
  double c = 1.0;
};

/// base + h((a - y)/eps) + h((a + y)/eps)
struct SinglePairBump {
  double base = 1.0;
  BumpShape bump = BumpShape::Indicator;
  double a = 0.0;
  double eps = 0.0;
};

/// base + sum_{k=1..levels} [h((A_k - y)/eps) + h((A_k + y)/eps)] with
/// A_1 = A, A_{k+1} = (A_k + eps)^2. `scale` multiplies every position and
/// width after the recursion; it is 1 except for rescaled specs.
struct Cascade {
  double base = 1.0;
  BumpShape bump = BumpShape::Indicator;
  double A = 0.0;
  double eps = 0.0;
  int levels = 0;
  double scale = 1.0;
};

/// Piecewise-linear kappa on sorted nodes y >= 0, even extension, and the
/// last value beyond the table.
struct Tabulated {
  std::vector<std::pair<double, double>> grid;
};

using KappaSpec = std::variant<Constant, SinglePairBump, Cascade, Tabulated>;

/// One symmetric bump pair h((centre - y)/eps) + h((centre + y)/eps).
struct BumpPair {
  double centre = 0.0;
  double eps = 0.0;
  BumpShape shape = BumpShape::Indicator;
};

/// A_1..A_levels of the cascade recursion.
std::vector<double> cascade_positions(double A, double eps, int levels);

/// Constant part of kappa: c, base, or the tail value of a table.
double base_level(const KappaSpec& spec);
/// The bump pairs of a bump variant (empty for Constant / Tabulated).
std::vector<BumpPair> bump_pairs(const KappaSpec& spec);
/// inf kappa; used to bound |psi| from below.
double kappa_lower_bound(const KappaSpec& spec);

double eval_kappa(const KappaSpec& spec, double y);

struct ValidationResult {
  double K0 = 1.0;
  double min_value = 0.0;
  double max_value = 0.0;
  int probes = 0;
  std::vector<std::string> notes;
};

/// Throws Error(BoundsViolated | OverlappingBumps | InvalidArgument).
ValidationResult validate_kappa_spec(const KappaSpec& spec, Alpha alpha,
                                     std::optional<double> declared_K0 = std::nullopt);

/// c_alpha = 2 int_0^inf (1 - cos u) u^{-1-alpha} du, so that kappa == 1 has
/// symbol -c_alpha |xi|^alpha. Closed form 2 Gamma(2-alpha) sin(pi(1-alpha)/2)
/// / ((1-alpha) alpha), continuous through alpha = 1 where it equals pi.
double stable_constant(Alpha alpha);

struct SymbolConfig {
  double abs_tol = 1e-12;
};

/// psi(xi) = int (cos(xi y) - 1) kappa(y) |y|^{-1-alpha} dy for even kappa.
class LevySymbol {
 public:
  LevySymbol(Alpha alpha, KappaSpec kappa, SymbolConfig config = {});

  double operator()(double xi) const;

  /// -c_alpha * base * |xi|^alpha
  double stable_part(double xi) const;
  /// Bounded-support remainder: psi - stable_part.
  double correction(double xi) const;

  /// psi(xi) <= -decay_rate() * |xi|^alpha for all xi.
  double decay_rate() const noexcept { return c_alpha_ * kappa_min_; }

  Alpha alpha() const noexcept { return alpha_; }
  const KappaSpec& kappa() const noexcept { return kappa_; }
  const SymbolConfig& config() const noexcept { return config_; }
  double c_alpha() const noexcept { return c_alpha_; }
  double base() const noexcept { return base_; }
  bool has_correction() const noexcept;

 private:
  double tabulated_correction(double xi) const;

  Alpha alpha_;
  KappaSpec kappa_;
  SymbolConfig config_;
  double c_alpha_;
  double base_;
  double kappa_min_;
  std::vector<BumpPair> pairs_;
};

double eval_symbol(const LevySymbol& sym, double xi);

}  // namespace stablegrad
