#include <cmath>
#include <numbers>

#include "doctest.h"
#include "stablegrad/counterexample.hpp"
#include "stablegrad/error.hpp"
#include "stablegrad/kernel.hpp"

using namespace stablegrad;
using std::numbers::pi;

namespace {

CounterexampleConfig quick(double eps = 0.2) {
  CounterexampleConfig c;
  c.eps = eps;
  c.mc_samples = 0;
  return c;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::IoFailure;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_NOTHROW(validate_config(quick()));
  CHECK_NOTHROW(validate_config(quick(0.25)));
  auto c = quick(0.3);
  CHECK(code_of([&] { validate_config(c); }) == ErrorCode::InvalidArgument);
  c = quick();
  c.z0 = 0.2;
  CHECK(code_of([&] { validate_config(c); }) == ErrorCode::InvalidArgument);
  c = quick();
  c.A = 1.5;
  CHECK(code_of([&] { validate_config(c); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("delta from the closed-form derivative") {
  auto grad = [](double x) { return -2.0 * x / std::pow(pi * pi + x * x, 2); };
  double ref = 1e300;
  for (int i = 0; i <= 200; ++i) ref = std::min(ref, grad(-0.7 + 0.4 * i / 200.0));
  const double d = estimate_delta(Alpha(1.0), -0.5, 0.2);
  CHECK(d == doctest::Approx(ref).epsilon(1e-9));
  CHECK(d == doctest::Approx(0.6 / std::pow(pi * pi + 0.09, 2)).epsilon(1e-9));
  CHECK(d == doctest::Approx(6.05e-3).epsilon(2e-3));
  CHECK(d > 0.0);
  const auto g = unit_gradient(Alpha(1.0));
  CHECK(g(0.3) == doctest::Approx(-g(-0.3)));
  CHECK(code_of([] { estimate_delta(Alpha(1.0), 0.5, 0.2); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("delta for alpha = 1.5 uses the fourier gradient") {
  KernelEvaluator ev(LevySymbol(Alpha(1.5), Constant{1.0}), 1.0);
  double ref = 1e300;
  for (int i = 0; i <= 200; ++i) ref = std::min(ref, ev.gradient(-0.7 + 0.4 * i / 200.0));
  CHECK(estimate_delta(Alpha(1.5), -0.5, 0.2) == doctest::Approx(ref).epsilon(1e-6));
}

TEST_CASE("gamma and A for kappa == 1") {
  const auto g = estimate_gamma_A(Alpha(1.0), Constant{1.0});
  CHECK(std::isfinite(g.gamma));
  CHECK(g.gamma >= g.sup_gradient);
  CHECK(g.gamma >= estimate_delta(Alpha(1.0), -0.5, 0.2));
  CHECK(g.sup_gradient >= estimate_delta(Alpha(1.0), -0.5, 0.2));
  CHECK(g.gamma <= 2.0 * 1.05 + 1e-12);
  for (double x = 2.0; x <= 200.0; x += 0.5)
    CHECK(2.0 * x / std::pow(pi * pi + x * x, 2) <= g.gamma * std::pow(x, -3.0));
  CHECK(g.A_valid <= 4.0);
}

TEST_CASE("gamma and A for a single bump") {
  const double a = 5.0;
  const auto g = estimate_gamma_A(Alpha(1.0), SinglePairBump{1.0, BumpShape::Indicator, a, 0.2});
  CHECK(std::isfinite(g.gamma));
  CHECK(g.A_valid <= a * a + 10.0);
}

TEST_CASE("single bump at a = 50") {
  auto c = quick();
  const auto r = lemma21_verify(c, 50.0);
  REQUIRE(r.levels.size() == 1);
  const auto& l = r.levels[0];
  CHECK(l.x == 49.5);
  CHECK(l.baseline_gradient == doctest::Approx(-2.0 * 49.5 / std::pow(pi * pi + 49.5 * 49.5, 2)));
  CHECK(l.baseline_gradient < 0.0);
  REQUIRE(l.j.has_value());
  CHECK(std::abs(l.j->total() - l.gradient) < 1e-10);
  CHECK(l.ratio == doctest::Approx(l.gradient * 49.5 * 49.5));
  const auto& k = r.constants;
  CHECK(k.threshold_a == doctest::Approx(std::max(std::pow(2 * k.gamma / k.delta, 3.0), 2.0)));
  CHECK(k.lambda >= 2 * 0.2 * std::pow(50.2, -2.0));
  CHECK(k.lambda <= 2 * 0.2 * std::pow(49.8, -2.0));
  CHECK(r.pass == l.pass);
  CHECK(l.pass == (l.gradient > 0.0 && l.ratio >= 0.1 * l.lower_shape && 10.0 * l.abs_error <= std::abs(l.gradient)));
}

TEST_CASE("single bump far out: the sign flips") {
  auto c = quick();
  c.fourier_limit = 0.0;
  const auto r = lemma21_verify(c, 4000.0);
  const auto& l = r.levels[0];
  CHECK(l.baseline_gradient < 0.0);
  CHECK(l.gradient > 0.0);
  CHECK(l.gradient > 10.0 * l.abs_error);
}

TEST_CASE("bump sweep report") {
  auto c = quick();
  CHECK(corollary_report(c, {}).levels.empty());
  CHECK(corollary_report(c, {}).pass);
  const auto r = corollary_report(c, {20.0, 50.0});
  REQUIRE(r.levels.size() == 2);
  for (const auto& l : r.levels) {
    CHECK(l.weighted == doctest::Approx(l.gradient * std::pow(l.A_k, 3.0)));
    CHECK(std::abs(l.baseline_ratio) == doctest::Approx(2.0 / l.x).epsilon(0.01));
  }
  CHECK(std::abs(r.levels[1].baseline_ratio) < std::abs(r.levels[0].baseline_ratio));
  CHECK(r.levels[0].routes.fourier.has_value());
  CHECK(std::abs(*r.levels[0].routes.fourier - r.levels[0].routes.series) < 1e-8);
}

TEST_CASE("cascade: levels and tail bookkeeping") {
  auto c = quick(0.25);
  const auto r = theorem_verify(c);
  REQUIRE(r.levels.size() == 2);
  CHECK(r.levels[0].A_k == 10.0);
  CHECK(r.levels[1].A_k == 105.0625);
  CHECK(r.levels[1].x == 104.5625);
  const auto& k = r.constants;
  CHECK(k.lambda_tilde <= k.lambda_tilde_bound);
  CHECK(k.lambda_tilde_first <= k.lambda_tilde_bound);
  CHECK(k.tail_allowance == doctest::Approx(k.M * std::expm1(k.lambda_tilde_bound)));
  for (const auto& l : r.levels) {
    CHECK(l.margin == doctest::Approx(l.gradient - k.tail_allowance));
    CHECK(l.pass == (l.margin > 0.0 && l.ratio > 0.0));
  }
  CHECK(r.pass == (r.levels[0].pass && r.levels[1].pass));
}

TEST_CASE("cascade: control case and range guard") {
  auto c = quick(0.25);
  c.levels = 0;
  const auto r0 = theorem_verify(c);
  REQUIRE(r0.levels.size() == 1);
  CHECK(r0.levels[0].ratio < 0.0);
  CHECK(!r0.pass);
  c.levels = 3;
  CHECK(code_of([&] { theorem_verify(c); }) == ErrorCode::OutOfDeskRange);
}

TEST_CASE("interval lower bound near z0") {
  auto c = quick();
  const auto z = lemma23_es1_check(c, Constant{0.0});
  CHECK(z.min_gradient == doctest::Approx(z.delta).epsilon(1e-12));
  CHECK(z.pass);
  CHECK(z.in_regime);
  auto c2 = quick(0.25);
  const auto r = lemma23_es1_check(c2, Cascade{0.0, BumpShape::Indicator, 10.0, 0.25, 2});
  CHECK(r.pass);
  CHECK(r.margin == doctest::Approx(r.min_gradient - r.delta / 2));
  CHECK(r.points == 201);
}

TEST_CASE("tail bound on [A^2, 4A^2]") {
  auto c = quick();
  const auto z = lemma23_es2_check(c, Constant{0.0}, 2.0);
  CHECK(z.pass);
  CHECK(z.gamma <= 2.0 + 1e-12);
  CHECK(z.points.front().x == doctest::Approx(4.0));
  CHECK(z.points.back().x == doctest::Approx(16.0));
  const auto b = lemma23_es2_check(c, SinglePairBump{0.0, BumpShape::Indicator, 10.0, 0.2}, 10.2);
  CHECK(b.pass);
  CHECK(std::isfinite(b.gamma));
  CHECK(b.split_discrepancy <= 1e-12);
  for (const auto& p : b.points) {
    CHECK(std::abs(p.low + p.high - p.full) <= 1e-12);
    CHECK(std::abs(p.gradient) <= b.gamma * std::pow(p.x, -3.0) * (1 + 1e-12));
  }
}

TEST_CASE("constructed coefficients are even") {
  const std::vector<KappaSpec> specs{SinglePairBump{1.0, BumpShape::Indicator, 50.0, 0.2},
                                     Cascade{1.0, BumpShape::SmoothBump, 10.0, 0.25, 2}};
  for (const auto& s : specs)
    for (double y = 0.0; y < 120.0; y += 0.01) CHECK(eval_kappa(s, y) == eval_kappa(s, -y));
}
