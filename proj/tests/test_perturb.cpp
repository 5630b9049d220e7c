#include <cmath>
#include <numbers>

#include <boost/math/distributions/poisson.hpp>

#include "doctest.h"
#include "oracles.hpp"
#include "stablegrad/error.hpp"
#include "stablegrad/kernel.hpp"
#include "stablegrad/perturb.hpp"

using namespace stablegrad;
using std::numbers::pi;

namespace {

std::vector<BumpPair> pair_at(double a, double eps, BumpShape shape = BumpShape::Indicator) {
  return {BumpPair{a, eps, shape}};
}

KernelEvaluator fourier_for(double alpha, double a, double eps) {
  return KernelEvaluator(
      LevySymbol(Alpha(alpha), combined_kappa(1.0, SinglePairBump{0.0, BumpShape::Indicator, a, eps})), 1.0);
}

}  // namespace

TEST_CASE("jump intensity: closed-form antiderivative") {
  // Indicator support is |a - y| <= eps / 2.
  const double a = 50.0, eps = 0.2;
  const double exact = 2.0 * (1.0 / (a - eps / 2) - 1.0 / (a + eps / 2));
  const double lam = jump_intensity(pair_at(a, eps), Alpha(1.0));
  CHECK(lam == doctest::Approx(exact).epsilon(1e-12));
  CHECK(lam >= 2 * eps * std::pow(a + eps, -2.0));
  CHECK(lam <= 2 * eps * std::pow(a - eps, -2.0));
  CHECK(jump_intensity(Constant{0.0}, Alpha(1.0)) == 0.0);
  CHECK(jump_intensity(SinglePairBump{0.0, BumpShape::Indicator, a, eps}, Alpha(1.0)) == lam);
}

TEST_CASE("jump intensity: smooth bump and other alpha against quadrature") {
  for (double al : {0.7, 1.5}) {
    for (auto shape : {BumpShape::Indicator, BumpShape::SmoothBump}) {
      const double a = 6.0, eps = 0.5, w = eps * bump_half_width(shape);
      auto g = [&](double y) { return bump_value(shape, (a - y) / eps) * std::pow(y, -1.0 - al); };
      const double ref = 2.0 * oracle::segment(g, a - w, a + w);
      const double lam = jump_intensity(pair_at(a, eps, shape), Alpha(al));
      CHECK(lam == doctest::Approx(ref).epsilon(1e-11));
      CHECK(lam >= 2 * eps * std::pow(a + eps, -1.0 - al));
      CHECK(lam <= 2 * eps * std::pow(a - eps, -1.0 - al));
    }
  }
}

TEST_CASE("perturbation pairs") {
  CHECK(perturbation_pairs(Constant{0.0}).empty());
  CHECK_THROWS_AS(perturbation_pairs(Constant{0.5}), Error);
  CHECK(perturbation_pairs(Cascade{0.0, BumpShape::Indicator, 10.0, 0.25, 2}).size() == 2);
}

TEST_CASE("jump law normalization and symmetry") {
  for (auto shape : {BumpShape::Indicator, BumpShape::SmoothBump}) {
    JumpLaw law(pair_at(10.0, 0.2, shape), Alpha(1.0));
    const auto& g = law.grid();
    CHECK(std::abs(g.total() - 1.0) < 1e-10);
    CHECK(std::abs(g.mean()) < 1e-10);
    CHECK(std::abs(g.mass_in(0.0, 1e9) - 0.5) < 1e-10);
    for (double m : g.mass) CHECK(m >= 0.0);
    CHECK(law.spacing() <= 0.2 / 50.0);
    CHECK(law.density(10.0) > 0.0);
    CHECK(law.density(-10.0) == law.density(10.0));
    CHECK(law.density(11.0) == 0.0);
  }
}

TEST_CASE("density of q integrates to one") {
  JumpLaw law(pair_at(4.0, 0.6, BumpShape::SmoothBump), Alpha(1.5));
  auto q = [&](double y) { return law.density(y); };
  CHECK(2.0 * oracle::segment(q, 3.4, 4.6) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("convolution powers") {
  const double a = 10.0;
  JumpLaw law(pair_at(a, 0.2), Alpha(1.0));
  const auto q1 = law.convolution_power(1);
  CHECK(q1.mass == law.grid().mass);
  const auto q2 = law.convolution_power(2);
  CHECK(std::abs(q2.total() - 1.0) < 2e-9);
  CHECK(q2.mass_in(-2 * a - 1, -2 * a + 1) == doctest::Approx(0.25).epsilon(1e-10));
  CHECK(q2.mass_in(-1, 1) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(q2.mass_in(2 * a - 1, 2 * a + 1) == doctest::Approx(0.25).epsilon(1e-10));
  for (int k = 1; k <= 4; ++k) {
    const auto qk = law.convolution_power(k);
    CHECK(std::abs(qk.total() - 1.0) <= k * 1e-9);
    const double bound = k * (a + 0.2);
    CHECK(qk.node(0) >= -bound - 1e-9);
    CHECK(qk.node(qk.mass.size() - 1) <= bound + 1e-9);
  }
  // Brute-force two-fold convolution of the cell masses.
  const auto& m = q1.mass;
  std::vector<double> brute(2 * m.size() - 1, 0.0);
  for (std::size_t i = 0; i < m.size(); ++i)
    for (std::size_t j = 0; j < m.size(); ++j) brute[i + j] += m[i] * m[j];
  for (std::size_t i = 0; i < brute.size(); ++i) {
    const double x = q1.spacing * static_cast<double>(2 * q1.first + static_cast<long>(i));
    const long idx = std::lround(x / q2.spacing) - q2.first;
    const double v = (idx >= 0 && idx < static_cast<long>(q2.mass.size())) ? q2.mass[idx] : 0.0;
    CHECK(std::abs(v - brute[i]) < 1e-15);
  }
  JumpLawConfig small;
  small.max_nodes = 1000;
  CHECK_THROWS_AS(JumpLaw(pair_at(a, 0.2), Alpha(1.0), small).convolution_power(2), Error);
}

TEST_CASE("poisson weights against boost") {
  for (double lam : {1e-4, 0.01, 0.5, 1.0}) {
    boost::math::poisson_distribution<double> P(lam);
    for (int k : {0, 1, 2, 5}) {
      CHECK(poisson_weight(lam, k) == doctest::Approx(boost::math::pdf(P, k)).epsilon(1e-13));
      const double tail = boost::math::cdf(boost::math::complement(P, static_cast<double>(k)));
      CHECK(poisson_tail(lam, k) == doctest::Approx(tail).epsilon(1e-10).scale(1e-300));
    }
    const int K = poisson_truncation(lam);
    CHECK(poisson_tail(lam, K) < 1e-12);
    if (K > 0) CHECK(poisson_tail(lam, K - 1) >= 1e-12);
    double sum = 0.0;
    for (int k = 0; k <= K; ++k) sum += poisson_weight(lam, k);
    CHECK(sum >= 1.0 - 1e-12);
    CHECK(K <= 20);
  }
}

TEST_CASE("poisson tail beyond sqrt(x)/2") {
  const auto c = stirling_tail_check(Alpha(1.0), 16.0, 0.5);
  CHECK(c.m == 2);
  CHECK(c.tail == doctest::Approx(1.0 - std::exp(-0.5) * (1.0 + 0.5 + 0.125)).epsilon(1e-12));
  CHECK(c.bound == doctest::Approx(10.0 * std::pow(16.0, -3.0)));
  CHECK(c.pass == (c.tail <= c.bound));
  CHECK(stirling_tail_check(Alpha(1.0), 400.0, 0.01).pass);
}

TEST_CASE("zero perturbation reduces to the base kernel") {
  PerturbationSeries s(Alpha(1.0), BaseKernel::cauchy(), {});
  CHECK(s.lambda() == 0.0);
  CHECK(s.k_max() == 0);
  for (double x : {0.0, 1.0, -7.0, 49.5}) {
    CHECK(s.density(x) == cauchy_closed_form(1.0, x).density);
    CHECK(s.gradient(x) == cauchy_closed_form(1.0, x).gradient);
    const auto mc = s.monte_carlo(x, 1, 10000, 3);
    CHECK(mc.estimate == cauchy_closed_form(1.0, x).gradient);
    CHECK(mc.std_error == 0.0);
    const auto j = s.j_decomposition(x);
    CHECK(j.J0 == cauchy_closed_form(1.0, x).gradient);
    CHECK(j.J1 == 0.0);
    CHECK(j.J2 == 0.0);
  }
}

TEST_CASE("series route equals fourier route on the combined symbol") {
  PerturbationSeries s(Alpha(1.0), BaseKernel::cauchy(), pair_at(10.0, 0.2));
  auto ev = fourier_for(1.0, 10.0, 0.2);
  for (double x : {0.0, 5.0, 9.5, 12.0, -3.0, 15.0, 20.0}) {
    CAPTURE(x);
    CHECK(std::abs(s.density(x) - ev.density(x)) < 1e-8);
    CHECK(std::abs(s.gradient(x) - ev.gradient(x)) < 1e-8);
    CHECK(s.density_with_error(x).abs_error < 1e-10);
  }
  CHECK(std::abs(s.gradient(0.0)) < 1e-10);
}

TEST_CASE("series route with a tabulated base, alpha = 1.5") {
  const Alpha al(1.5);
  auto base = BaseKernel::for_kappa(al, Constant{1.0}, 40.0);
  CHECK(base.source() == BaseKernel::Source::Table);
  PerturbationSeries s(al, base, pair_at(3.0, 0.4));
  auto ev = fourier_for(1.5, 3.0, 0.4);
  for (double x : {0.0, 1.0, 2.5, 6.0, 11.0}) {
    CAPTURE(x);
    CHECK(std::abs(s.density(x) - ev.density(x)) < 1e-8);
    CHECK(std::abs(s.gradient(x) - ev.gradient(x)) < 1e-8);
  }
}

TEST_CASE("monte carlo agreement, scaling and determinism") {
  PerturbationSeries s(Alpha(1.0), BaseKernel::cauchy(), pair_at(3.0, 0.4));
  const double x = 2.5;
  const auto a = s.monte_carlo(x, 1, 200000, 11);
  CHECK(std::abs(a.estimate - s.gradient(x)) <= 4.0 * a.std_error);
  const auto d = s.monte_carlo(x, 0, 200000, 11);
  CHECK(std::abs(d.estimate - s.density(x)) <= 4.0 * d.std_error);
  const auto b = s.monte_carlo(x, 1, 200000, 11);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  const auto big = s.monte_carlo(x, 1, 800000, 12);
  CHECK(big.std_error / a.std_error == doctest::Approx(0.5).epsilon(0.2));
  CHECK(mc_gradient(s, x, 200000, 11).estimate == a.estimate);
}

TEST_CASE("J decomposition") {
  const double z0 = -0.5;
  for (double a : {20.0, 50.0, 200.0}) {
    PerturbationSeries s(Alpha(1.0), BaseKernel::cauchy(), pair_at(a, 0.2));
    const auto j = j_decomposition(s, z0, a);
    CHECK(j.x == z0 + a);
    CHECK(std::abs(j.total() - s.gradient(z0 + a)) < 1e-10);
    CHECK(j.J0 == doctest::Approx(std::exp(-s.lambda()) * cauchy_closed_form(1.0, z0 + a).gradient));
    CHECK(std::abs(j.J1_plus + j.J1_minus - j.J1) < 1e-15);
    const double lam = s.lambda();
    CHECK(std::abs(j.J2) <= 2.0 * s.base().sup_bound(1) * lam * lam);
    CHECK(j.J1 > 0.0);
    CHECK(j.J1 > std::abs(j.J2));
  }
  PerturbationSeries far(Alpha(1.0), BaseKernel::cauchy(), pair_at(2000.0, 0.2));
  const auto j = j_decomposition(far, z0, 2000.0);
  CHECK(j.J1 > std::abs(j.J0) + std::abs(j.J2));
}

TEST_CASE("partial sums regroup the series") {
  PerturbationSeries s(Alpha(1.0), BaseKernel::cauchy(), pair_at(3.0, 0.4));
  for (double x : {16.0, 50.0, 120.0}) {
    const auto p = s.partial_sums(x, std::sqrt(x) / 2.0, 1);
    CHECK(std::abs(p.low + p.high - p.full) < 1e-12);
    CHECK(p.full == doctest::Approx(s.gradient(x)).epsilon(1e-14));
  }
}

TEST_CASE("truncation override") {
  SeriesConfig cfg;
  cfg.k_max = 1;
  CHECK_THROWS_AS(PerturbationSeries(Alpha(1.0), BaseKernel::cauchy(), pair_at(3.0, 0.4), cfg), Error);
}
