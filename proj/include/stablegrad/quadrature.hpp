#pragma once

// Adaptive Gauss-Kronrod quadrature and alternating-series acceleration.
//
// The 21-point Kronrod / 10-point Gauss pair and the error heuristic follow
// QUADPACK's qk21; the driver is a global adaptive bisection scheme that
// always splits the panel with the largest error estimate.

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <span>
#include <vector>

namespace stablegrad::quad {

struct Options {
  double abs_tol = 1e-12;
  double rel_tol = 0.0;
  int max_panels = 4000;
};

struct Result {
  double value = 0.0;
  double abs_error = 0.0;
  int panels = 0;
  bool converged = true;
};

namespace detail {

inline constexpr double kXgk[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr double kWgk[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr double kWg[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
  double a;
  double b;
  double value;
  double error;
  bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gk21(F& f, double a, double b) {
  constexpr double eps = std::numeric_limits<double>::epsilon();
  const double centre = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  const double fc = f(centre);
  double resg = 0.0;
  double resk = kWgk[10] * fc;
  double resabs = std::abs(resk);
  double fv1[10];
  double fv2[10];
  for (int j = 0; j < 10; ++j) {
    const double dx = half * kXgk[j];
    const double f1 = f(centre - dx);
    const double f2 = f(centre + dx);
    fv1[j] = f1;
    fv2[j] = f2;
    resk += kWgk[j] * (f1 + f2);
    resabs += kWgk[j] * (std::abs(f1) + std::abs(f2));
    if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
  }
  const double reskh = 0.5 * resk;
  double resasc = kWgk[10] * std::abs(fc - reskh);
  for (int j = 0; j < 10; ++j)
    resasc += kWgk[j] * (std::abs(fv1[j] - reskh) + std::abs(fv2[j] - reskh));

  const double ahalf = std::abs(half);
  resasc *= ahalf;
  resabs *= ahalf;
  double err = std::abs((resk - resg) * half);
  if (resasc != 0.0 && err != 0.0)
    err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > std::numeric_limits<double>::min() / (50.0 * eps))
    err = std::max(50.0 * eps * resabs, err);
  return {a, b, resk * half, err};
}

}  // namespace detail

/// Integrates f over [a, b] with the panel boundaries seeded at `breaks`
/// (sorted, strictly inside (a, b) or ignored otherwise).
template <class F>
Result integrate(F&& f, double a, double b, std::span<const double> breaks,
                 const Options& opt = {}) {
  Result out;
  if (a == b) return out;
  std::vector<double> edges{a};
  for (double x : breaks)
    if (x > edges.back() && x < b) edges.push_back(x);
  edges.push_back(b);

  std::priority_queue<detail::Panel> heap;
  std::vector<detail::Panel> frozen;
  double total = 0.0;
  double total_err = 0.0;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
    auto p = detail::gk21(f, edges[i], edges[i + 1]);
    total += p.value;
    total_err += p.error;
    heap.push(p);
  }
  int panels = static_cast<int>(heap.size());
  auto tolerance = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };

  while (!heap.empty() && total_err > tolerance() && panels < opt.max_panels) {
    auto worst = heap.top();
    heap.pop();
    const double mid = 0.5 * (worst.a + worst.b);
    if (!(mid > worst.a && mid < worst.b) ||
        std::abs(worst.b - worst.a) < 1e-15 * std::max(1.0, std::abs(mid))) {
      frozen.push_back(worst);
      continue;
    }
    auto left = detail::gk21(f, worst.a, mid);
    auto right = detail::gk21(f, mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
    ++panels;
  }

  // Re-sum from the panels to shed the drift of the running updates.
  double value = 0.0;
  double error = 0.0;
  for (const auto& p : frozen) {
    value += p.value;
    error += p.error;
  }
  while (!heap.empty()) {
    value += heap.top().value;
    error += heap.top().error;
    heap.pop();
  }
  out.value = value;
  out.abs_error = error;
  out.panels = panels;
  out.converged = error <= std::max(opt.abs_tol, opt.rel_tol * std::abs(value));
  return out;
}

template <class F>
Result integrate(F&& f, double a, double b, const Options& opt = {}) {
  return integrate(std::forward<F>(f), a, b, std::span<const double>{}, opt);
}

/// Euler (van Wijngaarden) transformation of an alternating series, fed one
/// signed term at a time.
class EulerAccelerator {
 public:
  void add(double term) {
    if (work_.empty()) {
      work_.push_back(term);
      nterm_ = 1;
      sum_ = 0.5 * term;
      return;
    }
    double tmp = work_[0];
    work_[0] = term;
    work_.resize(static_cast<std::size_t>(nterm_) + 1, 0.0);
    for (int j = 0; j < nterm_ - 1; ++j) {
      const double dum = work_[j + 1];
      work_[j + 1] = 0.5 * (work_[j] + tmp);
      tmp = dum;
    }
    work_[nterm_] = 0.5 * (work_[nterm_ - 1] + tmp);
    if (std::abs(work_[nterm_]) <= std::abs(work_[nterm_ - 1])) {
      ++nterm_;
      sum_ += 0.5 * work_[nterm_ - 1];
    } else {
      sum_ += work_[nterm_];
    }
  }

  double sum() const { return sum_; }

 private:
  std::vector<double> work_;
  int nterm_ = 0;
  double sum_ = 0.0;
};

}  // namespace stablegrad::quad
