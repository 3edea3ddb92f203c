#ifndef CVQ_OPTIMIZE_HPP
#define CVQ_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace cvq {

struct ScalarMinimum {
  double x = 0.0;
  double value = 0.0;
  int iterations = 0;
};

/// Golden-section search for a minimum of f on [lo, hi]. Stops when the
/// bracket is narrower than x_tol; throws NumericalError past max_iter.
template <typename F>
ScalarMinimum golden_section(F &&f, double lo, double hi, double x_tol,
                             int max_iter = 300) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  int it = 0;
  while (b - a > x_tol) {
    if (++it > max_iter) {
      std::ostringstream msg;
      msg << "golden_section: no convergence after " << max_iter
          << " iterations, bracket [" << a << ", " << b << "], width " << (b - a);
      throw NumericalError(msg.str());
    }
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double x = 0.5 * (a + b);
  return {x, f(x), it};
}

/// Minimizes f over a positive interval: scans a logarithmic grid, then
/// refines the best grid cell by golden section. A grid minimum on either
/// end of the interval means the true minimum lies outside it and is an
/// error.
template <typename F>
ScalarMinimum minimize_log_bracketed(F &&f, double lo, double hi, int grid_points,
                                     double x_tol, int max_iter = 300) {
  if (!(lo > 0.0 && hi > lo && grid_points >= 3))
    throw InvalidInput("minimize_log_bracketed: need 0 < lo < hi and >= 3 grid points");
  std::vector<double> xs(grid_points), fs(grid_points);
  const double step = std::log(hi / lo) / (grid_points - 1);
  for (int i = 0; i < grid_points; ++i) {
    xs[i] = lo * std::exp(step * i);
    fs[i] = f(xs[i]);
  }
  const auto best = static_cast<int>(std::min_element(fs.begin(), fs.end()) - fs.begin());
  if (best == 0 || best == grid_points - 1 || !std::isfinite(fs[best])) {
    std::ostringstream msg;
    msg << "minimize_log_bracketed: minimum not interior to [" << lo << ", " << hi
        << "] (grid index " << best << ", x=" << xs[best] << ", f=" << fs[best] << ")";
    throw NumericalError(msg.str());
  }
  return golden_section(f, xs[best - 1], xs[best + 1], x_tol, max_iter);
}

struct NelderMeadOptions {
  double initial_step = 0.1;
  double f_tol = 1e-14;
  double x_tol = 1e-10;
  int max_evals = 20000;
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Derivative-free simplex minimization (standard reflection / expansion /
/// contraction / shrink coefficients).
inline NelderMeadResult nelder_mead(const std::function<double(const std::vector<double> &)> &f,
                                    std::vector<double> start,
                                    const NelderMeadOptions &opt = {}) {
  const std::size_t n = start.size();
  if (n == 0) throw InvalidInput("nelder_mead: empty parameter vector");
  std::vector<std::vector<double>> pts(n + 1, start);
  std::vector<double> vals(n + 1);
  for (std::size_t i = 0; i < n; ++i) pts[i + 1][i] += opt.initial_step;
  int evals = 0;
  auto eval = [&](const std::vector<double> &x) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::max();
  };
  for (std::size_t i = 0; i <= n; ++i) vals[i] = eval(pts[i]);

  std::vector<std::size_t> order(n + 1);
  bool converged = false;
  while (evals < opt.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });
    const std::size_t lo = order.front(), hi = order.back(), second = order[n - 1];

    double spread = 0.0;
    for (std::size_t i = 0; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        spread = std::max(spread, std::abs(pts[i][k] - pts[lo][k]));
    if (std::abs(vals[hi] - vals[lo]) <= opt.f_tol * (1.0 + std::abs(vals[lo])) &&
        spread <= opt.x_tol) {
      converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i)
      if (i != hi)
        for (std::size_t k = 0; k < n; ++k) centroid[k] += pts[i][k] / n;
    auto along = [&](double t) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k) x[k] = centroid[k] + t * (pts[hi][k] - centroid[k]);
      return x;
    };

    auto xr = along(-1.0);
    const double fr = eval(xr);
    if (fr < vals[lo]) {
      auto xe = along(-2.0);
      const double fe = eval(xe);
      if (fe < fr) {
        pts[hi] = std::move(xe);
        vals[hi] = fe;
      } else {
        pts[hi] = std::move(xr);
        vals[hi] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[hi] = std::move(xr);
      vals[hi] = fr;
      continue;
    }
    const bool outside = fr < vals[hi];
    auto xc = along(outside ? -0.5 : 0.5);
    const double fc = eval(xc);
    if (fc < (outside ? fr : vals[hi])) {
      pts[hi] = std::move(xc);
      vals[hi] = fc;
      continue;
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == lo) continue;
      for (std::size_t k = 0; k < n; ++k) pts[i][k] = pts[lo][k] + 0.5 * (pts[i][k] - pts[lo][k]);
      vals[i] = eval(pts[i]);
    }
  }
  const auto best = static_cast<std::size_t>(std::min_element(vals.begin(), vals.end()) - vals.begin());
  return {pts[best], vals[best], evals, converged};
}

} // namespace cvq

#endif // CVQ_OPTIMIZE_HPP
