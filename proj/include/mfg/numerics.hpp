#pragma once

// Small numerical toolbox shared by the solvers: root finding, quadrature,
// monotone interpolation, finite differences, least-squares fitting.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg {

class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

class DegeneracyError : public SolverError {
 public:
  explicit DegeneracyError(const std::string& what) : SolverError(what) {}
};

namespace num {

// Bisection on [lo, hi]; requires a sign change. Tolerance on |f| plus a
// bracket-width floor near machine precision.
inline double bisect(const std::function<double(double)>& f, double lo, double hi,
                     double f_tol, int max_iter = 200) {
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (flo * fhi > 0.0) throw SolverError("bisect: no sign change in bracket");
  for (int it = 0; it < max_iter; ++it) {
    double mid = 0.5 * (lo + hi);
    double fm = f(mid);
    if (std::abs(fm) <= f_tol || 0.5 * (hi - lo) < 1e-16 * (std::abs(mid) + 1.0))
      return mid;
    if (flo * fm <= 0.0) {
      hi = mid;
    } else {
      lo = mid;
      flo = fm;
    }
  }
  return 0.5 * (lo + hi);
}

// Expands [lo, hi] upward until f changes sign, then bisects. Used for the
// monotone scalar equations in the marginal-compatibility construction.
inline double bisect_increasing(const std::function<double(double)>& f, double lo,
                                double hi, double f_tol) {
  double fhi = f(hi);
  int guard = 0;
  while (fhi < 0.0 && guard++ < 200) {
    hi *= 2.0;
    fhi = f(hi);
  }
  return bisect(f, lo, hi, f_tol);
}

namespace detail {
inline double simpson(double fa, double fm, double fb, double h) {
  return h / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a,
                                   double b, double fa, double fm, double fb,
                                   double whole, double tol, int depth) {
  double m = 0.5 * (a + b);
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(fa, flm, fm, m - a);
  double right = simpson(fm, frm, fb, b - m);
  double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol)
    return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}
}  // namespace detail

// Adaptive Simpson with absolute tolerance. The integrands here have at worst
// algebraic endpoint singularities in the first derivative, which the
// recursive subdivision resolves.
inline double adaptive_simpson(const std::function<double(double)>& f, double a,
                               double b, double abs_tol, int max_depth = 48) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = detail::simpson(fa, fm, fb, b - a);
  return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, abs_tol, max_depth);
}

inline double trapezoid(std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (size_t i = 0; i + 1 < x.size(); ++i)
    s += 0.5 * (y[i] + y[i + 1]) * (x[i + 1] - x[i]);
  return s;
}

inline double trapezoid_uniform(std::span<const double> y, double h) {
  double s = 0.0;
  for (size_t i = 0; i + 1 < y.size(); ++i) s += 0.5 * (y[i] + y[i + 1]);
  return s * h;
}

// Integral of the piecewise-linear interpolant of (x, y) over [p, q],
// splitting the end cells analytically. p, q must lie within [x front, back].
inline double trapezoid_partial(std::span<const double> x, std::span<const double> y,
                                double p, double q) {
  if (q <= p) return 0.0;
  auto value_at = [&](double t) {
    auto it = std::upper_bound(x.begin(), x.end(), t);
    size_t i = std::clamp<size_t>(size_t(it - x.begin()), 1, x.size() - 1) - 1;
    double w = (t - x[i]) / (x[i + 1] - x[i]);
    return (1.0 - w) * y[i] + w * y[i + 1];
  };
  double s = 0.0;
  double cur = p, vcur = value_at(p);
  for (size_t i = 0; i + 1 < x.size(); ++i) {
    if (x[i + 1] <= p || x[i] >= q) continue;
    double nxt = std::min(q, x[i + 1]);
    double vnxt = (nxt == x[i + 1]) ? y[i + 1] : value_at(nxt);
    s += 0.5 * (vcur + vnxt) * (nxt - cur);
    cur = nxt;
    vcur = vnxt;
  }
  return s;
}

// Fritsch-Carlson monotone cubic (PCHIP). Preserves monotonicity of the data,
// which the Lagrangian-to-Eulerian pushforward relies on.
class PchipInterpolant {
 public:
  PchipInterpolant() = default;
  PchipInterpolant(std::vector<double> x, std::vector<double> y)
      : x_(std::move(x)), y_(std::move(y)) {
    size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("pchip: bad data");
    d_.resize(n);
    std::vector<double> h(n - 1), delta(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
      h[i] = x_[i + 1] - x_[i];
      if (h[i] <= 0.0) throw std::invalid_argument("pchip: x not increasing");
      delta[i] = (y_[i + 1] - y_[i]) / h[i];
    }
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
    } else {
      for (size_t i = 1; i + 1 < n; ++i) {
        if (delta[i - 1] * delta[i] <= 0.0) {
          d_[i] = 0.0;
        } else {
          double w1 = 2.0 * h[i] + h[i - 1];
          double w2 = h[i] + 2.0 * h[i - 1];
          d_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
      }
      d_[0] = edge_slope(h[0], h[1], delta[0], delta[1]);
      d_[n - 1] = edge_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    }
  }

  double operator()(double t) const {
    size_t i = locate(t);
    double h = x_[i + 1] - x_[i];
    double s = (t - x_[i]) / h;
    double s2 = s * s, s3 = s2 * s;
    double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s;
    double h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
    return h00 * y_[i] + h * h10 * d_[i] + h01 * y_[i + 1] + h * h11 * d_[i + 1];
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

 private:
  static double edge_slope(double h0, double h1, double d0, double d1) {
    double d = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (d * d0 <= 0.0) return 0.0;
    if (d0 * d1 <= 0.0 && std::abs(d) > 3.0 * std::abs(d0)) return 3.0 * d0;
    return d;
  }

  size_t locate(double t) const {
    auto it = std::upper_bound(x_.begin(), x_.end(), t);
    return std::clamp<size_t>(size_t(it - x_.begin()), 1, x_.size() - 1) - 1;
  }

  std::vector<double> x_, y_, d_;
};

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("fit_line: bad data");
  double sx = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  out.r_squared = (syy > 0.0) ? (sxy * sxy) / (sxx * syy) : 1.0;
  return out;
}

// Centered interior, first-order one-sided at the ends.
inline std::vector<double> gradient_uniform(std::span<const double> y, double h) {
  size_t n = y.size();
  std::vector<double> g(n);
  if (n < 2) return g;
  g[0] = (y[1] - y[0]) / h;
  g[n - 1] = (y[n - 1] - y[n - 2]) / h;
  for (size_t i = 1; i + 1 < n; ++i) g[i] = (y[i + 1] - y[i - 1]) / (2.0 * h);
  return g;
}

inline std::vector<double> second_diff_uniform(std::span<const double> y, double h) {
  size_t n = y.size();
  std::vector<double> g(n, 0.0);
  for (size_t i = 1; i + 1 < n; ++i)
    g[i] = (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h);
  if (n >= 3) {
    g[0] = g[1];
    g[n - 1] = g[n - 2];
  }
  return g;
}

inline uint64_t fnv1a(std::span<const char> bytes, uint64_t seed = 1469598103934665603ull) {
  uint64_t h = seed;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace num
}  // namespace mfg
