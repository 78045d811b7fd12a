#pragma once

// Compactly supported marginal densities, sampled on a uniform x-grid, with
// declared support endpoints and edge-decay metadata validated on
// construction. The CDF and its monotone inverse drive every transport map
// in the project.

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "mfg/numerics.hpp"

namespace mfg {

class MarginalProfile {
 public:
  // x strictly increasing, m >= 0 vanishing outside [a, b]. alpha0/c0 declare
  // the two-sided edge bound (1/c0) d^alpha0 <= m <= c0 d^alpha0 on [a, b],
  // d = dist(x, {a, b}); mass is the declared total.
  MarginalProfile(std::vector<double> x, std::vector<double> m, double a, double b,
                  double alpha0, double c0, double mass = 1.0)
      : x_(std::move(x)), m_(std::move(m)), a_(a), b_(b), alpha0_(alpha0), c0_(c0),
        mass_(mass) {
    validate();
    build_cdf();
  }

  std::span<const double> x() const { return x_; }
  std::span<const double> m() const { return m_; }
  double a() const { return a_; }
  double b() const { return b_; }
  double alpha0() const { return alpha0_; }
  double edge_constant() const { return c0_; }
  double mass() const { return mass_; }
  size_t size() const { return x_.size(); }

  double value(double xq) const {
    if (xq <= x_.front() || xq >= x_.back()) return boundary_value(xq);
    auto it = std::upper_bound(x_.begin(), x_.end(), xq);
    size_t i = size_t(it - x_.begin()) - 1;
    double w = (xq - x_[i]) / (x_[i + 1] - x_[i]);
    return (1.0 - w) * m_[i] + w * m_[i + 1];
  }

  // Piecewise-linear (trapezoid) cumulative; 0 left of the samples, total
  // mass to the right.
  double cdf(double xq) const {
    if (xq <= x_.front()) return 0.0;
    if (xq >= x_.back()) return cdf_.back();
    auto it = std::upper_bound(x_.begin(), x_.end(), xq);
    size_t i = size_t(it - x_.begin()) - 1;
    double h = x_[i + 1] - x_[i];
    double w = (xq - x_[i]) / h;
    double mq = (1.0 - w) * m_[i] + w * m_[i + 1];
    return cdf_[i] + 0.5 * (m_[i] + mq) * (xq - x_[i]);
  }

  // Inverse CDF on (0, mass); ties at flat segments resolve to the leftmost
  // preimage. Values at the ends clamp to the support endpoints.
  double cdf_inv(double q) const {
    double total = cdf_.back();
    if (q <= 0.0) return a_;
    if (q >= total) return b_;
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), q);
    size_t i = size_t(it - cdf_.begin());
    if (i == 0) return x_.front();
    if (cdf_[i] == q) {
      while (i > 0 && cdf_[i - 1] == q) --i;  // leftmost preimage
      return x_[i];
    }
    --i;
    double dq = q - cdf_[i];
    double m0 = m_[i], m1 = m_[i + 1];
    double h = x_[i + 1] - x_[i];
    // invert the quadratic cumulative within the cell
    double slope = (m1 - m0) / h;
    if (std::abs(slope) < 1e-14 * (std::abs(m0) + 1.0)) {
      if (m0 <= 0.0) return x_[i];
      return x_[i] + dq / m0;
    }
    double disc = m0 * m0 + 2.0 * slope * dq;
    double root = (std::sqrt(std::max(disc, 0.0)) - m0) / slope;
    return x_[i] + std::clamp(root, 0.0, h);
  }

  double quadrature_mass() const { return cdf_.back(); }

  // Uniform resample onto n nodes over [lo, hi].
  std::vector<double> sample(double lo, double hi, int n) const {
    std::vector<double> out(n);
    double h = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) out[i] = value(lo + i * h);
    return out;
  }

  // Largest two-sided edge constant observed in the samples, for callers that
  // fit metadata instead of declaring it.
  static double fit_edge_constant(std::span<const double> x, std::span<const double> m,
                                  double a, double b, double alpha0) {
    double c = 1.0;
    for (size_t i = 0; i < x.size(); ++i) {
      if (x[i] <= a || x[i] >= b) continue;
      double d = std::min(x[i] - a, b - x[i]);
      double bound = std::pow(d, alpha0);
      if (m[i] <= 0.0) throw std::invalid_argument("profile: zero sample inside support");
      c = std::max({c, m[i] / bound, bound / m[i]});
    }
    return c;
  }

 private:
  double boundary_value(double xq) const {
    if (xq < x_.front() || xq > x_.back()) return 0.0;
    return xq == x_.front() ? m_.front() : m_.back();
  }

  void validate() const {
    size_t n = x_.size();
    if (n < 3 || m_.size() != n) throw std::invalid_argument("profile: bad sample arrays");
    for (size_t i = 0; i + 1 < n; ++i)
      if (!(x_[i + 1] > x_[i])) throw std::invalid_argument("profile: x not increasing");
    if (!(a_ < b_)) throw std::invalid_argument("profile: empty support interval");
    double tol = 1e-12 * (b_ - a_);
    for (size_t i = 0; i < n; ++i) {
      if (m_[i] < 0.0) throw std::invalid_argument("profile: negative sample");
      if ((x_[i] < a_ - tol || x_[i] > b_ + tol) && m_[i] != 0.0)
        throw std::invalid_argument("profile: support leak outside [a,b]");
      if (x_[i] > a_ + tol && x_[i] < b_ - tol) {
        double d = std::min(x_[i] - a_, b_ - x_[i]);
        double bound = std::pow(d, alpha0_);
        if (m_[i] > c0_ * bound * (1.0 + 1e-9) ||
            m_[i] < bound / c0_ * (1.0 - 1e-9))
          throw std::invalid_argument("profile: edge decay bound violated");
      }
    }
    double q = num::trapezoid(x_, m_);
    if (std::abs(q - mass_) > 1e-8)
      throw std::invalid_argument("profile: trapezoid mass off declared value");
  }

  void build_cdf() {
    cdf_.resize(x_.size());
    cdf_[0] = 0.0;
    for (size_t i = 0; i + 1 < x_.size(); ++i)
      cdf_[i + 1] = cdf_[i] + 0.5 * (m_[i] + m_[i + 1]) * (x_[i + 1] - x_[i]);
  }

  std::vector<double> x_, m_, cdf_;
  double a_, b_, alpha0_, c0_, mass_;
};

}  // namespace mfg
