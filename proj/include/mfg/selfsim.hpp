#pragma once

// Exact self-similar solution family for the power coupling: a Barenblatt-type
// density m(x,t) = t^-a (R - c (x/t^a)^2)_+^(1/theta) paired with the value
// function that extends along straight characteristics outside the support.
// Serves as the analytic oracle for every solver in the project.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mfg/coupling.hpp"
#include "mfg/grid.hpp"
#include "mfg/numerics.hpp"
#include "mfg/profile.hpp"

namespace mfg {

class SelfSimilarModel {
 public:
  explicit SelfSimilarModel(double theta)
      : theta_(theta),
        alpha_bar_(2.0 / (2.0 + theta)),
        c_(0.5 * alpha_bar_ * (1.0 - alpha_bar_)) {
    if (!(theta > 0.0)) throw std::domain_error("selfsim: theta must be positive");
    radius_ = normalization_radius(theta);
    interface_coeff_ = std::sqrt(2.0 * radius_ / (alpha_bar_ * (1.0 - alpha_bar_)));
  }

  double theta() const { return theta_; }
  double alpha_bar() const { return alpha_bar_; }
  double radius() const { return radius_; }          // R
  double interface_coeff() const { return interface_coeff_; }  // C_R
  double profile_coeff() const { return c_; }        // c = a(1-a)/2

  // Unit-mass normalization radius: the unique R with
  // int (R - c y^2)_+^(1/theta) dy = 1, found by bisection over adaptive
  // Simpson evaluations of the mass.
  static double normalization_radius(double theta) {
    if (!(theta > 0.0)) throw std::domain_error("selfsim: theta must be positive");
    double a = 2.0 / (2.0 + theta);
    double c = 0.5 * a * (1.0 - a);
    auto mass = [&](double R) {
      double Y = std::sqrt(R / c);
      auto integrand = [&](double y) {
        double v = R - c * y * y;
        return v > 0.0 ? std::pow(v, 1.0 / theta) : 0.0;
      };
      return 2.0 * num::adaptive_simpson(integrand, 0.0, Y, 1e-13);
    };
    double lo = 1e-8, hi = 1.0;
    while (mass(hi) < 1.0) hi *= 2.0;
    return num::bisect([&](double R) { return mass(R) - 1.0; }, lo, hi, 1e-11);
  }

  // Signed distance-like interface coordinate; the support is {delta <= 0}.
  double delta(double x, double t) const {
    return std::abs(x) - interface_coeff_ * std::pow(t, alpha_bar_);
  }

  double support_radius(double t) const {
    return interface_coeff_ * std::pow(t, alpha_bar_);
  }

  double density(double x, double t) const {
    require_time(t);
    double y = x / std::pow(t, alpha_bar_);
    double v = radius_ - c_ * y * y;
    if (v <= 0.0) return 0.0;
    return std::pow(t, -alpha_bar_) * std::pow(v, 1.0 / theta_);
  }

  // Implicit interface departure time: the root S in (0, t] of
  // F(x,t,s) = -|x| s^(1-a) + C_R (a t + (1-a) s).
  double interface_equation(double x, double t, double s) const {
    return -std::abs(x) * std::pow(s, 1.0 - alpha_bar_) +
           interface_coeff_ * (alpha_bar_ * t + (1.0 - alpha_bar_) * s);
  }

  double interface_time(double x, double t) const {
    require_time(t);
    double d = delta(x, t);
    if (d < 0.0) throw std::domain_error("interface_time: point inside the support");
    if (d == 0.0) return t;
    double ax = std::abs(x);
    auto F = [&](double s) { return interface_equation(x, t, s); };
    // F(x,t,0) > 0 and F(x,t,t) = -t^(1-a) delta < 0: guaranteed bracket.
    double tol = 1e-13 * interface_coeff_ * t;
    double s = num::bisect(F, 0.0, t, tol);
    for (int k = 0; k < 2; ++k) {  // Newton polish
      double dF = -(1.0 - alpha_bar_) * std::pow(s, -alpha_bar_) *
                  (ax - interface_coeff_ * std::pow(s, alpha_bar_));
      if (dF == 0.0) break;
      double step = F(s) / dF;
      double s_new = s - step;
      if (s_new > 0.0 && s_new < t) s = s_new;
    }
    return s;
  }

  // Closed form for theta = 2, where the implicit equation is quadratic in
  // sqrt(S): S = ((|x| - sqrt(x^2 - 8Rt)) / sqrt(8R))^2.
  double interface_time_closed_form_theta2(double x, double t) const {
    if (theta_ != 2.0)
      throw std::domain_error("closed-form S only available for theta = 2");
    double disc = x * x - 8.0 * radius_ * t;
    if (disc < 0.0) throw std::domain_error("closed-form S: point inside the support");
    double q = (std::abs(x) - std::sqrt(disc)) / std::sqrt(8.0 * radius_);
    return q * q;
  }

  double value(double x, double t) const {
    require_time(t);
    double R = radius_;
    if (delta(x, t) <= 0.0) {
      if (theta_ == 2.0) return -x * x / (4.0 * t) - R * std::log(t);
      double p = 2.0 * alpha_bar_ - 1.0;
      return -alpha_bar_ * x * x / (2.0 * t) - R / p * std::pow(t, p);
    }
    if (theta_ == 2.0) {
      double disc = x * x - 8.0 * R * t;
      double ax = std::abs(x);
      double w = ax - std::sqrt(disc);
      return -2.0 * R * ax / w - 2.0 * R * std::log(w / std::sqrt(8.0 * R));
    }
    double S = interface_time(x, t);
    double p = 2.0 * alpha_bar_ - 1.0;
    return -R * alpha_bar_ / ((1.0 - alpha_bar_) * p) * std::pow(S, p) -
           alpha_bar_ * R / (1.0 - alpha_bar_) * std::pow(S, p - 1.0) * (t - S);
  }

  double velocity(double x, double t) const {
    require_time(t);
    if (delta(x, t) <= 0.0) return -alpha_bar_ * x / t;
    double S = interface_time(x, t);
    double sgn = x > 0.0 ? 1.0 : -1.0;
    return -2.0 * radius_ / (interface_coeff_ * (1.0 - alpha_bar_)) *
           std::pow(S, alpha_bar_ - 1.0) * sgn;
  }

  // Interior characteristics follow the power law x0 (t/t0)^a.
  double characteristic(double x0, double t0, double t) const {
    if (!(t0 > 0.0) || t < t0)
      throw std::domain_error("characteristic: need 0 < t0 <= t");
    if (delta(x0, t0) > 0.0)
      throw std::domain_error("characteristic: start point outside the support");
    return x0 * std::pow(t / t0, alpha_bar_);
  }

  // theta = 2 curvature outside the support: u_xx = -4R/(sqrt(D)(|x|-sqrt(D)))
  // with D = x^2 - 8Rt; blows up like D^(-1/2) at the interface.
  double uxx_theta2(double disc, double t) const {
    if (theta_ != 2.0) throw std::domain_error("uxx_theta2: needs theta = 2");
    if (!(disc > 0.0)) throw std::domain_error("uxx_theta2: needs positive discriminant");
    double ax = std::sqrt(disc + 8.0 * radius_ * t);
    return -4.0 * radius_ / (std::sqrt(disc) * (ax - std::sqrt(disc)));
  }

  std::vector<double> uxx_near_interface(std::span<const double> disc_values,
                                         double t) const {
    std::vector<double> out;
    out.reserve(disc_values.size());
    for (double d : disc_values) out.push_back(uxx_theta2(d, t));
    return out;
  }

  double mass_at(double t) const {
    double Y = support_radius(t);
    return num::adaptive_simpson([&](double x) { return density(x, t); }, -Y, Y, 1e-13);
  }

  // Profile of m(., t_ref) as a MarginalProfile on n uniform nodes. Samples
  // are rescaled to unit trapezoid mass so that planning pairs built from two
  // slices are exactly mass-compatible.
  MarginalProfile profile_at(double t_ref, int n = 513) const {
    double Y = support_radius(t_ref);
    std::vector<double> xs(n), ms(n);
    double h = 2.0 * Y / (n - 1);
    for (int i = 0; i < n; ++i) {
      xs[i] = -Y + i * h;
      ms[i] = density(xs[i], t_ref);
    }
    ms.front() = 0.0;
    ms.back() = 0.0;
    double q = num::trapezoid(xs, ms);
    for (auto& v : ms) v /= q;
    double alpha0 = 1.0 / theta_;
    double c0 = MarginalProfile::fit_edge_constant(xs, ms, -Y, Y, alpha0) * 1.01;
    return MarginalProfile(std::move(xs), std::move(ms), -Y, Y, alpha0, c0, 1.0);
  }

  struct Residuals {
    double hj_max = 0.0;          // max over the probed interior nodes
    double continuity_weak = 0.0; // max over the test-function library
    int hj_nodes = 0;
  };

  // Discrete residuals of the exact solution on a slab grid: the HJ equation
  // via centered differences over interior support nodes (shrunk by
  // support_margin to stay away from the unbounded-curvature interface), and
  // the weak continuity residual against a fixed library of smooth test
  // functions, including the time-boundary terms.
  Residuals residuals(const SpaceTimeGrid& grid, double support_margin = 0.1) const {
    if (!(grid.t(1) > 0.0) || !(grid.t(0) > 0.0))
      throw std::domain_error("residuals: grid times must be bounded away from 0");
    Residuals out;
    ScalarField u(grid), m(grid), ux_exact(grid);
    for (int j = 0; j < grid.n_t; ++j)
      for (int i = 0; i < grid.n_x; ++i) {
        u.at(i, j) = value(grid.x(i), grid.t(j));
        m.at(i, j) = density(grid.x(i), grid.t(j));
        ux_exact.at(i, j) = velocity(grid.x(i), grid.t(j));
      }

    double hx = grid.h_x(), ht = grid.h_t();
    for (int j = 1; j + 1 < grid.n_t; ++j) {
      double reach = (1.0 - support_margin) * support_radius(grid.t(j));
      for (int i = 1; i + 1 < grid.n_x; ++i) {
        if (std::abs(grid.x(i)) + hx > reach) continue;
        double ut = (u.at(i, j + 1) - u.at(i, j - 1)) / (2 * ht);
        double ux = (u.at(i + 1, j) - u.at(i - 1, j)) / (2 * hx);
        double r = -ut + 0.5 * ux * ux - std::pow(m.at(i, j), theta_);
        out.hj_max = std::max(out.hj_max, std::abs(r));
        ++out.hj_nodes;
      }
    }

    // Weak continuity residual
    //   R(phi) = int int m (phi_t - u_x phi_x) + [int m phi]_{t0} - [int m phi]_{t1}
    // Row integrals split the cells containing the interface at the exact
    // interface location; the integrand vanishes there with m.
    double x0 = grid.x_min, x1 = grid.x_max, t0 = grid.t(0), t1 = grid.t(grid.n_t - 1);
    auto xh = [&](double x) { return (x - x0) / (x1 - x0); };
    auto th = [&](double t) { return (t - t0) / (t1 - t0); };
    std::vector<std::function<double(double, double)>> phis, phis_x, phis_t;
    const double pi = 3.14159265358979323846;
    for (int k = 0; k <= 3; ++k) {
      for (int q = 0; q <= 2; ++q) {
        phis.push_back([=](double x, double t) {
          return std::cos(k * pi * xh(x)) * std::pow(th(t), q);
        });
        phis_x.push_back([=](double x, double t) {
          return -k * pi / (x1 - x0) * std::sin(k * pi * xh(x)) * std::pow(th(t), q);
        });
        phis_t.push_back([=](double x, double t) {
          return q == 0 ? 0.0
                        : std::cos(k * pi * xh(x)) * q * std::pow(th(t), q - 1) / (t1 - t0);
        });
      }
    }
    for (size_t p = 0; p < phis.size(); ++p) {
      // Row integrals over the support pull the algebraic edge factor
      // (edge -+ x)^(1/theta) out of each cell and integrate it exactly
      // against a linear interpolant of the remaining smooth part. This keeps
      // the quadrature second order for every theta despite the edge kink.
      auto row_integral = [&](int j, bool inner_part) {
        double t = grid.t(j);
        double edge = support_radius(t);
        double scale = std::pow(t, -alpha_bar_) *
                       std::pow(c_ / std::pow(t, 2.0 * alpha_bar_), 1.0 / theta_);
        auto weight_fn = [&](double x) {
          if (inner_part)
            return phis_t[p](x, t) - velocity(x, t) * phis_x[p](x, t);
          return phis[p](x, t);
        };
        double inv_th = 1.0 / theta_;
        double e1 = 1.0 + inv_th, e2 = 2.0 + inv_th;
        double sum = 0.0;
        for (int i = 0; i + 1 < grid.n_x; ++i) {
          double a = std::max(grid.x(i), -edge);
          double b = std::min(grid.x(i + 1), edge);
          if (b <= a) continue;
          bool pos_side = (a + b >= 0.0);  // which edge factor is singular
          auto smooth_part = [&](double x) {
            double other = pos_side ? edge + x : edge - x;
            return scale * std::pow(std::max(other, 0.0), inv_th) * weight_fn(x);
          };
          double M0, M1;
          if (pos_side) {  // weight (edge - x)^(1/theta)
            double ua = edge - a, ub = std::max(edge - b, 0.0);
            M0 = (std::pow(ua, e1) - std::pow(ub, e1)) / e1;
            M1 = edge * M0 - (std::pow(ua, e2) - std::pow(ub, e2)) / e2;
          } else {  // weight (edge + x)^(1/theta)
            double ua = std::max(a + edge, 0.0), ub = b + edge;
            M0 = (std::pow(ub, e1) - std::pow(ua, e1)) / e1;
            M1 = (std::pow(ub, e2) - std::pow(ua, e2)) / e2 - edge * M0;
          }
          double pa = smooth_part(a), pb = smooth_part(b);
          sum += pa * M0 + (pb - pa) / (b - a) * (M1 - a * M0);
        }
        return sum;
      };
      std::vector<double> row(grid.n_t);
      for (int j = 0; j < grid.n_t; ++j) row[j] = row_integral(j, true);
      double inner = num::trapezoid_uniform(row, ht);
      double r = inner + row_integral(0, false) - row_integral(grid.n_t - 1, false);
      out.continuity_weak = std::max(out.continuity_weak, std::abs(r));
    }
    return out;
  }

  // Bounds from the interface-time analysis; both hold wherever delta >= 0.
  double ests1_lower_bound(double x, double t) const {
    double c0 = std::pow(2.0 * radius_ * alpha_bar_ / (1.0 - alpha_bar_),
                         1.0 / (2.0 * (1.0 - alpha_bar_)));
    double d = delta(x, t);
    return c0 * std::pow(t / (std::abs(x) + d), 1.0 / (1.0 - alpha_bar_));
  }

  double ests2_upper_bound(double x, double t) const {
    double C0 = std::pow(2.0 / (radius_ * alpha_bar_ * (1.0 - alpha_bar_)), 0.25);
    double d = delta(x, t);
    return C0 * std::pow(t, 1.0 - 0.5 * alpha_bar_) * std::sqrt(d);
  }

 private:
  static void require_time(double t) {
    if (!(t > 0.0)) throw std::domain_error("selfsim: time must be positive");
  }

  double theta_;
  double alpha_bar_;
  double c_;
  double radius_ = 0.0;
  double interface_coeff_ = 0.0;
};

}  // namespace mfg
