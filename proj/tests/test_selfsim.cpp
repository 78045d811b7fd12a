#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "mfg/selfsim.hpp"

using namespace mfg;

namespace {

// Independent oracle for the normalization radius via the Beta-function
// identity: int_{-1}^{1} (1-z^2)^p dz = sqrt(pi) Gamma(p+1) / Gamma(p+3/2),
// so R = (sqrt(c) / I)^(2 theta / (2+theta)) with c = a(1-a)/2.
double radius_beta_identity(double theta) {
  double a = 2.0 / (2.0 + theta);
  double c = 0.5 * a * (1.0 - a);
  double p = 1.0 / theta;
  double I = std::sqrt(M_PI) * std::exp(std::lgamma(p + 1.0) - std::lgamma(p + 1.5));
  return std::pow(std::sqrt(c) / I, 2.0 * theta / (2.0 + theta));
}

}  // namespace

TEST_CASE("normalization radius against the Beta-function oracle") {
  for (double theta : {0.5, 1.0, 2.0, 3.0}) {
    double R = SelfSimilarModel::normalization_radius(theta);
    CHECK(R == Catch::Approx(radius_beta_identity(theta)).epsilon(1e-9));
  }
  // frozen spot values
  CHECK(SelfSimilarModel::normalization_radius(1.0) ==
        Catch::Approx(std::pow(2.0, -4.0 / 3.0)).epsilon(1e-9));  // ~0.39685
  CHECK(SelfSimilarModel::normalization_radius(2.0) ==
        Catch::Approx(1.0 / (M_PI * std::sqrt(2.0))).epsilon(1e-9));  // ~0.22508
  CHECK_THROWS_AS(SelfSimilarModel::normalization_radius(-1.0), std::domain_error);
}

TEST_CASE("unit mass at many times") {
  for (double theta : {0.5, 1.0, 2.0, 3.0}) {
    SelfSimilarModel model(theta);
    for (double t : {0.1, 0.5, 1.0, 2.0, 7.0}) {
      CHECK(model.mass_at(t) == Catch::Approx(1.0).margin(1e-10));
    }
  }
}

TEST_CASE("density point values and support") {
  SelfSimilarModel m1(1.0);
  CHECK(m1.density(0.0, 1.0) == Catch::Approx(m1.radius()).epsilon(1e-12));
  double edge = m1.support_radius(1.0);
  CHECK(m1.density(edge * 1.0001, 1.0) == 0.0);
  CHECK(m1.density(-edge - 1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(m1.density(0.0, 0.0), std::domain_error);
}

TEST_CASE("self-similar scaling identity") {
  SelfSimilarModel model(1.5);
  double a = model.alpha_bar();
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ux(-1.0, 1.0), ut(0.2, 3.0), ul(0.3, 4.0);
  for (int k = 0; k < 200; ++k) {
    double x = ux(rng), t = ut(rng), lam = ul(rng);
    double lhs = model.density(std::pow(lam, a) * x, lam * t);
    double rhs = std::pow(lam, -a) * model.density(x, t);
    CHECK(lhs == Catch::Approx(rhs).margin(1e-13));
  }
}

TEST_CASE("interface time basics") {
  SelfSimilarModel model(1.0);
  double t = 1.3;
  double edge = model.support_radius(t);
  CHECK(model.interface_time(edge, t) == Catch::Approx(t));
  CHECK_THROWS_AS(model.interface_time(0.5 * edge, t), std::domain_error);

  double x = 1.7 * edge;
  double S = model.interface_time(x, t);
  CHECK(S > 0.0);
  CHECK(S < t);
  CHECK(std::abs(model.interface_equation(x, t, S)) <=
        1e-12 * model.interface_coeff() * t);
}

TEST_CASE("interface time bounds on random admissible points") {
  std::mt19937_64 rng(42);
  for (double theta : {0.5, 1.0, 2.0, 3.0}) {
    SelfSimilarModel model(theta);
    std::uniform_real_distribution<double> ut(0.05, 5.0), uf(1.0, 20.0);
    for (int k = 0; k < 2500; ++k) {
      double t = ut(rng);
      double x = uf(rng) * model.support_radius(t);
      double S = model.interface_time(x, t);
      CHECK(std::abs(model.interface_equation(x, t, S)) <=
            1e-12 * model.interface_coeff() * t);
      CHECK(S >= model.ests1_lower_bound(x, t) * (1.0 - 1e-10));
      CHECK(std::abs(t - S) <= model.ests2_upper_bound(x, t) * (1.0 + 1e-10));
    }
  }
}

TEST_CASE("theta=2 closed-form quadratic matches bisection") {
  SelfSimilarModel model(2.0);
  double t = 1.0;
  double x = 2.0 * model.interface_coeff();  // 2 C_R, well outside
  double S_bis = model.interface_time(x, t);
  double S_quad = model.interface_time_closed_form_theta2(x, t);
  CHECK(S_bis == Catch::Approx(S_quad).margin(1e-10));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ut(0.1, 4.0), uf(1.0, 10.0);
  for (int k = 0; k < 500; ++k) {
    double tt = ut(rng);
    double xx = uf(rng) * model.support_radius(tt);
    CHECK(model.interface_time(xx, tt) ==
          Catch::Approx(model.interface_time_closed_form_theta2(xx, tt)).margin(1e-10));
  }
}

TEST_CASE("S is nonincreasing in |x| at fixed t") {
  SelfSimilarModel model(1.0);
  double t = 0.8;
  double prev = t;
  for (int k = 1; k <= 60; ++k) {
    double x = model.support_radius(t) * (1.0 + 0.1 * k);
    double S = model.interface_time(x, t);
    CHECK(S <= prev + 1e-12);
    prev = S;
  }
}

TEST_CASE("value point examples") {
  SelfSimilarModel m2(2.0);
  CHECK(m2.value(0.0, 1.0) == Catch::Approx(0.0).margin(1e-14));  // -R log 1
  SelfSimilarModel m1(1.0);
  CHECK(m1.value(0.0, 1.0) == Catch::Approx(-3.0 * m1.radius()).epsilon(1e-12));
  CHECK_THROWS_AS(m1.value(0.0, -1.0), std::domain_error);
}

TEST_CASE("value and velocity branches agree on the interface") {
  // Both closed-form branches evaluated at x = C_R t^a (where S = t).
  for (double theta : {0.5, 1.0, 2.0, 3.0}) {
    SelfSimilarModel model(theta);
    double a = model.alpha_bar(), R = model.radius(), CR = model.interface_coeff();
    for (int k = 0; k < 100; ++k) {
      double t = 0.2 + 2.8 * k / 99.0;
      double xe = model.support_radius(t);
      double u_in, u_out;
      if (theta == 2.0) {
        u_in = -xe * xe / (4.0 * t) - R * std::log(t);
        u_out = -2.0 * R - 2.0 * R * std::log(xe / std::sqrt(8.0 * R));
      } else {
        double p = 2.0 * a - 1.0;
        u_in = -a * xe * xe / (2.0 * t) - R / p * std::pow(t, p);
        u_out = -R * a / ((1.0 - a) * p) * std::pow(t, p);
      }
      CHECK(std::abs(u_in - u_out) <= 1e-10 * (1.0 + std::abs(u_in)));
      double v_in = -a * xe / t;
      double v_out = -2.0 * R / (CR * (1.0 - a)) * std::pow(t, a - 1.0);
      CHECK(std::abs(v_in - v_out) <= 1e-9 * (1.0 + std::abs(v_in)));
    }
  }
}

TEST_CASE("value and velocity have no jump when straddling the interface") {
  // u is C^1 and u_x is Holder-1/2 across the interface: with a straddle of
  // width eps the gaps scale like eps and sqrt(eps) respectively.
  SelfSimilarModel model(1.0);
  for (double t : {0.5, 1.0, 2.0}) {
    double edge = model.support_radius(t);
    double eps = 1e-10 * edge;
    double du = model.value(edge + eps, t) - model.value(edge - eps, t);
    CHECK(std::abs(du) <= 1e-8);
    double dv = model.velocity(edge + eps, t) - model.velocity(edge - eps, t);
    CHECK(std::abs(dv) <= 1e-3);
  }
}

TEST_CASE("interface velocity matches on both branches in closed form") {
  SelfSimilarModel model(1.0);
  double t = 1.4;
  double a = model.alpha_bar(), CR = model.interface_coeff(), R = model.radius();
  double inside = -a * CR * std::pow(t, a - 1.0);
  double outside = -2.0 * R / (CR * (1.0 - a)) * std::pow(t, a - 1.0);
  CHECK(inside == Catch::Approx(outside).epsilon(1e-12));
}

TEST_CASE("velocity point examples") {
  SelfSimilarModel model(1.0);
  CHECK(model.velocity(0.0, 2.0) == 0.0);
  double x = 0.5 * model.interface_coeff();
  CHECK(model.velocity(x, 1.0) ==
        Catch::Approx(-model.alpha_bar() * x).epsilon(1e-12));
}

TEST_CASE("characteristics") {
  SelfSimilarModel model(1.0);
  double t0 = 0.7;
  double x0 = 0.3 * model.support_radius(t0);
  CHECK(model.characteristic(x0, t0, t0) == Catch::Approx(x0));
  CHECK(model.characteristic(0.0, t0, 5.0) == 0.0);
  // edge stays on the interface
  double e0 = model.support_radius(t0);
  CHECK(model.characteristic(e0, t0, 2.0) ==
        Catch::Approx(model.support_radius(2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(model.characteristic(2.0 * e0, t0, 2.0), std::domain_error);
}

TEST_CASE("residuals shrink at second order under refinement") {
  SelfSimilarModel model(1.0);
  double xr = 1.1 * model.support_radius(1.5);
  auto run = [&](int n) {
    SpaceTimeGrid slab(-xr, xr, 1.0, n, n, Topology::NeumannInterval, 0.5);
    return model.residuals(slab);
  };
  auto r200 = run(200);
  auto r400 = run(400);
  auto r800 = run(800);
  CHECK(r200.hj_max <= 1e-3);
  CHECK(r200.hj_max / r400.hj_max >= 3.0);
  CHECK(r400.hj_max / r800.hj_max >= 3.0);
  CHECK(r200.continuity_weak <= 1e-3);
  CHECK(r200.continuity_weak / r400.continuity_weak >= 1.9);
}

TEST_CASE("uxx blow-up at the interface for theta=2") {
  SelfSimilarModel model(2.0);
  double t = 1.0;
  std::vector<double> discs = {1e-3, 5e-4, 1e-4, 1e-5, 1e-6};
  auto uxx = model.uxx_near_interface(discs, t);
  double first = std::abs(uxx.front()) * std::sqrt(discs.front());
  double last = std::abs(uxx.back()) * std::sqrt(discs.back());
  CHECK(first == Catch::Approx(last).epsilon(0.05));
  CHECK(last == Catch::Approx(4.0 * model.radius() /
                              std::sqrt(8.0 * model.radius() * t)).epsilon(1e-3));
  // halving the discriminant grows |uxx| by at least sqrt(2)(1-eps)
  double u1 = std::abs(model.uxx_theta2(1e-6, t));
  double u2 = std::abs(model.uxx_theta2(5e-7, t));
  CHECK(u2 / u1 >= std::sqrt(2.0) * (1.0 - 1e-2));
  CHECK(model.uxx_theta2(1.0, 1.0) < 0.0);
  CHECK_THROWS_AS(model.uxx_theta2(-1.0, 1.0), std::domain_error);
}

TEST_CASE("profile_at produces a valid marginal") {
  SelfSimilarModel model(1.0);
  auto p = model.profile_at(1.0);
  CHECK(p.a() == Catch::Approx(-model.support_radius(1.0)));
  CHECK(p.quadrature_mass() == Catch::Approx(1.0).margin(1e-5));
  CHECK(p.alpha0() == Catch::Approx(1.0));
}
