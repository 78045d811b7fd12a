#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/profile.hpp"

using namespace mfg;

namespace {

// Symmetric triangle bump on [-1, 1], unit mass.
MarginalProfile triangle_profile(int n = 201) {
  std::vector<double> x(n), m(n);
  double h = 2.0 / (n - 1);
  for (int i = 0; i < n; ++i) {
    x[i] = -1.0 + i * h;
    m[i] = std::max(0.0, 1.0 - std::abs(x[i]));
  }
  return MarginalProfile(std::move(x), std::move(m), -1.0, 1.0, 1.0, 1.0 + 1e-9, 1.0);
}

}  // namespace

TEST_CASE("grid spacing and node layout") {
  SpaceTimeGrid g(-2.0, 2.0, 1.5, 5, 4);
  CHECK(g.h_x() == Catch::Approx(1.0));
  CHECK(g.h_t() == Catch::Approx(0.5));
  CHECK(g.x(0) == -2.0);
  CHECK(g.x(4) == 2.0);
  CHECK_THROWS_AS(SpaceTimeGrid(0, 1, 1, 2, 3), std::invalid_argument);
  CHECK_THROWS_AS(SpaceTimeGrid(0, 1, -1, 3, 3), std::invalid_argument);
}

TEST_CASE("torus wrap skips the duplicated seam node") {
  SpaceTimeGrid g(0.0, 1.0, 1.0, 5, 3, Topology::Torus);
  CHECK(g.wrap_left(0) == 3);
  CHECK(g.wrap_right(4) == 1);
  CHECK(g.wrap_right(2) == 3);
}

TEST_CASE("profile construction validates metadata") {
  // Mass mismatch
  std::vector<double> x = {-1.0, 0.0, 1.0};
  std::vector<double> m = {0.0, 1.0, 0.0};
  CHECK_THROWS_AS(MarginalProfile(x, m, -1, 1, 1.0, 1.1, 0.5), std::invalid_argument);
  // Edge bound violation: a finely sampled triangle that claims alpha0 = 2
  int n = 41;
  std::vector<double> xs(n), ms(n);
  for (int i = 0; i < n; ++i) {
    xs[i] = -1.0 + 2.0 * i / (n - 1);
    ms[i] = std::max(0.0, 1.0 - std::abs(xs[i]));
  }
  double mass = num::trapezoid(xs, ms);
  CHECK_THROWS_AS(MarginalProfile(xs, ms, -1, 1, 2.0, 1.1, mass), std::invalid_argument);
  // Support leak
  std::vector<double> bad = {0.1, 1.0, 0.0};
  CHECK_THROWS_AS(MarginalProfile(x, bad, -0.5, 1, 1.0, 1.1, 1.05), std::invalid_argument);
}

TEST_CASE("cdf endpoints and symmetry") {
  auto p = triangle_profile();
  CHECK(p.cdf(p.a()) == Catch::Approx(0.0).margin(1e-15));
  CHECK(p.cdf(p.b()) == Catch::Approx(1.0).margin(1e-9));
  CHECK(p.cdf(0.0) == Catch::Approx(0.5).margin(1e-9));
  CHECK(p.cdf(-2.0) == 0.0);
  CHECK(p.cdf(3.0) == Catch::Approx(p.quadrature_mass()));
}

TEST_CASE("cdf is nondecreasing and inverse recovers the interior") {
  auto p = triangle_profile();
  double prev = -1.0;
  for (int k = 0; k <= 400; ++k) {
    double x = -1.2 + 2.4 * k / 400.0;
    double c = p.cdf(x);
    CHECK(c >= prev - 1e-15);
    prev = c;
  }
  double hx = 2.0 / 200.0;
  for (int k = 1; k < 40; ++k) {
    double x = -0.95 + 1.9 * k / 40.0;
    double back = p.cdf_inv(p.cdf(x));
    CHECK(std::abs(back - x) <= hx);
  }
}

TEST_CASE("inverse cdf is deterministic at node cumulatives and ends") {
  auto p = triangle_profile();
  CHECK(p.cdf_inv(0.0) == p.a());
  CHECK(p.cdf_inv(p.quadrature_mass()) == p.b());
  CHECK(p.cdf_inv(-0.5) == p.a());
  CHECK(p.cdf_inv(2.0) == p.b());
  // hitting a node cumulative exactly returns that node
  double q = p.cdf(-0.5);
  CHECK(p.cdf_inv(q) == Catch::Approx(-0.5).margin(1e-12));
}

TEST_CASE("field derivative operators") {
  SpaceTimeGrid g(0.0, 1.0, 1.0, 21, 21);
  ScalarField f(g);
  for (int j = 0; j < g.n_t; ++j)
    for (int i = 0; i < g.n_x; ++i) f.at(i, j) = g.x(i) * g.x(i) + 3.0 * g.t(j);
  auto fx = d_dx(f);
  auto ft = d_dt(f);
  CHECK(fx.at(10, 5) == Catch::Approx(2.0 * g.x(10)));
  CHECK(ft.at(3, 10) == Catch::Approx(3.0));
  // one-sided ends are first order only
  CHECK(fx.at(0, 0) == Catch::Approx(2.0 * g.x(0) + g.h_x()).margin(1e-12));
}
