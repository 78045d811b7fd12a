#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "mfg/coupling.hpp"

using mfg::CouplingLaw;

TEST_CASE("power law point values") {
  auto f1 = CouplingLaw::power(1.0);
  CHECK(f1.f(0.5) == Catch::Approx(0.5));
  auto f2 = CouplingLaw::power(2.0);
  CHECK(f2.f(3.0) == Catch::Approx(9.0));
  CHECK(f2.f(0.0) == 0.0);
}

TEST_CASE("log law point values") {
  auto fl = CouplingLaw::log();
  CHECK(fl.f(1.0) == Catch::Approx(0.0));
  CHECK_THROWS_AS(fl.f(0.0), std::domain_error);
  CHECK_THROWS_AS(fl.f(-1.0), std::domain_error);
}

TEST_CASE("construction guards") {
  CHECK_THROWS_AS(CouplingLaw::power(0.0), std::invalid_argument);
  CHECK_THROWS_AS(CouplingLaw::power(-1.0), std::invalid_argument);
}

TEST_CASE("inverse round trips") {
  auto f2 = CouplingLaw::power(2.0);
  CHECK(f2.f_inv(9.0) == Catch::Approx(3.0));
  CHECK_THROWS_AS(f2.f_inv(-1.0), std::domain_error);
  auto f1 = CouplingLaw::power(1.0);
  CHECK(f1.f_inv(0.25) == Catch::Approx(0.25));
  auto fl = CouplingLaw::log();
  CHECK(fl.f_inv(0.0) == Catch::Approx(1.0));

  for (auto law : {CouplingLaw::power(0.5), CouplingLaw::power(1.0),
                   CouplingLaw::power(3.0), CouplingLaw::log()}) {
    for (double s : {1e-8, 1e-3, 1.0, 17.0, 1e8}) {
      double y = law.f(s);
      CHECK(law.f(law.f_inv(y)) == Catch::Approx(y).margin(1e-12 * (1.0 + std::abs(y))));
      CHECK(law.f_inv(y) == Catch::Approx(s).epsilon(1e-12));
    }
  }
}

TEST_CASE("derivative matches finite differences") {
  for (auto law : {CouplingLaw::power(0.5), CouplingLaw::power(1.0),
                   CouplingLaw::power(2.0), CouplingLaw::power(3.0),
                   CouplingLaw::log()}) {
    for (double s : {1e-6, 1e-3, 0.1, 1.0, 12.0, 1e3}) {
      double h = 1e-5 * s;
      double fd = (law.f(s + h) - law.f(s - h)) / (2 * h);
      CHECK(fd == Catch::Approx(law.f_prime(s)).epsilon(1e-6));
    }
  }
}

TEST_CASE("growth bound witness") {
  auto check = [](const CouplingLaw& law, double s_max) {
    double k0 = law.kappa0(s_max);
    for (double s = 1e-6; s <= s_max; s *= 1.7) {
      CHECK(s * law.f_prime(s) <= k0 * (1.0 + 1e-12));
      CHECK(s * std::abs(law.f_second(s)) / law.f_prime(s) <= k0 * (1.0 + 1e-12));
    }
  };
  check(CouplingLaw::power(0.5), 2.0);
  check(CouplingLaw::power(2.0), 5.0);
  check(CouplingLaw::log(), 10.0);
}

TEST_CASE("antiderivative is consistent with f") {
  // F' = f via central differences, plus the closed forms at spot values.
  auto f2 = CouplingLaw::power(2.0);
  CHECK(f2.F(2.0) == Catch::Approx(8.0 / 3.0));
  auto fl = CouplingLaw::log();
  CHECK(fl.F(1.0) == Catch::Approx(-1.0));
  CHECK(fl.F(0.0) == 0.0);
  for (auto law : {CouplingLaw::power(1.5), CouplingLaw::log()}) {
    for (double s : {0.2, 1.0, 3.0}) {
      double h = 1e-6;
      double fd = (law.F(s + h) - law.F(s - h)) / (2 * h);
      CHECK(fd == Catch::Approx(law.f(s)).epsilon(1e-7));
    }
  }
}
