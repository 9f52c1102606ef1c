#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>

#include "dbg/error.hpp"
#include "dbg/profile.hpp"
#include "doctest.h"

using namespace dbg;

namespace {

// Values computed by an independent scipy implementation of the same cap (a = 1).
constexpr double kC_a1 = 4554.410438776931;
constexpr double kRhoL2_a1 = 0.20377002095267008;

CapParams params_for(double a) {
  CapParams p;
  p.a = a;
  return p;
}

}  // namespace

TEST_CASE("bumps: support and values") {
  const CapBumps b = build_bumps(params_for(5.0));
  CHECK(b.lambda1(0.0) == 1.0);
  CHECK(b.lambda1(b.l1) == 1.0);
  CHECK(b.lambda1(b.l2) == 0.0);
  CHECK(b.lambda1(2.0 * b.l2) == 0.0);
  CHECK(b.lambda2(b.l1) == 0.0);
  CHECK(b.lambda2(b.l2) == 0.0);
  CHECK(b.lambda2(0.5 * (b.l1 + b.l2)) > 0.0);
  double prev = 1.0;
  for (int i = 0; i <= 200; ++i) {
    const double l = b.l1 + (b.l2 - b.l1) * i / 200.0;
    const double v = b.lambda1(l);
    CHECK(v <= prev);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    prev = v;
    if (i > 0 && i < 200) CHECK(b.lambda2(l) > 0.0);
  }
}

TEST_CASE("bumps: analytic derivatives match central differences") {
  const CapBumps b = build_bumps(params_for(5.0));
  for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double l = b.l1 + x * (b.l2 - b.l1);
    const double h = 1e-7;
    const double fd1 = (b.lambda1(l + h) - b.lambda1(l - h)) / (2 * h);
    const double fd2 = (b.lambda2(l + h) - b.lambda2(l - h)) / (2 * h);
    CHECK(b.lambda1_d(l) == doctest::Approx(fd1).epsilon(1e-6));
    CHECK(b.lambda2_d(l) == doctest::Approx(fd2).epsilon(1e-6));
  }
}

TEST_CASE("normalization: polynomial piece integrates to -1") {
  for (double a : {0.5, 1.0, 5.0, 25.0}) {
    const double l1 = 1.0 / std::sqrt(5.0 * a);
    // Antiderivative of -30al + 200a^2l^3.
    const double closed = -15.0 * a * l1 * l1 + 50.0 * a * a * std::pow(l1, 4);
    CHECK(closed == doctest::Approx(-1.0).epsilon(1e-14));
    const Profile p = build_profile(params_for(a));
    CHECK(p.rho_d(l1) - p.rho_d(0.0) == doctest::Approx(-1.0).epsilon(1e-13));
  }
}

TEST_CASE("normalization: total integral of rho'' vanishes") {
  const Profile p = build_profile(params_for(5.0));
  boost::math::quadrature::tanh_sinh<double> ts;
  const double collar = ts.integrate([&](double l) { return p.rho_dd(l); }, p.l1(), p.l2());
  CHECK(std::abs(collar - 1.0) <= 1e-12);
  CHECK(std::abs(p.rho_d(p.l2()) - 1.0) <= 1e-12);
}

TEST_CASE("normalization: C against independent implementation and scaling") {
  CHECK(build_profile(params_for(1.0)).C() == doctest::Approx(kC_a1).epsilon(1e-9));
  for (double a : {5.0, 25.0, 100.0}) {
    CHECK(build_profile(params_for(a)).C() == doctest::Approx(kC_a1 * std::sqrt(a)).epsilon(1e-9));
  }
}

TEST_CASE("normalization: doubling lambda2 halves C") {
  const CapBumps b = build_bumps(params_for(5.0));
  auto l1f = [b](double l) { return b.lambda1(l); };
  const double c1 = normalize_C(l1f, [b](double l) { return b.lambda2(l); }, 5.0, 1e-12);
  const double c2 = normalize_C(l1f, [b](double l) { return 2.0 * b.lambda2(l); }, 5.0, 1e-12);
  CHECK(c2 == doctest::Approx(0.5 * c1).epsilon(1e-12));
}

TEST_CASE("normalization: defective bump pair is rejected") {
  const CapBumps b = build_bumps(params_for(5.0));
  auto l1f = [b](double l) { return b.lambda1(l); };
  CHECK_THROWS_AS(normalize_C(l1f, [b](double l) { return -b.lambda2(l); }, 5.0, 1e-12),
                  NormalizationFailed);
  CHECK_THROWS_AS(normalize_C(l1f, [](double) { return 0.0; }, 5.0, 1e-12), NormalizationFailed);
}

TEST_CASE("profile: invalid parameters") {
  CapParams p;
  p.a = -1.0;
  CHECK_THROWS_AS(build_profile(p), InvalidArgument);
  p = CapParams{};
  p.grid_n = 10;
  CHECK_THROWS_AS(build_profile(p), InvalidArgument);
}

TEST_CASE("profile: polynomial piece values") {
  const Profile p = build_profile(params_for(5.0));
  CHECK(p.l1() == doctest::Approx(0.2));
  CHECK(p.rho(0.2) == doctest::Approx(0.08).epsilon(1e-15));
  CHECK(std::abs(p.rho_d(p.l0())) <= 1e-15);
  CHECK(std::abs(p.rho_d(p.l1())) <= 1e-15);
  CHECK(p.rho(0.0) == 0.0);
  CHECK(p.rho_d(0.0) == 1.0);
  for (double l : {p.l2(), 1.2 * p.l2(), 3.0 * p.l2()}) {
    CHECK(std::abs(p.rho_d(l) - 1.0) <= 1e-10);
    CHECK(p.rho_dd(l) == 0.0);
  }
}

TEST_CASE("profile: collar values against independent implementation") {
  const Profile p = build_profile(params_for(1.0));
  CHECK(p.rho(p.l2()) == doctest::Approx(kRhoL2_a1).epsilon(1e-9));
  // Continuity of the tabulated evaluator across node boundaries.
  const double cell = (p.l2() - p.l1()) / p.params().grid_n;
  for (int i : {1, 17, 2048, 4095}) {
    const double l = p.l1() + i * cell;
    CHECK(p.rho(l - 1e-13) == doctest::Approx(p.rho(l + 1e-13)).epsilon(1e-12));
    CHECK(p.rho_d(l - 1e-13) == doctest::Approx(p.rho_d(l + 1e-13)).epsilon(1e-10));
  }
}

TEST_CASE("profile: evaluator derivatives are consistent") {
  const Profile p = build_profile(params_for(5.0));
  for (double x : {0.05, 0.3, 0.6, 0.95}) {
    const double l = p.l1() + x * (p.l2() - p.l1());
    const double h = 1e-6;
    CHECK(p.rho_d(l) == doctest::Approx((p.rho(l + h) - p.rho(l - h)) / (2 * h)).epsilon(1e-8));
    CHECK(p.rho_dd(l) ==
          doctest::Approx((p.rho_d(l + h) - p.rho_d(l - h)) / (2 * h)).epsilon(1e-6));
    CHECK(p.rho_ddd(l) ==
          doctest::Approx((p.rho_dd(l + h) - p.rho_dd(l - h)) / (2 * h)).epsilon(1e-5));
  }
}

TEST_CASE("curvature: limit at the origin") {
  const Profile p = build_profile(params_for(5.0));
  CHECK(curvature_of_profile(p, 0.0) == 150.0);
  // Richardson extrapolation of the raw quotient.
  const double h = 1e-4;
  auto raw = [&](double l) { return -p.rho_dd(l) / p.rho(l); };
  const double extrap = (4.0 * raw(h) - raw(2.0 * h)) / 3.0;
  CHECK(extrap == doctest::Approx(150.0).epsilon(1e-9));
  CHECK(curvature_of_profile(p, p.l0()) > 0.0);
  CHECK(curvature_of_profile(p, p.l1()) < 0.0);
  CHECK(curvature_of_profile(p, p.l2()) == 0.0);
  CHECK(curvature_of_profile(p, 2.0 * p.l2()) == 0.0);
}

TEST_CASE("curvature: strictly decreasing on [eps, l1]") {
  for (double a : {1.0, 5.0, 25.0}) {
    const Profile p = build_profile(params_for(a));
    const double lo = 1e-3 * p.l1();
    double prev = curvature_of_profile(p, lo);
    for (int i = 1; i <= 2000; ++i) {
      const double l = lo + (p.l1() - lo) * i / 2000.0;
      const double k = curvature_of_profile(p, l);
      CHECK(k < prev);
      prev = k;
    }
  }
}

TEST_CASE("identity: direct evaluation at a=5, l=0.1") {
  const Profile p = build_profile(params_for(5.0));
  const ProfileJet j = p.jet(0.1);
  const double lhs = j.rho * j.d3 - j.d1 * j.d2;
  CHECK(lhs == doctest::Approx(3.75).epsilon(1e-12));
}

TEST_CASE("profile invariants and certificate across caps") {
  for (double a : {1.0, 5.0, 25.0, 100.0, 400.0}) {
    CAPTURE(a);
    const Profile p = build_profile(params_for(a));
    const CertificateReport rep = verify_profile(p);
    for (const auto& c : rep.checks()) {
      CAPTURE(c.name);
      CHECK(c.pass);
    }
    for (int i = 0; i <= 3000; ++i) {
      const double l = 2.0 * p.l2() * i / 3000.0;
      CHECK(p.rho(l) <= l + 1e-15);
      if (i > 0) CHECK(p.rho(l) > 0.0);
    }
  }
}

TEST_CASE("certificate: flat profile") {
  const CertificateReport rep = verify_profile(Profile::flat());
  CHECK_FALSE(rep.passed());
  CHECK_FALSE(rep.find("critical_parallels")->pass);
  CHECK_FALSE(rep.find("curvature_sign_cap")->pass);
  CHECK(rep.find("curvature_sign_cap")->residual == 0.0);
  CHECK(rep.find("flat_beyond_l2")->pass);
}
