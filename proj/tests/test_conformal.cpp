#include <cfloat>
#include <cmath>
#include <memory>

#include "dbg/conformal.hpp"
#include "dbg/error.hpp"
#include "doctest.h"

using namespace dbg;

namespace {

// Radii of the a = 1 cap from an independent scipy implementation; they scale as 1/sqrt(a).
constexpr double kR0_a1 = 0.42295827849125334;
constexpr double kR1_a1 = 0.8605133575637195;
constexpr double kR2_a1 = 1.1443810363192148;
constexpr double kGinf = 0.17806134013551606;

std::shared_ptr<const Profile> profile_for(double a) {
  CapParams p;
  p.a = a;
  return std::make_shared<const Profile>(build_profile(p));
}

// ln(r/l) on the polynomial piece: -1/4 ln P(w) + 5a/4 int_0^w dv/P(v), w = l^2,
// with P(v) = 10a^2 (v - 1/(4a))^2 + 3/8.
double log_ratio_closed(double a, double l) {
  const double w = l * l;
  const double A = 10.0 * a * a, B = 0.375, w0 = 0.25 / a;
  const double k = std::sqrt(A / B);
  const double P = A * (w - w0) * (w - w0) + B;
  const double integral = (std::atan(k * (w - w0)) - std::atan(-k * w0)) / std::sqrt(A * B);
  return -0.25 * std::log(P) + 1.25 * a * integral;
}

}  // namespace

TEST_CASE("radius map: flat profile is the identity") {
  const RadiusMap rm = solve_r_of_l(Profile::flat());
  for (double l : {0.0, 1e-6, 0.1, 0.5, 0.99, 3.0}) {
    CHECK(rm.r_of_l(l) == doctest::Approx(l).epsilon(1e-15));
    CHECK(rm.l_of_r(l) == doctest::Approx(l).epsilon(1e-15));
  }
}

TEST_CASE("radius map: closed form on the polynomial piece") {
  for (double a : {1.0, 5.0, 25.0}) {
    const auto p = profile_for(a);
    const RadiusMap rm = solve_r_of_l(*p);
    for (int i = 1; i <= 50; ++i) {
      const double l = p->l1() * i / 50.0;
      CHECK(rm.log_ratio(l) == doctest::Approx(log_ratio_closed(a, l)).epsilon(1e-12));
    }
  }
}

TEST_CASE("radius map: small-l series") {
  const auto p = profile_for(5.0);
  const RadiusMap rm = solve_r_of_l(*p);
  for (double l : {1e-3, 1e-4, 1e-5, 1e-6}) {
    const double series = 1.0 + 12.5 * l * l + 171.875 * std::pow(l, 4);
    CHECK(rm.r_of_l(l) / l == doctest::Approx(series).epsilon(1e-12));
  }
  CHECK(std::abs(rm.log_ratio(1e-9)) < 1e-15);
}

TEST_CASE("radius map: round trip and monotonicity") {
  const auto p = profile_for(5.0);
  const RadiusMap rm = solve_r_of_l(*p);
  double worst = 0.0;
  double prev = -1.0;
  for (int i = 0; i <= 5000; ++i) {
    const double l = 1.5 * p->l2() * i / 5000.0;
    const double r = rm.r_of_l(l);
    CHECK(r > prev);
    prev = r;
    worst = std::max(worst, std::abs(rm.l_of_r(r) - l));
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("radius map: singular profile is rejected") {
  CHECK_THROWS_AS(solve_r_of_l([](double l) { return 2.0 * l; }, 0.5), SingularityFailure);
  CHECK_NOTHROW(solve_r_of_l([](double l) { return std::sin(l); }, 0.5));
}

TEST_CASE("quintic table reproduces quintic polynomials") {
  auto f = [](double u) { return 1.0 - 2.0 * u + 0.5 * u * u + 3.0 * std::pow(u, 5); };
  auto fu = [](double u) { return -2.0 + u + 15.0 * std::pow(u, 4); };
  auto fuu = [](double u) { return 1.0 + 60.0 * std::pow(u, 3); };
  std::vector<MetricJet> nodes;
  for (int i = 0; i <= 7; ++i) {
    const double u = 0.3 * i / 7.0;
    nodes.push_back({f(u), fu(u), fuu(u)});
  }
  const QuinticTable t(0.3, nodes);
  for (double u : {0.0, 0.011, 0.15, 0.2999}) {
    const MetricJet j = t.eval(u);
    CHECK(j.g == doctest::Approx(f(u)).epsilon(1e-13));
    CHECK(j.g_u == doctest::Approx(fu(u)).epsilon(1e-11));
    CHECK(j.g_uu == doctest::Approx(fuu(u)).epsilon(1e-9));
  }
}

TEST_CASE("metric: radii against independent implementation") {
  MetricOptions wide;
  wide.max_r2 = 2.0;
  const RadialMetric m1 = build_metric(profile_for(1.0), 0.0, wide);
  CHECK(m1.r0() == doctest::Approx(kR0_a1).epsilon(1e-9));
  CHECK(m1.r1() == doctest::Approx(kR1_a1).epsilon(1e-9));
  CHECK(m1.r2() == doctest::Approx(kR2_a1).epsilon(1e-9));
  CHECK(m1.g_inf() == doctest::Approx(kGinf).epsilon(1e-9));
  const RadialMetric m25 = build_metric(profile_for(25.0));
  CHECK(m25.r2() == doctest::Approx(kR2_a1 / 5.0).epsilon(1e-9));
  CHECK(m25.g_inf() == doctest::Approx(kGinf).epsilon(1e-9));
}

TEST_CASE("metric: cap that does not fit the torus") {
  CHECK_THROWS_AS(build_metric(profile_for(1.0)), CapTooLarge);
}

TEST_CASE("metric: r2 obeys the shrinking bound") {
  double prev = 1.0;
  for (double a : {5.0, 25.0, 100.0, 400.0}) {
    const RadialMetric m = build_metric(profile_for(a));
    const double bound = std::exp(2.0 - std::log(3.0 - std::sqrt(5.0))) / (2.0 * std::sqrt(a));
    CHECK(m.r2() <= bound);
    CHECK(m.r2() < prev);
    CHECK(0.0 < m.r0());
    CHECK(m.r0() < m.r1());
    CHECK(m.r1() < m.r2());
    CHECK(m.r2() < 1.0);
    prev = m.r2();
  }
}

TEST_CASE("metric: conformal factor") {
  const RadialMetric m = build_metric(profile_for(5.0));
  CHECK(m.g(0.0) == 1.0);
  CHECK(m.exact(0.0).g == 1.0);
  for (double r : {m.r2(), 1.01 * m.r2(), 0.9}) CHECK(m.g(r) == m.g_inf());
  // rho(l(r)) = r g(r) using the tabulated g.
  double worst = 0.0;
  for (int i = 1; i <= 4000; ++i) {
    const double r = m.r2() * i / 4000.0;
    worst = std::max(worst, std::abs(m.profile().rho(m.l_of_r(r)) - r * m.g(r)));
  }
  CHECK(worst <= 1e-8);
  // Monotone on [0, r2] up to one rounding unit (within 1% of r2 the factor is
  // constant to machine precision), strictly on a coarse interior grid.
  double prev = m.g(0.0);
  for (int i = 1; i <= 4000; ++i) {
    const double v = m.g(m.r2() * i / 4000.0);
    CHECK(v <= prev + 4.0 * DBL_EPSILON * prev);
    prev = v;
  }
  for (int i = 1; i < 50; ++i) {
    CHECK(m.g(m.r2() * (i + 1) / 50.0) < m.g(m.r2() * i / 50.0));
  }
  CHECK(m.g(0.5 * m.r2()) > 0.0);
}

TEST_CASE("metric: series of g in u near the origin") {
  const double a = 5.0;
  const RadialMetric m = build_metric(profile_for(a));
  for (double u : {1e-8, 1e-6, 1e-5}) {
    const double x = a * u;
    const double series = 1.0 - 7.5 * x + 475.0 / 8.0 * x * x - 22225.0 / 48.0 * x * x * x +
                          457875.0 / 128.0 * std::pow(x, 4);
    const double series_u = a * (-7.5 + 475.0 / 4.0 * x - 22225.0 / 16.0 * x * x);
    const MetricJet e = m.exact(std::sqrt(u));
    CHECK(e.g == doctest::Approx(series).epsilon(1e-13));
    CHECK(e.g_u == doctest::Approx(series_u).epsilon(1e-9));
    CHECK(e.g_uu == doctest::Approx(a * a * (118.75 - 2778.125 * x)).epsilon(1e-5));
    const MetricJet t = m.jet_u(u);
    CHECK(t.g == doctest::Approx(series).epsilon(1e-13));
  }
}

TEST_CASE("metric: table agrees with exact evaluation") {
  const RadialMetric m = build_metric(profile_for(5.0));
  double wg = 0, wgu = 0;
  for (int i = 0; i <= 3001; ++i) {
    const double r = m.r2() * i / 3001.0;
    const MetricJet e = m.exact(r), t = m.jet_u(r * r);
    wg = std::max(wg, std::abs(e.g - t.g));
    wgu = std::max(wgu, std::abs(e.g_u - t.g_u) / (1.0 + std::abs(e.g_u)));
  }
  CHECK(wg <= 1e-12);
  CHECK(wgu <= 1e-9);
}

TEST_CASE("curvature: Cartesian formula against the profile") {
  for (double a : {5.0, 25.0}) {
    const RadialMetric m = build_metric(profile_for(a));
    CHECK(gaussian_curvature_xy(m, 0.0, 0.0) == doctest::Approx(30.0 * a).epsilon(1e-10));
    double worst = 0.0;
    for (int i = 1; i < 2000; ++i) {
      const double r = m.r2() * i / 2000.0;
      const double phi = 0.37 * i;
      const double kxy = gaussian_curvature_xy(m, r * std::cos(phi), r * std::sin(phi));
      worst = std::max(worst, std::abs(kxy - curvature_of_profile(m.profile(), m.l_of_r(r))));
      CHECK(m.curvature_exact(r) ==
            doctest::Approx(curvature_of_profile(m.profile(), m.l_of_r(r))).epsilon(1e-8));
    }
    CHECK(worst <= 1e-6);
    CHECK(gaussian_curvature_xy(m, 1.5 * m.r2(), 0.0) == 0.0);
    // Periodic images.
    CHECK(gaussian_curvature_xy(m, 2.0 + 0.5 * m.r1(), -2.0) ==
          doctest::Approx(gaussian_curvature_xy(m, 0.5 * m.r1(), 0.0)));
  }
}

TEST_CASE("certificate: base, flat and shifted metrics") {
  const RadialMetric m = build_metric(profile_for(5.0));
  const CertificateReport rep = dbg_certificate(m);
  for (const auto& c : rep.checks()) {
    CAPTURE(c.name);
    CAPTURE(c.residual);
    CHECK(c.pass);
  }
  const auto crit = geodesic_parallels(m);
  REQUIRE(crit.size() == 2);
  CHECK(crit[0] == doctest::Approx(m.r0()).epsilon(1e-10));
  CHECK(crit[1] == doctest::Approx(m.r1()).epsilon(1e-10));

  const CertificateReport flat = dbg_certificate(RadialMetric::flat());
  CHECK_FALSE(flat.find("parallel_geodesics")->pass);

  const double delta0 = 1e-3 * (1.0 - m.g_inf() * m.g_inf());
  for (double d : {-delta0, delta0}) {
    const RadialMetric s = m.with_delta(d);
    CHECK(s.factor_u(0.0) == doctest::Approx(1.0 + d));
    CHECK(dbg_certificate(s).passed());
  }
  CHECK(largest_certified_shift(m, delta0, 6) >= delta0);
}

TEST_CASE("metric: invalid shift") {
  const RadialMetric m = build_metric(profile_for(5.0));
  CHECK_THROWS_AS(m.with_delta(-m.g_inf() * m.g_inf()), InvalidArgument);
}
