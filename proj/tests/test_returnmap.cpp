#include <cmath>
#include <memory>

#include "dbg/error.hpp"
#include "dbg/returnmap.hpp"
#include "doctest.h"

using namespace dbg;

namespace {

std::shared_ptr<const RadialMetric> metric_a(double a) {
  CapParams p;
  p.a = a;
  return std::make_shared<const RadialMetric>(
      build_metric(std::make_shared<const Profile>(build_profile(p))));
}

std::shared_ptr<const RadialMetric> metric25() {
  static const auto m = metric_a(25.0);
  return m;
}

PerturbedMapOptions opts25() {
  PerturbedMapOptions o;
  o.metric = metric25();
  return o;
}

double momentum2(const SectionPoint& p) { return p.alpha * p.alpha + p.beta * p.beta; }

}  // namespace

TEST_CASE("exact return map: closed form and errors") {
  const SectionPoint p = R_exact({0.0, 0.0, 0.6, 0.0});
  CHECK(p.x == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(p.y == 0.0);
  CHECK(p.alpha == 0.6);
  const SectionPoint z = R_exact({0.3, -0.4, 0.0, 0.0});
  CHECK(z.x == 0.3);
  CHECK(z.y == -0.4);
  CHECK_THROWS_AS(R_exact({0.0, 0.0, 1.0, 0.0}), DegenerateCovector);
  CHECK_THROWS_AS(R_exact({0.0, 0.0, 0.8, 0.6}), DegenerateCovector);
}

TEST_CASE("exact return map: analytic Jacobian, symplectic, unit determinant") {
  const SectionPoint p{0.1, -0.2, 0.3, 0.2};
  const Mat4 D = R_exact_jacobian(p);
  const Mat4 F = fd_jacobian_richardson([](const SectionPoint& z) { return R_exact(z); }, p, 1e-3);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(std::abs(D[i][j] - F[i][j]) <= 1e-9);
  }
  CHECK(symplectic_defect(D) <= 1e-14);
  CHECK(symplectic_defect([](const SectionPoint& z) { return R_exact(z); }, p, 1e-5) <= 1e-8);
  // Block form [[I, S], [0, I]] with S symmetric: det = 1.
  CHECK(D[0][3] == D[1][2]);
  CHECK(D[2][0] == 0.0);
  CHECK(D[3][3] == 1.0);
  Mat4 I{};
  for (int i = 0; i < 4; ++i) I[i][i] = 1.0;
  CHECK(symplectic_defect(I) == 0.0);
}

TEST_CASE("perturbed map: eps = 0 reproduces the exact map") {
  for (const SectionPoint& p : section_samples(50)) {
    CHECK(section_distance(R_eps(p, 0.0, opts25()), R_exact(p)) <= 1e-8);
  }
}

TEST_CASE("perturbed map: identical to the exact map outside the momentum cutoff") {
  const double eps = 1e-1;
  for (const SectionPoint& p : section_samples(200, 0.95)) {
    if (momentum2(p) < 2.0 / 3.0) continue;
    CHECK(section_distance(R_eps(p, eps, opts25()), R_exact(p)) <= 1e-8);
  }
}

TEST_CASE("perturbed map: reversibility and negative times") {
  const SectionPoint p{0.05, 0.02, 0.3, 0.1};
  CHECK(reversibility_residual(p, 1e-2, opts25()) <= 1e-7);
  CHECK(reversibility_residual(p, 1e-1, opts25(), 2.0) <= 1e-7);
  const SectionPoint back = R_eps(R_eps(p, 1e-2, opts25(), 1.0), 1e-2, opts25(), -1.0);
  CHECK(section_distance(back, p) <= 1e-7);
  CHECK_THROWS_AS(R_eps(p, 1e-2, opts25(), 0.005), InvalidArgument);
  CHECK_THROWS_AS(R_eps({0.0, 0.0, 0.9, 0.45}, 1e-2, opts25()), EnergyOutOfRange);
}

TEST_CASE("closeness scan: order one in eps, support inside the cutoff") {
  ClosenessOptions o;
  o.n = 400;
  const auto rep = closeness_scan({1e-1, 1e-2, 1e-3}, opts25(), o);
  REQUIRE(rep.rows.size() == 3);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(std::abs(rep.order_c0[k] - 1.0) <= 0.3);
    CHECK(std::abs(rep.order_c1[k] - 1.0) <= 0.3);
    CHECK(rep.rows[k + 1].c0 < rep.rows[k].c0);
    CHECK(rep.rows[k + 1].c1 < rep.rows[k].c1);
  }
  for (const auto& row : rep.rows) {
    CHECK(row.outside_cutoff <= 1e-8);
    CHECK(row.support_momentum2 <= 2.0 / 3.0 + 1e-3);
    CHECK(row.support_count > 0);
    CHECK(row.symplectic_defect <= 1e-6);
  }
}

TEST_CASE("closeness scan: C0 discrepancy halves with eps") {
  ClosenessOptions o;
  o.n = 200;
  o.m = 0;
  const auto rep = closeness_scan({4e-3, 2e-3, 1e-3}, opts25(), o);
  for (std::size_t k = 0; k < 2; ++k) {
    const double ratio = rep.rows[k].c0 / rep.rows[k + 1].c0;
    CHECK(ratio >= 1.5);
    CHECK(ratio <= 2.5);
  }
  CHECK(rep.order_c1.empty());
}

TEST_CASE("closeness scan: invalid options") {
  CHECK_THROWS_AS(closeness_scan({}, opts25()), InvalidArgument);
  ClosenessOptions o;
  o.m = 2;
  CHECK_THROWS_AS(closeness_scan({1e-2}, opts25(), o), InvalidArgument);
  CHECK_THROWS_AS(section_samples(4, 1.0), InvalidArgument);
}

TEST_CASE("section samples are deterministic and inside the disc") {
  const auto a = section_samples(64, 0.5);
  const auto b = section_samples(64, 0.5);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(section_distance(a[i], b[i]) == 0.0);
    CHECK(momentum2(a[i]) < 0.5);
    CHECK(std::abs(a[i].x) <= 1.0);
    CHECK(std::abs(a[i].y) <= 1.0);
  }
}

TEST_CASE("energy window: positive exponents on the DBG levels, none for the flat torus") {
  SampleSpec ens;
  ens.n_orbits = 12;
  ens.T = 1e3;
  const auto m5 = metric_a(5.0);
  const double delta0 = 1e-3 * (1.0 - m5->g_inf() * m5->g_inf());
  const auto levels = energy_window_scan(m5, 1e-2, 3, delta0, ens);
  REQUIRE(levels.size() == 3);
  CHECK(levels[1].level == doctest::Approx(1e-2));
  CHECK(levels[0].level < levels[1].level);
  for (const auto& l : levels) {
    CHECK(l.certified);
    CHECK(l.positive);
  }
  const auto flat = energy_window_scan(m5, 0.0, 2, delta0, ens);
  for (const auto& l : flat) {
    CHECK_FALSE(l.positive);
    CHECK(l.positive_fraction == 0.0);
  }
  CHECK_THROWS_AS(energy_window_scan(m5, 0.2, 3, delta0, ens), InvalidArgument);
}

TEST_CASE("action range: conserved momenta give zero oscillation") {
  const std::vector<SectionPoint> starts{{0.1, 0.2, 0.3, 0.1}, {-0.4, 0.5, 0.0, 0.6}};
  const auto zero = action_range(starts, 0.0, 50, opts25());
  CHECK(zero.max_2T <= 1e-12);
  CHECK(zero.ratio == 1.0);
  const auto steep = action_range({{0.3, -0.2, 0.8, 0.3}}, 1e-2, 50, opts25());
  CHECK(steep.max_2T <= 1e-8);
}

TEST_CASE("action range: perturbed orbits stay within the energy bound") {
  const auto starts = section_samples(4);
  const double eps = 1e-2;
  const auto rep = action_range(starts, eps, 100, opts25());
  CHECK(rep.max_T > 0.0);
  CHECK(rep.max_2T >= rep.max_T);
  // |p|^2 <= |p0|^2 + 2 eps max V along an orbit with xi = 1 somewhere.
  CHECK(rep.max_2T <= 2.0 * std::sqrt(0.8 + 2.0 * eps));
}

TEST_CASE("planar diameter") {
  CHECK(planar_diameter({}) == 0.0);
  CHECK(planar_diameter({{1.0, 1.0}, {1.0, 1.0}}) == 0.0);
  CHECK(planar_diameter({{0.0, 0.0}, {3.0, 4.0}, {1.0, 1.0}}) == doctest::Approx(5.0));
  std::vector<std::array<double, 2>> circle;
  for (int k = 0; k < 360; ++k) {
    circle.push_back({std::cos(k * M_PI / 180.0), std::sin(k * M_PI / 180.0)});
  }
  CHECK(planar_diameter(circle) == doctest::Approx(2.0).epsilon(1e-12));
}
