#include <cmath>
#include <memory>

#include "dbg/error.hpp"
#include "dbg/lens.hpp"
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

SigmaEpsConfig config(double eps) {
  SigmaEpsConfig c;
  c.metric = metric25();
  c.eps = eps;
  return c;
}

double pairing(const BoundaryCovector& c) {
  return c.foot[0] * c.cov[0] + c.foot[1] * c.cov[1] + c.foot[2] * c.cov[2];
}

BoundaryCovector covector(Vec3 foot, Vec3 cov, bool inward = true) { return {foot, cov, inward}; }

/// Brute-force shadow test: lines from the rim of the disc r = r2 on z = -1 with the
/// flattest covector of the region, pointing radially outward, on an angular grid.
bool rim_lines_meet_ball(double r2) {
  const double s = std::sqrt(2.0 / 3.0);
  for (int k = 0; k < 64; ++k) {
    const double th = 2.0 * M_PI * k / 64.0;
    const SectionPoint p{r2 * std::cos(th), r2 * std::sin(th), s * std::cos(th), s * std::sin(th)};
    try {
      phi1(lift_to_face(p, false));
    } catch (const MissesBall&) {
      return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("lens map: chords through the centre") {
  const auto a = lens_map(covector({0, 0, -1}, {0, 0, 1}));
  CHECK(a.foot[2] == 1.0);
  CHECK(a.cov[2] == 1.0);
  CHECK_FALSE(a.inward);
  const auto b = lens_map(covector({1, 0, 0}, {-1, 0, 0}));
  CHECK(b.foot[0] == -1.0);
  CHECK(dual_lens(covector({1, 0, 0}, {-1, 0, 0})).foot[0] == -1.0);
}

TEST_CASE("lens map: grazing and outward inputs") {
  CHECK_THROWS_AS(lens_map(covector({1, 0, 0}, {0, 1, 0})), TangentRay);
  CHECK_THROWS_AS(lens_map(covector({1, 0, 0}, {1, 0, 0})), TangentRay);
  CHECK_THROWS_AS(lens_map(covector({1, 0, 0}, {-1, 0, 0}, false)), TangentRay);
  CHECK_THROWS_AS(dual_lens(covector({0, 1, 0}, {1e-13, 0, 1})), TangentRay);
}

TEST_CASE("lens map: reversibility and exit point on the sphere") {
  for (const auto& nu : inward_samples(1000, 7, 1e-3)) {
    CHECK(pairing(nu) <= -1e-3);
    const auto b = lens_map(nu);
    CHECK(std::abs(std::sqrt(b.foot[0] * b.foot[0] + b.foot[1] * b.foot[1] + b.foot[2] * b.foot[2]) -
                   1.0) <= 1e-12);
    CHECK(pairing(b) == doctest::Approx(-pairing(nu)).epsilon(1e-12));
    CHECK(boundary_distance(negate(lens_map(negate(b))), nu) <= 1e-7);
  }
}

TEST_CASE("inward samples are keyed by seed and index") {
  const auto a = inward_samples(20, 3);
  const auto b = inward_samples(40, 3);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(boundary_distance(a[i], b[i]) == 0.0);
  CHECK(boundary_distance(a[0], inward_samples(1, 4)[0]) > 0.0);
  CHECK_THROWS_AS(inward_samples(1, 1, 0.0), InvalidArgument);
}

TEST_CASE("transport maps: vertical ray, corner miss, inverses") {
  const auto chi = phi1(lift_to_face({0, 0, 0, 0}, false));
  CHECK(chi.foot[2] == -1.0);
  CHECK(chi.cov[2] == 1.0);
  CHECK(chi.inward);
  CHECK_THROWS_AS(phi1(lift_to_face({0.99, 0.99, 0.0, 0.0}, false)), MissesBall);
  CHECK_THROWS_AS(phi1(lift_to_face({0.99, 0.99, 0.1, 0.1}, false)), MissesBall);
  CHECK_THROWS_AS(phi2(lift_to_face({0.99, 0.99, 0.0, 0.0}, true)), MissesBall);
  CHECK_THROWS_AS(phi1(lift_to_face({0.0, 0.0, 0.0, 0.0}, true)), InvalidArgument);

  const SectionPoint p{0.1, -0.05, 0.3, 0.2};
  const auto in = phi1(lift_to_face(p, false));
  CHECK(pairing(in) < 0.0);
  CHECK(section_distance(project_face(phi1_inverse(in)), p) <= 1e-15);
  const auto out = phi2(lift_to_face(p, true));
  CHECK(pairing(out) > 0.0);
  CHECK_FALSE(out.inward);
  CHECK(section_distance(project_face(phi2_inverse(out)), p) <= 1e-15);
  CHECK_THROWS_AS(phi1_inverse(out), InvalidArgument);
  CHECK_THROWS_AS(lift_to_face({0, 0, 0.8, 0.6}, false), DegenerateCovector);
}

TEST_CASE("boundary chart: round trip and forms") {
  for (const auto& c : inward_samples(50, 11, 0.2)) {
    for (int axis : {0, 1}) {
      const auto back = boundary_from_chart(boundary_chart(c, axis), true, axis);
      CHECK(boundary_distance(back, c) <= 1e-14);
    }
    const Vec4 z = boundary_chart(c, chart_axis(c));
    const Mat4 W = boundary_form(z, true, chart_axis(c));
    double det_proxy = 0.0;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        CHECK(std::abs(W[i][j] + W[j][i]) <= 1e-12);
        det_proxy = std::max(det_proxy, std::abs(W[i][j]));
      }
    }
    CHECK(det_proxy > 0.1);
  }
  const Mat4 F = face_form({0.2, 0.1, 0.3, -0.1}, false);
  CHECK(F[0][2] == doctest::Approx(1.0));
  CHECK(F[1][3] == doctest::Approx(1.0));
  CHECK(std::abs(F[0][1]) <= 1e-12);
  CHECK_THROWS_AS(boundary_chart(inward_samples(1, 1)[0], 2), InvalidArgument);
}

TEST_CASE("symplectic defects of sigma0 and the transport maps") {
  for (const auto& c : inward_samples(200, 5, 0.2)) CHECK(symplectic_defect_sigma0(c) <= 1e-6);
  const SupportRegion K{metric25()->r2(), 2.0 / 3.0};
  for (const auto& p : support_samples(K, 200)) {
    CHECK(symplectic_defect_phi1(lift_to_face(p, false)) <= 1e-6);
    CHECK(symplectic_defect_phi2(lift_to_face(R_exact(p, 2.0), true)) <= 1e-6);
  }
}

TEST_CASE("a map that is not symplectic shows a defect") {
  const auto c = inward_samples(1, 9, 0.3)[0];
  const int ax = chart_axis(c);
  const Vec4 z = boundary_chart(c, ax);
  const ChartMap stretch = [](const Vec4& w) { return Vec4{w[0], w[1], 1.1 * w[2], w[3]}; };
  const double d = chart_symplectic_defect(
      stretch, z, boundary_form(z, true, ax),
      [&](const Vec4& w) { return boundary_form(w, true, ax); }, 1e-5, true);
  CHECK(d > 1e-2);
}

TEST_CASE("shadow threshold: closed form against a brute-force rim scan") {
  CHECK(shadow_margin({0.0, 2.0 / 3.0}) == doctest::Approx(-std::sqrt(1.0 / 3.0)));
  CHECK_THROWS_AS(shadow_margin({0.1, 1.0}), InvalidArgument);
  const double r_star = std::sqrt(1.0 / 3.0) / (1.0 + std::sqrt(2.0 / 3.0));
  CHECK(shadow_margin({r_star, 2.0 / 3.0}) == doctest::Approx(0.0).scale(1.0));
  CHECK(rim_lines_meet_ball(0.99 * r_star));
  CHECK_FALSE(rim_lines_meet_ball(1.01 * r_star));

  const double a_star = shadow_threshold_a();
  CHECK(a_star > 12.0);
  CHECK(a_star < 14.0);
  CHECK(rim_lines_meet_ball(metric_a(a_star * 1.02)->r2()));
  CHECK_FALSE(rim_lines_meet_ball(metric_a(a_star * 0.98)->r2()));
}

TEST_CASE("decomposition over the support region") {
  const auto m = metric25();
  const auto rep = decomposition_check(support_samples({m->r2(), 2.0 / 3.0}, 1000));
  CHECK(rep.samples == 1000);
  CHECK(rep.excluded == 0);
  CHECK(rep.residual <= 1e-9);
  const auto zero = decomposition_check({{0.1, -0.1, 0.0, 0.0}});
  CHECK(zero.residual <= 1e-15);
  // Below the threshold some rays of the region miss the ball.
  const auto m5 = metric_a(5.0);
  CHECK(decomposition_check(support_samples({m5->r2(), 2.0 / 3.0}, 1000)).excluded > 0);
}

TEST_CASE("sigma_eps: symmetric, sigma0 outside the perturbation, order one in eps") {
  const SupportRegion K{metric25()->r2(), 2.0 / 3.0};
  const auto pts = support_samples(K, 100);
  double gap2 = 0.0, gap3 = 0.0;
  for (const auto& p : pts) {
    const auto chi = phi1(lift_to_face(p, false));
    const auto out2 = sigma_eps(config(1e-2), chi);
    CHECK(boundary_distance(negate(sigma_eps(config(1e-2), negate(out2))), chi) <= 1e-7);
    gap2 = std::max(gap2, boundary_distance(out2, dual_lens(chi)));
    gap3 = std::max(gap3, boundary_distance(sigma_eps(config(1e-3), chi), dual_lens(chi)));
  }
  CHECK(gap2 > 0.0);
  const double order = std::log(gap2 / gap3) / std::log(10.0);
  CHECK(std::abs(order - 1.0) <= 0.3);

  const auto flat = covector({0, -1, 0}, {0.3, 0.95, 0.1});
  CHECK(boundary_distance(sigma_eps(config(1e-1), flat), dual_lens(flat)) == 0.0);
  CHECK(boundary_distance(sigma_eps(config(0.0), phi1(lift_to_face(pts[3], false))),
                          dual_lens(phi1(lift_to_face(pts[3], false)))) <= 1e-12);
}

TEST_CASE("sigma_eps: branch check against sigma0 and errors") {
  // |cov_z| = 0.5 lies outside the perturbation but inside the checked band.
  const double s = std::sqrt(0.75);
  const auto chi = covector({0, 0, -1}, {s, 0, 0.5});
  SigmaEpsConfig c = config(1e-2);
  CHECK(boundary_distance(sigma_eps(c, chi), dual_lens(chi)) == 0.0);
  c.map.h = 1e-2;
  CHECK_THROWS_AS(sigma_eps(c, covector({1, 0, 0}, {0, 0, 1})), TangentRay);
  SigmaEpsConfig none;
  CHECK_THROWS_AS(sigma_eps(none, chi), InvalidArgument);
}

TEST_CASE("sigma_eps: chart symplectic defect") {
  const SupportRegion K{metric25()->r2(), 2.0 / 3.0};
  const auto pts = support_samples(K, 60);
  for (const auto& p : pts) {
    CHECK(symplectic_defect_sigma_eps(config(1e-2), phi1(lift_to_face(p, false))) <= 1e-6);
  }
  for (const auto& chi : inward_samples(60, 21, 0.2)) {
    try {
      CHECK(symplectic_defect_sigma_eps(config(1e-2), chi) <= 1e-6);
    } catch (const MissesBall&) {
    }
  }
}

TEST_CASE("lens suite at a = 25") {
  LensSuiteOptions o;
  o.n = 200;
  const auto rep = lens_suite(config(1e-2), o);
  CHECK(rep.a == 25.0);
  CHECK(rep.threshold_a < rep.a);
  CHECK(rep.lens_reversibility <= 1e-7);
  CHECK(rep.sphere_residual <= 1e-12);
  CHECK(rep.sigma_eps_symmetry <= 1e-7);
  CHECK(rep.defect_sigma0 <= 1e-6);
  CHECK(rep.defect_phi1 <= 1e-6);
  CHECK(rep.defect_phi2 <= 1e-6);
  CHECK(rep.defect_sigma_eps <= 1e-6);
  CHECK(rep.decomposition.excluded == 0);
  CHECK(rep.decomposition.residual <= 1e-9);
  CHECK(rep.sigma_eps_vs_sigma0 > 0.0);
  CHECK(rep.sigma_eps_undefined < o.n / 4);
  o.threads = 3;
  const auto again = lens_suite(config(1e-2), o);
  CHECK(again.defect_sigma_eps == rep.defect_sigma_eps);
  CHECK(again.sigma_eps_undefined == rep.sigma_eps_undefined);
}
