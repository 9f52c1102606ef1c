#include "dbg/lens.hpp"

#include <algorithm>
#include <boost/math/tools/roots.hpp>
#include <boost/random/sobol.hpp>
#include <cmath>

#include "dbg/error.hpp"
#include "dbg/lyapunov.hpp"
#include "dbg/parallel.hpp"
#include "dbg/profile.hpp"

namespace dbg {

namespace {

constexpr double kGrazing = 1e-12;
/// Below this |cov_z| the face points are far out and the branch check only adds rounding.
constexpr double kConsistencyMinVz = 0.3;
constexpr std::uint32_t kLensStream = 0x4c454e53u;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

using Embedding = std::array<double, 6>;  // (q, p) in T*R^3

/// W_ab = sum_i dq_i/da dp_i/db - dp_i/da dq_i/db, matching the section form.
template <class Embed>
Mat4 pullback(const Embed& embed, const Vec4& z, double step) {
  auto derivative = [&](int j, double h) {
    Vec4 plus = z, minus = z;
    plus[j] += h;
    minus[j] -= h;
    const Embedding a = embed(plus), b = embed(minus);
    Embedding d{};
    for (int i = 0; i < 6; ++i) d[i] = (a[i] - b[i]) / (2.0 * h);
    return d;
  };
  std::array<Embedding, 4> E{};
  for (int j = 0; j < 4; ++j) {
    const Embedding c = derivative(j, step), f = derivative(j, 0.5 * step);
    for (int i = 0; i < 6; ++i) E[j][i] = (4.0 * f[i] - c[i]) / 3.0;
  }
  Mat4 W{};
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      double s = 0.0;
      for (int i = 0; i < 3; ++i) s += E[a][i] * E[b][3 + i] - E[a][3 + i] * E[b][i];
      W[a][b] = s;
    }
  }
  return W;
}

/// Cyclic coordinate frame: physical index of the chart's k-th axis.
int phys(int axis, int k) { return (axis + k) % 3; }

struct SphereFrame {
  Vec3 foot{}, et{}, ef{};
};

SphereFrame sphere_frame(double t, double f, int axis) {
  const double ct = std::cos(t), st = std::sin(t), cf = std::cos(f), sf = std::sin(f);
  const Vec3 local_foot{ct, st * cf, st * sf};
  const Vec3 local_et{-st, ct * cf, ct * sf};
  const Vec3 local_ef{0.0, -sf, cf};
  SphereFrame fr;
  for (int k = 0; k < 3; ++k) {
    fr.foot[phys(axis, k)] = local_foot[k];
    fr.et[phys(axis, k)] = local_et[k];
    fr.ef[phys(axis, k)] = local_ef[k];
  }
  return fr;
}

double wrap_angle(double d) { return std::remainder(d, 2.0 * M_PI); }

/// Solves A x = b by partial pivoting; A is 4x4.
Vec4 solve4(Mat4 A, Vec4 b) {
  for (int c = 0; c < 4; ++c) {
    int piv = c;
    for (int r = c + 1; r < 4; ++r) {
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    }
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    if (A[c][c] == 0.0) throw InvalidArgument("singular Jacobian in inverse refinement");
    for (int r = c + 1; r < 4; ++r) {
      const double m = A[r][c] / A[c][c];
      for (int k = c; k < 4; ++k) A[r][k] -= m * A[c][k];
      b[r] -= m * b[c];
    }
  }
  Vec4 x{};
  for (int r = 3; r >= 0; --r) {
    double s = b[r];
    for (int k = r + 1; k < 4; ++k) s -= A[r][k] * x[k];
    x[r] = s / A[r][r];
  }
  return x;
}

PerturbedMapOptions map_options(const SigmaEpsConfig& config) {
  PerturbedMapOptions o = config.map;
  o.metric = config.metric;
  return o;
}

/// Time -2 map of H~_eps from the reversal conjugation, refined by Newton steps
/// on the forward map until it reproduces the target to 1e-10.
SectionPoint R_eps_inverse(const SectionPoint& target, double eps, const PerturbedMapOptions& o) {
  constexpr double time = 2.0;
  SectionPoint z = R_eps(target, eps, o, -time);
  for (int it = 0; it < 4; ++it) {
    const SectionPoint img = R_eps(z, eps, o, time);
    if (section_distance(img, target) <= 1e-10) return z;
    const Mat4 D = fd_jacobian(
        [&](const SectionPoint& w) { return R_eps(w, eps, o, time); }, z, 1e-6);
    const Vec4 res{img.x - target.x, img.y - target.y, img.alpha - target.alpha,
                   img.beta - target.beta};
    const Vec4 dz = solve4(D, res);
    z = {z.x - dz[0], z.y - dz[1], z.alpha - dz[2], z.beta - dz[3]};
  }
  if (section_distance(R_eps(z, eps, o, time), target) > 1e-10) {
    throw StepRejected("inverse of the perturbed map did not refine to 1e-10");
  }
  return z;
}

}  // namespace

BoundaryCovector negate(const BoundaryCovector& c) {
  return {c.foot, {-c.cov[0], -c.cov[1], -c.cov[2]}, !c.inward};
}

double boundary_distance(const BoundaryCovector& a, const BoundaryCovector& b) {
  double m = a.inward == b.inward ? 0.0 : 2.0;
  for (int i = 0; i < 3; ++i) {
    m = std::max({m, std::abs(a.foot[i] - b.foot[i]), std::abs(a.cov[i] - b.cov[i])});
  }
  return m;
}

BoundaryCovector lens_map(const BoundaryCovector& v) {
  const double pair = dot(v.foot, v.cov);
  if (!v.inward || !(pair < -kGrazing)) {
    throw TangentRay("lens map needs a transversal inward covector");
  }
  BoundaryCovector out = v;
  for (int i = 0; i < 3; ++i) out.foot[i] = v.foot[i] - 2.0 * pair * v.cov[i];
  out.inward = false;
  return out;
}

BoundaryCovector dual_lens(const BoundaryCovector& chi) { return lens_map(chi); }

FaceCovector lift_to_face(const SectionPoint& p, bool upper) {
  const double s = p.alpha * p.alpha + p.beta * p.beta;
  if (!(s < 1.0)) throw DegenerateCovector("alpha^2 + beta^2 must stay below 1");
  return {p.x, p.y, p.alpha, p.beta, std::sqrt(1.0 - s), upper};
}

SectionPoint project_face(const FaceCovector& f) { return {f.x, f.y, f.alpha, f.beta}; }

BoundaryCovector phi1(const FaceCovector& zeta) {
  if (zeta.upper) throw InvalidArgument("phi1 acts on the lower face");
  const Vec3 q0{zeta.x, zeta.y, -1.0};
  const Vec3 v{zeta.alpha, zeta.beta, zeta.gamma};
  const double b = dot(q0, v);
  const double c = dot(q0, q0) - 1.0;
  const double disc = b * b - c;
  if (!(b < 0.0) || !(disc > kGrazing * kGrazing)) {
    throw MissesBall("forward line from the lower face misses the ball");
  }
  const double root = std::sqrt(disc);
  const double t = c / (-b + root);
  BoundaryCovector out;
  for (int i = 0; i < 3; ++i) out.foot[i] = q0[i] + t * v[i];
  out.cov = v;
  out.inward = true;
  return out;
}

BoundaryCovector phi2(const FaceCovector& eta) {
  if (!eta.upper) throw InvalidArgument("phi2 acts on the upper face");
  const Vec3 q0{eta.x, eta.y, 1.0};
  const Vec3 v{eta.alpha, eta.beta, eta.gamma};
  const double b = dot(q0, v);
  const double c = dot(q0, q0) - 1.0;
  const double disc = b * b - c;
  if (!(b > 0.0) || !(disc > kGrazing * kGrazing)) {
    throw MissesBall("backward line from the upper face misses the ball");
  }
  const double t = c / (b + std::sqrt(disc));
  BoundaryCovector out;
  for (int i = 0; i < 3; ++i) out.foot[i] = q0[i] - t * v[i];
  out.cov = v;
  out.inward = false;
  return out;
}

FaceCovector phi1_inverse(const BoundaryCovector& chi) {
  if (!chi.inward || !(chi.cov[2] > 0.0)) {
    throw InvalidArgument("phi1 inverse needs an inward covector with positive z component");
  }
  const double t = (-1.0 - chi.foot[2]) / chi.cov[2];
  return {chi.foot[0] + t * chi.cov[0], chi.foot[1] + t * chi.cov[1], chi.cov[0], chi.cov[1],
          chi.cov[2], false};
}

FaceCovector phi2_inverse(const BoundaryCovector& chi) {
  if (chi.inward || !(chi.cov[2] > 0.0)) {
    throw InvalidArgument("phi2 inverse needs an outward covector with positive z component");
  }
  const double t = (1.0 - chi.foot[2]) / chi.cov[2];
  return {chi.foot[0] + t * chi.cov[0], chi.foot[1] + t * chi.cov[1], chi.cov[0], chi.cov[1],
          chi.cov[2], true};
}

Vec4 boundary_chart(const BoundaryCovector& c, int axis) {
  if (axis != 0 && axis != 1) throw InvalidArgument("chart axis must be 0 or 1");
  const double a = c.foot[phys(axis, 0)], b = c.foot[phys(axis, 1)], d = c.foot[phys(axis, 2)];
  const double t = std::atan2(std::hypot(b, d), a);
  const double f = std::atan2(d, b);
  const SphereFrame fr = sphere_frame(t, f, axis);
  return {t, f, dot(c.cov, fr.et), dot(c.cov, fr.ef)};
}

BoundaryCovector boundary_from_chart(const Vec4& z, bool inward, int axis) {
  if (axis != 0 && axis != 1) throw InvalidArgument("chart axis must be 0 or 1");
  const double tang = z[2] * z[2] + z[3] * z[3];
  if (!(tang < 1.0)) throw DegenerateCovector("tangential part must stay below unit length");
  const SphereFrame fr = sphere_frame(z[0], z[1], axis);
  const double n = (inward ? -1.0 : 1.0) * std::sqrt(1.0 - tang);
  BoundaryCovector c;
  c.foot = fr.foot;
  for (int i = 0; i < 3; ++i) c.cov[i] = z[2] * fr.et[i] + z[3] * fr.ef[i] + n * fr.foot[i];
  c.inward = inward;
  return c;
}

int chart_axis(const BoundaryCovector& c) { return std::abs(c.foot[0]) > 0.7 ? 1 : 0; }

Mat4 boundary_form(const Vec4& z, bool inward, int axis, double step) {
  return pullback(
      [&](const Vec4& w) {
        const BoundaryCovector c = boundary_from_chart(w, inward, axis);
        return Embedding{c.foot[0], c.foot[1], c.foot[2], c.cov[0], c.cov[1], c.cov[2]};
      },
      z, step);
}

Mat4 face_form(const Vec4& z, bool upper, double step) {
  return pullback(
      [&](const Vec4& w) {
        const FaceCovector f = lift_to_face(to_point(w), upper);
        return Embedding{f.x, f.y, upper ? 1.0 : -1.0, f.alpha, f.beta, f.gamma};
      },
      z, step);
}

double chart_symplectic_defect(const ChartMap& F, const Vec4& z, const Mat4& W_in,
                               const std::function<Mat4(const Vec4&)>& W_out, double step,
                               bool angular_output) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  auto central = [&](double h) {
    Mat4 D{};
    for (int j = 0; j < 4; ++j) {
      Vec4 plus = z, minus = z;
      plus[j] += h;
      minus[j] -= h;
      const Vec4 a = F(plus), b = F(minus);
      for (int i = 0; i < 4; ++i) {
        double d = a[i] - b[i];
        if (angular_output && i == 1) d = wrap_angle(d);
        D[i][j] = d / (2.0 * h);
      }
    }
    return D;
  };
  const Mat4 coarse = central(step), fine = central(0.5 * step);
  Mat4 D{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) D[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
  }
  const Mat4 Wo = W_out(F(z));
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) s += D[k][i] * Wo[k][l] * D[l][j];
      }
      worst = std::max(worst, std::abs(s - W_in[i][j]));
    }
  }
  return worst;
}

namespace {

/// Defect of a boundary-to-boundary map in charts adapted to the input and its image.
double boundary_map_defect(const std::function<BoundaryCovector(const BoundaryCovector&)>& map,
                           const BoundaryCovector& chi, double step) {
  const int ain = chart_axis(chi);
  const BoundaryCovector image = map(chi);
  const int aout = chart_axis(image);
  const bool in_dir = chi.inward, out_dir = image.inward;
  const Vec4 z = boundary_chart(chi, ain);
  const ChartMap F = [&](const Vec4& w) {
    return boundary_chart(map(boundary_from_chart(w, in_dir, ain)), aout);
  };
  return chart_symplectic_defect(
      F, z, boundary_form(z, in_dir, ain, step),
      [&](const Vec4& w) { return boundary_form(w, out_dir, aout, step); }, step, true);
}

double face_map_defect(const std::function<BoundaryCovector(const FaceCovector&)>& map,
                       const FaceCovector& zeta, double step) {
  const bool upper = zeta.upper;
  const BoundaryCovector image = map(zeta);
  const int aout = chart_axis(image);
  const bool out_dir = image.inward;
  const Vec4 z{zeta.x, zeta.y, zeta.alpha, zeta.beta};
  const ChartMap F = [&](const Vec4& w) {
    return boundary_chart(map(lift_to_face(to_point(w), upper)), aout);
  };
  return chart_symplectic_defect(
      F, z, face_form(z, upper, step),
      [&](const Vec4& w) { return boundary_form(w, out_dir, aout, step); }, step, true);
}

}  // namespace

double symplectic_defect_sigma0(const BoundaryCovector& chi, double step) {
  return boundary_map_defect(dual_lens, chi, step);
}

double symplectic_defect_phi1(const FaceCovector& zeta, double step) {
  return face_map_defect(phi1, zeta, step);
}

double symplectic_defect_phi2(const FaceCovector& eta, double step) {
  return face_map_defect(phi2, eta, step);
}

double shadow_margin(const SupportRegion& K) {
  if (!(K.r2 >= 0.0) || !(K.max_momentum2 >= 0.0 && K.max_momentum2 < 1.0)) {
    throw InvalidArgument("support region needs r2 >= 0 and momentum bound in [0, 1)");
  }
  return K.r2 * (1.0 + std::sqrt(K.max_momentum2)) - std::sqrt(1.0 - K.max_momentum2);
}

double shadow_threshold_a(double a_lo, double a_hi) {
  auto margin = [](double a) {
    CapParams params;
    params.a = a;
    const Profile p = build_profile(params);
    const RadiusMap radius = solve_r_of_l(p);
    return shadow_margin({radius.r_of_l(p.l2()), 2.0 / 3.0});
  };
  const double lo = margin(a_lo), hi = margin(a_hi);
  if (!(lo > 0.0 && hi < 0.0)) throw InvalidArgument("shadow threshold is not bracketed");
  const auto br = boost::math::tools::bisect(
      margin, a_lo, a_hi, boost::math::tools::eps_tolerance<double>(30));
  return br.second;
}

std::vector<SectionPoint> support_samples(const SupportRegion& K, std::size_t n) {
  shadow_margin(K);
  boost::random::sobol gen(4);
  const double scale = 0x1.0p-64;
  std::vector<SectionPoint> out(n);
  for (auto& p : out) {
    const double u0 = static_cast<double>(gen()) * scale;
    const double u1 = static_cast<double>(gen()) * scale;
    const double u2 = static_cast<double>(gen()) * scale;
    const double u3 = static_cast<double>(gen()) * scale;
    const double r = K.r2 * std::sqrt(u0), th = 2.0 * M_PI * u1;
    const double rho = std::sqrt(u2 * K.max_momentum2), ph = 2.0 * M_PI * u3;
    p = {r * std::cos(th), r * std::sin(th), rho * std::cos(ph), rho * std::sin(ph)};
  }
  return out;
}

DecompositionReport decomposition_check(const std::vector<SectionPoint>& sample) {
  DecompositionReport rep;
  rep.samples = sample.size();
  for (const SectionPoint& p : sample) {
    try {
      const SectionPoint lhs = R_exact(p, 2.0);
      const SectionPoint rhs = project_face(phi2_inverse(dual_lens(phi1(lift_to_face(p, false)))));
      rep.residual = std::max(rep.residual, section_distance(lhs, rhs));
    } catch (const MissesBall&) {
      ++rep.excluded;
    }
  }
  return rep;
}

BoundaryCovector sigma_eps(const SigmaEpsConfig& config, const BoundaryCovector& chi) {
  if (!config.metric) throw InvalidArgument("sigma_eps needs a metric");
  if (!chi.inward || !(dot(chi.foot, chi.cov) < -kGrazing)) {
    throw TangentRay("sigma_eps needs a transversal inward covector");
  }
  const double vz = chi.cov[2];
  const bool perturbed = 1.0 - vz * vz < 2.0 / 3.0;
  if (!perturbed && std::abs(vz) < kConsistencyMinVz) return dual_lens(chi);
  const PerturbedMapOptions o = map_options(config);
  BoundaryCovector out;
  if (vz > 0.0) {
    const SectionPoint zeta = project_face(phi1_inverse(chi));
    out = phi2(lift_to_face(R_eps(zeta, config.eps, o, 2.0), true));
  } else {
    const SectionPoint eta = project_face(phi2_inverse(negate(chi)));
    out = negate(phi1(lift_to_face(R_eps_inverse(eta, config.eps, o), false)));
  }
  if (perturbed) return out;
  const BoundaryCovector plain = dual_lens(chi);
  const double gap = boundary_distance(out, plain);
  if (gap > config.branch_tol) {
    throw BranchConflict("sigma_eps branch departs from sigma0 outside the cutoff by " +
                         std::to_string(gap));
  }
  return plain;
}

double symplectic_defect_sigma_eps(const SigmaEpsConfig& config, const BoundaryCovector& chi,
                                   double step) {
  return boundary_map_defect([&](const BoundaryCovector& c) { return sigma_eps(config, c); }, chi,
                             step);
}

std::vector<BoundaryCovector> inward_samples(std::size_t n, std::uint64_t seed,
                                             double min_transversality) {
  if (!(min_transversality > 0.0 && min_transversality < 1.0)) {
    throw InvalidArgument("transversality bound must lie in (0, 1)");
  }
  std::vector<BoundaryCovector> out(n);
  auto unit = [](std::mt19937_64& gen) {
    const double z = 2.0 * uniform01(gen) - 1.0, ph = 2.0 * M_PI * uniform01(gen);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return Vec3{s * std::cos(ph), s * std::sin(ph), z};
  };
  for (std::size_t i = 0; i < n; ++i) {
    auto gen = orbit_stream(seed, i, kLensStream);
    BoundaryCovector c;
    c.foot = unit(gen);
    do {
      c.cov = unit(gen);
    } while (dot(c.foot, c.cov) > -min_transversality);
    c.inward = true;
    out[i] = c;
  }
  return out;
}

LensSuiteReport lens_suite(const SigmaEpsConfig& config, const LensSuiteOptions& options) {
  if (!config.metric) throw InvalidArgument("lens suite needs a metric");
  if (options.n == 0) throw InvalidArgument("lens suite needs samples");
  LensSuiteReport rep;
  rep.a = config.metric->profile().a();
  rep.eps = config.eps;
  rep.threshold_a = shadow_threshold_a();
  rep.n = options.n;
  const std::size_t n = options.n;
  const double h = options.fd_step;
  const SupportRegion K{config.metric->r2(), 2.0 / 3.0};
  const auto support = support_samples(K, n);
  rep.decomposition = decomposition_check(support);

  const auto generic = inward_samples(n, options.seed, 1e-3);
  const auto transversal = inward_samples(n, options.seed + 1, 0.2);

  struct Slot {
    double rev = 0, sphere = 0, sym = 0, vs0 = 0, d0 = 0, d1 = 0, d2 = 0, de = 0;
    bool undefined = false;
  };
  std::vector<Slot> slots(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    Slot& s = slots[i];
    const BoundaryCovector& nu = generic[i];
    const BoundaryCovector b = lens_map(nu);
    s.rev = boundary_distance(negate(lens_map(negate(b))), nu);
    s.sphere = std::abs(std::sqrt(dot(b.foot, b.foot)) - 1.0);
    s.d0 = symplectic_defect_sigma0(transversal[i], h);

    const FaceCovector lower = lift_to_face(support[i], false);
    s.d1 = symplectic_defect_phi1(lower, h);
    s.d2 = symplectic_defect_phi2(lift_to_face(R_exact(support[i], 2.0), true), h);

    const BoundaryCovector chi = i % 2 == 0 ? phi1(lower) : transversal[i];
    try {
      const BoundaryCovector out = sigma_eps(config, chi);
      s.sym = boundary_distance(negate(sigma_eps(config, negate(out))), chi);
      s.vs0 = boundary_distance(out, dual_lens(chi));
      s.de = symplectic_defect_sigma_eps(config, chi, h);
    } catch (const MissesBall&) {
      s.undefined = true;
    }
  });
  for (const Slot& s : slots) {
    rep.lens_reversibility = std::max(rep.lens_reversibility, s.rev);
    rep.sphere_residual = std::max(rep.sphere_residual, s.sphere);
    rep.sigma_eps_symmetry = std::max(rep.sigma_eps_symmetry, s.sym);
    rep.sigma_eps_vs_sigma0 = std::max(rep.sigma_eps_vs_sigma0, s.vs0);
    rep.defect_sigma0 = std::max(rep.defect_sigma0, s.d0);
    rep.defect_phi1 = std::max(rep.defect_phi1, s.d1);
    rep.defect_phi2 = std::max(rep.defect_phi2, s.d2);
    rep.defect_sigma_eps = std::max(rep.defect_sigma_eps, s.de);
    if (s.undefined) ++rep.sigma_eps_undefined;
  }
  return rep;
}

}  // namespace dbg
