#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "dbg/returnmap.hpp"

namespace dbg {

using Vec3 = std::array<double, 3>;

/// Unit covector at a point of the unit sphere bounding the ball inscribed in
/// [-1, 1]^3. Euclidean: covectors and vectors are identified.
struct BoundaryCovector {
  Vec3 foot{};
  Vec3 cov{};
  bool inward = true;
};

/// Unit covector on the face plane z = -1 (lower) or z = +1 (upper), gamma > 0.
struct FaceCovector {
  double x = 0.0, y = 0.0;
  double alpha = 0.0, beta = 0.0, gamma = 1.0;
  bool upper = false;
};

/// (foot, cov) -> (foot, -cov): exchanges inward and outward.
BoundaryCovector negate(const BoundaryCovector& c);
double boundary_distance(const BoundaryCovector& a, const BoundaryCovector& b);

/// Straight chord: foot' = foot - 2 <foot, v> v, covector unchanged.
/// Throws TangentRay unless the input is inward with <foot, v> < -1e-12.
BoundaryCovector lens_map(const BoundaryCovector& v);
/// Dual lens map of the Euclidean ball; the Legendre transform is the identity.
BoundaryCovector dual_lens(const BoundaryCovector& chi);

/// Pi_-^{-1} and Pi_+^{-1}: gamma = sqrt(1 - alpha^2 - beta^2).
FaceCovector lift_to_face(const SectionPoint& p, bool upper);
SectionPoint project_face(const FaceCovector& f);

/// First sphere point of the forward line from a lower-face covector (inward).
/// Throws MissesBall when the line does not cross the sphere ahead.
BoundaryCovector phi1(const FaceCovector& zeta);
/// First sphere point of the backward line from an upper-face covector (outward).
BoundaryCovector phi2(const FaceCovector& eta);
/// Back along the line to z = -1; needs cov_z > 0.
FaceCovector phi1_inverse(const BoundaryCovector& chi);
/// Forward along the line to z = +1; needs cov_z > 0.
FaceCovector phi2_inverse(const BoundaryCovector& chi);

/// Chart on the boundary covectors: foot = (cos t, sin t cos f, sin t sin f) in the
/// cyclic frame starting at coordinate `axis` (0: polar axis x, 1: polar axis y),
/// covector components along e_t and e_f; the normal part has the sign of the
/// orientation.
Vec4 boundary_chart(const BoundaryCovector& c, int axis = 0);
BoundaryCovector boundary_from_chart(const Vec4& z, bool inward, int axis = 0);
/// Axis whose poles are far from the foot: 0 unless |foot_x| > 0.7.
int chart_axis(const BoundaryCovector& c);
/// Pullback of sum dp ^ dq through the chart embedding at chart point z, by
/// Richardson central differences.
Mat4 boundary_form(const Vec4& z, bool inward, int axis = 0, double step = 1e-5);

/// Pullback of sum dp ^ dq through the face chart (x, y, alpha, beta).
Mat4 face_form(const Vec4& z, bool upper, double step = 1e-5);

/// Max residual of DF^T W_out(F(z)) DF - W_in for a chart map F at z, with a
/// Richardson Jacobian. Output differences in component 1 are taken mod 2 pi when
/// `angular_output` is set.
using ChartMap = std::function<Vec4(const Vec4&)>;
double chart_symplectic_defect(const ChartMap& F, const Vec4& z, const Mat4& W_in,
                               const std::function<Mat4(const Vec4&)>& W_out, double step,
                               bool angular_output);

double symplectic_defect_sigma0(const BoundaryCovector& chi, double step = 1e-5);
double symplectic_defect_phi1(const FaceCovector& zeta, double step = 1e-5);
double symplectic_defect_phi2(const FaceCovector& eta, double step = 1e-5);

/// Support region used for the ball decomposition: base points within r2 of a
/// lattice point, covectors with alpha^2 + beta^2 <= 2/3.
struct SupportRegion {
  double r2 = 0.0;
  double max_momentum2 = 2.0 / 3.0;
};

/// r2 (1 + s) - gamma for the flattest covector of the region (s^2 = max_momentum2):
/// negative exactly when every line from the disc r <= r2 on z = -1 meets the ball.
double shadow_margin(const SupportRegion& K);
/// Smallest cap parameter a whose region lies in the ball shadow (bisection on r2(a)).
double shadow_threshold_a(double a_lo = 5.0, double a_hi = 100.0);

/// Uniform-ish sample of the region centred at the lattice point (0, 0) (Sobol).
std::vector<SectionPoint> support_samples(const SupportRegion& K, std::size_t n);

struct DecompositionReport {
  std::size_t samples = 0;
  std::size_t excluded = 0;  // MissesBall
  double residual = 0.0;     // max |R^2 - Pi+ phi2^-1 sigma0 phi1 Pi-^-1|
};

/// The chord from z = -1 to z = +1 has height 2, so the composition is compared
/// with the time-2 map R o R.
DecompositionReport decomposition_check(const std::vector<SectionPoint>& sample);

struct SigmaEpsConfig {
  std::shared_ptr<const RadialMetric> metric;
  double eps = 1e-2;
  PerturbedMapOptions map;  // metric is taken from this struct's `metric`
  double branch_tol = 1e-6;
};

/// Perturbed dual lens map. The perturbation of R^eps (time-2 map of H~_eps) is
/// supported in alpha^2 + beta^2 < 2/3, i.e. |cov_z| > 1/sqrt(3). There, for
/// cov_z > 0 the first branch phi2 Pi+^{-1} R^eps Pi- phi1^{-1}, for cov_z < 0 the
/// second branch -phi1 Pi-^{-1} (R^eps)^{-1} Pi+ phi2^{-1}(-chi); sigma0 elsewhere.
/// For 0.3 <= |cov_z| <= 1/sqrt(3) the branch is still evaluated and must agree with
/// sigma0 to branch_tol, otherwise BranchConflict. Throws MissesBall when the
/// perturbed chord no longer meets the ball.
BoundaryCovector sigma_eps(const SigmaEpsConfig& config, const BoundaryCovector& chi);
double symplectic_defect_sigma_eps(const SigmaEpsConfig& config, const BoundaryCovector& chi,
                                   double step = 1e-5);

/// Inward covectors with <foot, cov> <= -min_transversality, from a keyed stream.
std::vector<BoundaryCovector> inward_samples(std::size_t n, std::uint64_t seed,
                                             double min_transversality = 0.2);

struct LensSuiteOptions {
  std::size_t n = 1000;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  double fd_step = 1e-5;
};

struct LensSuiteReport {
  double a = 0.0;
  double eps = 0.0;
  double threshold_a = 0.0;
  std::size_t n = 0;
  double lens_reversibility = 0.0;  // max |-beta(-beta(nu)) - nu|
  double sphere_residual = 0.0;     // max ||foot'| - 1|
  double sigma_eps_symmetry = 0.0;  // max |-sigma_eps(-sigma_eps(chi)) - chi|
  double sigma_eps_vs_sigma0 = 0.0;  // max |sigma_eps - sigma0| over the sample
  double defect_sigma0 = 0.0;
  double defect_phi1 = 0.0;
  double defect_phi2 = 0.0;
  double defect_sigma_eps = 0.0;
  std::size_t sigma_eps_undefined = 0;  // generic samples whose perturbed chord misses the ball
  DecompositionReport decomposition;
};

/// Runs the lens identities. Reversibility uses inward covectors with
/// <foot, cov> <= -1e-3, the chart defects <= -0.2; sigma_eps samples alternate
/// between images phi1 Pi-^{-1} of the support region and the latter.
LensSuiteReport lens_suite(const SigmaEpsConfig& config, const LensSuiteOptions& options = {});

}  // namespace dbg
