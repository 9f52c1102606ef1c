#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <memory>
#include <vector>

#include "dbg/conformal.hpp"
#include "dbg/integrator.hpp"
#include "dbg/lyapunov.hpp"

namespace dbg {

/// Point of B*T0: position (x, y), lifted or wrapped, and covector (alpha, beta)
/// with alpha^2 + beta^2 < 1.
struct SectionPoint {
  double x = 0.0;
  double y = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
};

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<Vec4, 4>;

inline Vec4 to_vec(const SectionPoint& p) { return {p.x, p.y, p.alpha, p.beta}; }
inline SectionPoint to_point(const Vec4& v) { return {v[0], v[1], v[2], v[3]}; }

/// Position reduced to [-1, 1)^2.
SectionPoint wrap_section(const SectionPoint& p);
/// (x, y, alpha, beta) -> (x, y, -alpha, -beta).
SectionPoint reverse_momentum(const SectionPoint& p);
/// Max-norm distance of the lifts.
double section_distance(const SectionPoint& a, const SectionPoint& b);

/// Time-`time` map of -sqrt(1 - alpha^2 - beta^2) on the universal cover:
/// (x + time alpha / gamma, y + time beta / gamma, alpha, beta). time = 1 is the lift R.
/// Throws DegenerateCovector when alpha^2 + beta^2 >= 1 - 1e-12.
SectionPoint R_exact(const SectionPoint& p, double time = 1.0);
Mat4 R_exact_jacobian(const SectionPoint& p, double time = 1.0);

struct PerturbedMapOptions {
  std::shared_ptr<const RadialMetric> metric;
  double h = 1e-2;
  Scheme scheme = Scheme::Gauss6;
};

/// Time-`time` map of H~_eps = -sqrt(1 - 2 H_eps) on the universal cover, from the
/// fixed-step flow with free flights. Negative times use the momentum reversal
/// conjugation, which is the backward flow since H~_eps is even in the covector.
/// Throws EnergyOutOfRange unless 2 H_eps < 1 at p.
SectionPoint R_eps(const SectionPoint& p, double eps, const PerturbedMapOptions& options,
                   double time = 1.0);

/// |reverse(R_eps(reverse(R_eps(p)))) - p|, zero for a reversible map.
double reversibility_residual(const SectionPoint& p, double eps, const PerturbedMapOptions& options,
                              double time = 1.0);

using SectionMap = std::function<SectionPoint(const SectionPoint&)>;

/// Central-difference Jacobian D[i][j] = d map_i / d z_j.
Mat4 fd_jacobian(const SectionMap& map, const SectionPoint& p, double step);
/// Richardson extrapolation of central differences at step and step / 2.
Mat4 fd_jacobian_richardson(const SectionMap& map, const SectionPoint& p, double step);

/// max |D^T Omega D - Omega| with Omega the standard form in (x, y, alpha, beta).
double symplectic_defect(const Mat4& D);
double symplectic_defect(const SectionMap& map, const SectionPoint& p, double fd_step);

/// Sobol points: (x, y) uniform on [-1, 1)^2, (alpha, beta) uniform on the disc
/// alpha^2 + beta^2 < max_momentum2.
std::vector<SectionPoint> section_samples(std::size_t n, double max_momentum2 = 0.8);

struct ClosenessRow {
  double eps = 0.0;
  double c0 = 0.0;                 // sup |R_eps - R| over the sample
  double c1 = 0.0;                 // sup |D R_eps - D R| (Richardson differences)
  double symplectic_defect = 0.0;  // sup over the sample, Richardson Jacobian of R_eps
  double outside_cutoff = 0.0;     // sup |R_eps - R| over alpha^2 + beta^2 >= 2/3
  double support_momentum2 = 0.0;  // sup alpha^2 + beta^2 where |R_eps - R| > 1e-8
  std::size_t support_count = 0;
};

struct MapClosenessReport {
  std::size_t n_samples = 0;
  int m = 1;
  double max_momentum2 = 0.0;
  double fd_step = 0.0;
  std::vector<ClosenessRow> rows;
  std::vector<double> order_c0;  // log ratio / log eps ratio between neighbouring rows
  std::vector<double> order_c1;
};

struct ClosenessOptions {
  std::size_t n = 10000;
  int m = 1;  // 0: C0 only
  double max_momentum2 = 0.8;
  double fd_step = 1e-5;
  unsigned threads = 1;
};

MapClosenessReport closeness_scan(const std::vector<double>& eps_grid,
                                  const PerturbedMapOptions& map_options,
                                  const ClosenessOptions& options = {});

/// Energy levels in (eps (1 - delta0), eps (1 + delta0)) and their Lyapunov
/// positivity. On {H_eps = h} with xi = 1 the orbits are geodesics of
/// g^2 + (h / eps - 1), so each level runs the ensemble on that shifted metric.
struct EnergyLevelResult {
  double level = 0.0;
  double delta = 0.0;
  bool certified = false;  // DBG certificate of the shifted metric
  double positive_fraction = 0.0;
  double positive_lower95 = 0.0;
  bool positive = false;  // Wilson lower bound > 0
};

/// `ensemble` supplies n_orbits, T, seed and the integration settings; its
/// Hamiltonian is replaced per level. eps = 0 or a flat metric gives the flat flow.
std::vector<EnergyLevelResult> energy_window_scan(const std::shared_ptr<const RadialMetric>& metric,
                                                  double eps, int n_levels, double delta0,
                                                  const SampleSpec& ensemble);

struct ActionRangeReport {
  double eps = 0.0;
  double T = 0.0;
  std::vector<double> diameter_T;   // per orbit, (alpha, beta) visited at integer times up to T
  std::vector<double> diameter_2T;  // same up to 2T
  double max_T = 0.0;
  double max_2T = 0.0;
  double ratio = 0.0;  // max_2T / max_T (1 when both vanish)
};

/// Iterates of R_eps (integer times) from each start up to 2T.
ActionRangeReport action_range(const std::vector<SectionPoint>& starts, double eps, double T,
                               const PerturbedMapOptions& options, unsigned threads = 1);

/// Diameter of a planar point set (convex hull and pairwise hull distances).
double planar_diameter(std::vector<std::array<double, 2>> pts);

}  // namespace dbg
