#pragma once

#include <functional>
#include <array>
#include <memory>
#include <vector>

#include "dbg/profile.hpp"
#include "dbg/report.hpp"

namespace dbg {

/// The map l -> r(l) = l exp(int_0^l tail) solving dr/r = dl/rho, and its inverse.
/// Beyond l_max the profile is assumed to have rho' = 1, so r grows like rho.
class RadiusMap {
 public:
  RadiusMap(std::function<double(double)> tail, std::function<double(double)> rho, double l_max,
            int nodes);

  double log_ratio(double l) const;
  double r_of_l(double l) const;
  double l_of_r(double r) const;
  double l_max() const { return l_max_; }
  double r_max() const { return r_nodes_.back(); }

 private:
  std::function<double(double)> tail_;
  std::function<double(double)> rho_;
  double l_max_;
  double cell_;
  double rho_max_;
  std::vector<double> log_nodes_;
  std::vector<double> r_nodes_;
};

/// Throws SingularityFailure when the tail is unbounded at the origin.
RadiusMap solve_r_of_l(const Profile& p, int nodes = 4096);
RadiusMap solve_r_of_l(std::function<double(double)> rho, double l_max, int nodes = 4096);

/// Conformal factor and its first two derivatives with respect to u = r^2.
struct MetricJet {
  double g = 1.0;
  double g_u = 0.0;
  double g_uu = 0.0;
};

/// Value and u-derivatives of a quintic Hermite table on [0, u_max].
class QuinticTable {
 public:
  QuinticTable() = default;
  QuinticTable(double u_max, const std::vector<MetricJet>& nodes);
  MetricJet eval(double u) const;
  double u_max() const { return u_max_; }
  double spacing() const { return du_; }
  const std::vector<MetricJet>& nodes() const { return nodes_; }

 private:
  double u_max_ = 0.0;
  double du_ = 1.0;
  std::vector<MetricJet> nodes_;
  std::vector<std::array<double, 6>> coef_;
};

/// Cubic Lagrange interpolation of nodal values on a uniform grid in u.
class UniformCubic {
 public:
  UniformCubic() = default;
  UniformCubic(double u_max, std::vector<double> values);
  double eval(double u) const;

 private:
  double u_max_ = 0.0;
  double du_ = 1.0;
  std::vector<double> values_;
};

struct MetricOptions {
  int table_cells = 8192;
  int radius_nodes = 4096;
  double max_r2 = 0.95;
};

/// Conformal metric (g(r)^2 + delta)(dx^2 + dy^2) on the torus R^2 / (2Z)^2.
class RadialMetric {
 public:
  /// Euclidean metric, g = 1 everywhere.
  static RadialMetric flat();

  const Profile& profile() const { return *profile_; }
  std::shared_ptr<const Profile> profile_ptr() const { return profile_; }
  bool is_flat() const { return profile_->is_flat(); }
  double delta() const { return delta_; }
  double r0() const { return r0_; }
  double r1() const { return r1_; }
  double r2() const { return r2_; }
  double g_inf() const { return g_inf_; }

  double r_of_l(double l) const { return radius_->r_of_l(l); }
  double l_of_r(double r) const { return radius_->l_of_r(r); }

  /// Base factor g (without shift) evaluated from the profile: g = rho(l(r))/r.
  MetricJet exact(double r) const;
  /// Base factor g from the tabulated interpolant in u = r^2.
  MetricJet jet_u(double u) const;
  double g(double r) const { return jet_u(r * r).g; }

  /// Shifted factor G = g^2 + delta at u = r^2 (tabulated).
  double factor_u(double u) const;
  /// Gaussian curvature of G(dx^2 + dy^2) at u = r^2, interpolated from exact nodal values.
  double curvature_u(double u) const;
  /// Gaussian curvature computed from the exact jet.
  double curvature_exact(double r) const;

  /// Same metric with a different uniform shift.
  RadialMetric with_delta(double delta) const;

 private:
  friend RadialMetric build_metric(std::shared_ptr<const Profile>, double, const MetricOptions&);
  RadialMetric() = default;

  std::shared_ptr<const Profile> profile_;
  std::shared_ptr<const RadiusMap> radius_;
  std::shared_ptr<const QuinticTable> table_;
  std::shared_ptr<const UniformCubic> curvature_;
  double delta_ = 0.0;
  double r0_ = 0.0, r1_ = 0.0, r2_ = 0.0, g_inf_ = 1.0;
};

/// Curvature of G (dx^2 + dy^2) for a radial G known through (G, G_u, G_uu).
double conformal_curvature(double G, double G_u, double G_uu, double u);

RadialMetric build_metric(std::shared_ptr<const Profile> p, double delta = 0.0,
                          const MetricOptions& options = {});

/// Curvature at a point of the plane; the point is reduced to the nearest lattice image.
double gaussian_curvature_xy(const RadialMetric& m, double x, double y);

CertificateReport dbg_certificate(const RadialMetric& m);

/// Critical radii of r sqrt(G): the parallels that are geodesics.
std::vector<double> geodesic_parallels(const RadialMetric& m);

/// Largest |delta| = delta0 * 2^k (k < max_doublings) for which both signs certify,
/// or 0 if delta0 itself fails.
double largest_certified_shift(const RadialMetric& base, double delta0, int max_doublings = 12);

}  // namespace dbg
