#pragma once

#include <functional>
#include <vector>

#include "dbg/report.hpp"

namespace dbg {

struct CapParams {
  double a = 5.0;
  double quadrature_tol = 1e-12;
  int grid_n = 4096;

  /// Throws InvalidArgument when a field is out of range.
  void validate() const;
};

/// The cutoff lambda1 and bump lambda2 living on the collar [l1, l2].
struct CapBumps {
  double l1 = 0.0;
  double l2 = 0.0;

  double lambda1(double l) const;
  double lambda1_d(double l) const;
  double lambda2(double l) const;
  double lambda2_d(double l) const;
};

CapBumps build_bumps(const CapParams& params);

/// C such that the integral of lambda1*(-30al+200a^2l^3) + C(1-lambda1)lambda2
/// over [0, 1/(2 sqrt a)] vanishes. Throws NormalizationFailed.
double normalize_C(const std::function<double(double)>& lambda1,
                   const std::function<double(double)>& lambda2, double a, double tol);

struct ProfileJet {
  double rho = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;
  double d3 = 0.0;
};

/// Radial profile rho(l) of the cap in geodesic polar coordinates.
class Profile {
 public:
  /// rho(l) = l, used as the no-cap reference.
  static Profile flat();

  bool is_flat() const { return flat_; }
  const CapParams& params() const { return params_; }
  double a() const { return params_.a; }
  double C() const { return C_; }
  double l0() const { return l0_; }
  double l1() const { return l1_; }
  double l2() const { return l2_; }
  const CapBumps& bumps() const { return bumps_; }

  ProfileJet jet(double l) const;
  double rho(double l) const { return jet(l).rho; }
  double rho_d(double l) const { return jet(l).d1; }
  double rho_dd(double l) const;
  double rho_ddd(double l) const;

  /// 1/rho(l) - 1/l, evaluated without cancellation on the polynomial piece.
  double tail(double l) const;

 private:
  friend Profile build_profile(const CapParams& params);
  Profile() = default;

  CapParams params_;
  bool flat_ = false;
  double C_ = 0.0;
  double l0_ = 0.0, l1_ = 0.0, l2_ = 0.0;
  CapBumps bumps_;
  double cell_ = 0.0;
  std::vector<double> node_rho_;
  std::vector<double> node_d1_;
};

Profile build_profile(const CapParams& params);

/// K(l) = -rho''(l)/rho(l), with the l -> 0 limit 30a.
double curvature_of_profile(const Profile& p, double l);

CertificateReport verify_profile(const Profile& p);

}  // namespace dbg
