#include "dbg/profile.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dbg/error.hpp"
#include "dbg/smooth.hpp"

namespace dbg {

namespace {

using Gauss10 = boost::math::quadrature::gauss<double, 10>;

double poly_dd(double a, double l) { return -30.0 * a * l + 200.0 * a * a * l * l * l; }
double poly_ddd(double a, double l) { return -30.0 * a + 600.0 * a * a * l * l; }

// P(w) = 1 - 5aw + 10a^2w^2 with w = l^2, so rho = l P on [0, l1].
double poly_P(double a, double w) { return 1.0 - 5.0 * a * w + 10.0 * a * a * w * w; }

}  // namespace

void CapParams::validate() const {
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("cap parameter a must be positive");
  if (!(quadrature_tol > 0.0)) throw InvalidArgument("quadrature_tol must be positive");
  if (grid_n < 1000) throw InvalidArgument("grid_n must be at least 1000");
}

double CapBumps::lambda1(double l) const { return transition((l2 - l) / (l2 - l1)).v; }

double CapBumps::lambda1_d(double l) const {
  return -transition((l2 - l) / (l2 - l1)).d1 / (l2 - l1);
}

double CapBumps::lambda2(double l) const { return interval_bump((l - l1) / (l2 - l1)).v; }

double CapBumps::lambda2_d(double l) const {
  return interval_bump((l - l1) / (l2 - l1)).d1 / (l2 - l1);
}

CapBumps build_bumps(const CapParams& params) {
  params.validate();
  return {1.0 / std::sqrt(5.0 * params.a), 1.0 / (2.0 * std::sqrt(params.a))};
}

namespace {

// Composite 10-point Gauss-Legendre on [lo, hi] with panel doubling until two
// successive estimates agree to tol. Returns false when that never happens.
bool panel_integral(const std::function<double(double)>& f, double lo, double hi, double tol,
                    double& value) {
  auto composite = [&](int panels) {
    const double w = (hi - lo) / panels;
    double sum = 0.0;
    for (int k = 0; k < panels; ++k) sum += Gauss10::integrate(f, lo + k * w, lo + (k + 1) * w);
    return sum;
  };
  double prev = composite(8);
  for (int panels = 16; panels <= 8192; panels *= 2) {
    const double next = composite(panels);
    if (std::abs(next - prev) <= tol) {
      value = next;
      return std::isfinite(next);
    }
    prev = next;
  }
  return false;
}

}  // namespace

double normalize_C(const std::function<double(double)>& lambda1,
                   const std::function<double(double)>& lambda2, double a, double tol) {
  const double l1 = 1.0 / std::sqrt(5.0 * a);
  const double l2 = 1.0 / (2.0 * std::sqrt(a));
  auto f1 = [&](double l) { return lambda1(l) * poly_dd(a, l); };
  auto f2 = [&](double l) { return (1.0 - lambda1(l)) * lambda2(l); };
  double I1a = 0, I1b = 0, I2a = 0, I2b = 0;
  bool ok = panel_integral(f1, 0.0, l1, tol, I1a) && panel_integral(f1, l1, l2, tol, I1b) &&
            panel_integral(f2, 0.0, l1, tol, I2a) && panel_integral(f2, l1, l2, tol, I2b);
  // The bump integral enters multiplied by C, so refine it against the first estimate of C.
  const double c_scale = std::abs((I1a + I1b) / (I2a + I2b));
  if (ok && std::isfinite(c_scale) && c_scale > 1.0) {
    ok = panel_integral(f2, 0.0, l1, tol / c_scale, I2a) &&
         panel_integral(f2, l1, l2, tol / c_scale, I2b);
  }
  if (!ok) throw NormalizationFailed("normalization quadrature did not converge");
  const double I1 = I1a + I1b;
  const double I2 = I2a + I2b;
  if (!(I2 > 0.0)) throw NormalizationFailed("bump integral is not positive");
  const double C = -I1 / I2;
  if (!(C > 0.0)) throw NormalizationFailed("normalization constant is not positive");
  return C;
}

Profile Profile::flat() {
  Profile p;
  p.flat_ = true;
  p.params_.a = 0.0;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  p.l0_ = p.l1_ = p.l2_ = nan;
  return p;
}

double Profile::rho_dd(double l) const {
  if (flat_ || l >= l2_) return 0.0;
  const double a = params_.a;
  if (l <= l1_) return poly_dd(a, l);
  const double lam1 = bumps_.lambda1(l);
  return lam1 * poly_dd(a, l) + C_ * (1.0 - lam1) * bumps_.lambda2(l);
}

double Profile::rho_ddd(double l) const {
  if (flat_ || l >= l2_) return 0.0;
  const double a = params_.a;
  if (l <= l1_) return poly_ddd(a, l);
  const double lam1 = bumps_.lambda1(l);
  const double lam1d = bumps_.lambda1_d(l);
  const double lam2 = bumps_.lambda2(l);
  const double lam2d = bumps_.lambda2_d(l);
  return lam1d * poly_dd(a, l) + lam1 * poly_ddd(a, l) +
         C_ * (-lam1d * lam2 + (1.0 - lam1) * lam2d);
}

ProfileJet Profile::jet(double l) const {
  if (flat_) return {l, 1.0, 0.0, 0.0};
  const double a = params_.a;
  if (l <= l1_) {
    const double l2sq = l * l;
    return {l * poly_P(a, l2sq), (5.0 * a * l2sq - 1.0) * (10.0 * a * l2sq - 1.0), poly_dd(a, l),
            poly_ddd(a, l)};
  }
  const std::size_t n = node_rho_.size() - 1;
  if (l >= l2_) return {node_rho_[n] + (l - l2_) * node_d1_[n], node_d1_[n], 0.0, 0.0};
  std::size_t i = static_cast<std::size_t>((l - l1_) / cell_);
  i = std::min(i, n - 1);
  const double li = l1_ + static_cast<double>(i) * cell_;
  auto dd = [this](double s) { return rho_dd(s); };
  auto weighted = [&](double s) { return (l - s) * rho_dd(s); };
  const double d1 = node_d1_[i] + Gauss10::integrate(dd, li, l);
  const double rho = node_rho_[i] + (l - li) * node_d1_[i] + Gauss10::integrate(weighted, li, l);
  return {rho, d1, rho_dd(l), rho_ddd(l)};
}

double Profile::tail(double l) const {
  if (flat_ || l <= 0.0) return 0.0;
  const double a = params_.a;
  if (l <= l1_) {
    const double w = l * l;
    return l * (5.0 * a - 10.0 * a * a * w) / poly_P(a, w);
  }
  const double r = rho(l);
  return (l - r) / (l * r);
}

Profile build_profile(const CapParams& params) {
  params.validate();
  Profile p;
  p.params_ = params;
  const double a = params.a;
  p.l0_ = 1.0 / std::sqrt(10.0 * a);
  p.bumps_ = build_bumps(params);
  p.l1_ = p.bumps_.l1;
  p.l2_ = p.bumps_.l2;
  const CapBumps bumps = p.bumps_;
  p.C_ = normalize_C([bumps](double l) { return bumps.lambda1(l); },
                     [bumps](double l) { return bumps.lambda2(l); }, a, params.quadrature_tol);

  // Integrate rho'' twice across the collar, cell by cell, starting from the
  // polynomial values at l1.
  const int n = params.grid_n;
  p.cell_ = (p.l2_ - p.l1_) / n;
  p.node_rho_.resize(n + 1);
  p.node_d1_.resize(n + 1);
  const double l1 = p.l1_;
  p.node_rho_[0] = l1 * poly_P(a, l1 * l1);
  p.node_d1_[0] = (5.0 * a * l1 * l1 - 1.0) * (10.0 * a * l1 * l1 - 1.0);
  for (int i = 0; i < n; ++i) {
    const double lo = l1 + i * p.cell_;
    const double hi = (i + 1 == n) ? p.l2_ : l1 + (i + 1) * p.cell_;
    auto dd = [&p](double s) { return p.rho_dd(s); };
    auto weighted = [&p, hi](double s) { return (hi - s) * p.rho_dd(s); };
    p.node_d1_[i + 1] = p.node_d1_[i] + Gauss10::integrate(dd, lo, hi);
    p.node_rho_[i + 1] = p.node_rho_[i] + (hi - lo) * p.node_d1_[i] +
                         Gauss10::integrate(weighted, lo, hi);
  }
  return p;
}

double curvature_of_profile(const Profile& p, double l) {
  if (p.is_flat() || l >= p.l2()) return 0.0;
  const double a = p.a();
  if (l <= p.l1()) {
    // Quotient with the common factor l removed; exact at l = 0.
    const double w = l * l;
    return (30.0 * a - 200.0 * a * a * w) / poly_P(a, w);
  }
  return -p.rho_dd(l) / p.rho(l);
}

CertificateReport verify_profile(const Profile& p) {
  CertificateReport rep;
  const int samples = 1000;

  if (p.is_flat()) {
    double kmax = 0.0;
    for (int i = 0; i <= samples; ++i) {
      kmax = std::max(kmax, std::abs(curvature_of_profile(p, 2.0 * i / samples)));
    }
    const ProfileJet j0 = p.jet(0.0);
    rep.add("rho_origin", j0.rho == 0.0 && j0.d1 == 1.0, std::abs(j0.d1 - 1.0));
    rep.add("critical_parallels", false, kmax, "no zeros of rho'; K identically zero");
    rep.add("curvature_sign_cap", false, kmax, "K identically zero");
    rep.add("curvature_negative_collar", false, kmax, "K identically zero");
    rep.add("flat_beyond_l2", kmax == 0.0, kmax, "K identically zero");
    return rep;
  }

  const double a = p.a();
  const double l0 = p.l0(), l1 = p.l1(), l2 = p.l2();

  const ProfileJet j0 = p.jet(0.0);
  rep.add("rho_origin", j0.rho == 0.0 && j0.d1 == 1.0, std::abs(j0.d1 - 1.0));

  bool positive = true, below = true;
  double rho_excess = 0.0;
  for (int i = 1; i <= 4 * samples; ++i) {
    const double l = 2.0 * l2 * i / (4 * samples);
    const double r = p.rho(l);
    positive = positive && r > 0.0;
    rho_excess = std::max(rho_excess, r - l);
    below = below && r <= l * (1.0 + 1e-14);
  }
  rep.add("rho_positive", positive, 0.0);
  rep.add("rho_below_identity", below, rho_excess);

  const double crit = std::max(std::abs(p.rho_d(l0)), std::abs(p.rho_d(l1)));
  rep.add("critical_parallels", crit <= 1e-10, crit);

  // rho' >= 0 off [l0, l1] and <= 0 on it.
  double sign_violation = 0.0;
  for (int i = 0; i <= 4 * samples; ++i) {
    const double l = 2.0 * l2 * i / (4 * samples);
    const double d = p.rho_d(l);
    if (l < l0 || l > l1) {
      sign_violation = std::max(sign_violation, -d);
    } else {
      sign_violation = std::max(sign_violation, d);
    }
  }
  rep.add("rho_prime_sign", sign_violation <= 1e-12, sign_violation);

  double kmin_inner = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= samples; ++i) {
    kmin_inner = std::min(kmin_inner, curvature_of_profile(p, l0 * i / samples));
  }
  const double k1 = curvature_of_profile(p, l1);
  rep.add("curvature_sign_cap", kmin_inner > 0.0 && k1 < 0.0, std::min(kmin_inner, -k1));

  double id_res = 0.0;
  double id_min = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= samples; ++i) {
    const double l = l1 * i / samples;
    const ProfileJet j = p.jet(l);
    const double lhs = j.rho * j.d3 - j.d1 * j.d2;
    const double rhs = 100.0 * a * a * l * l * l * (1.0 + 12.0 * a * l * l - 40.0 * a * a * l * l * l * l);
    id_res = std::max(id_res, std::abs(lhs - rhs) / std::max(1.0, std::abs(rhs)));
    id_min = std::min(id_min, lhs);
  }
  rep.add("identity_residual", id_res <= 1e-9, id_res);
  rep.add("curvature_decreasing", id_min > 0.0, id_min,
          "sign of rho rho''' - rho' rho'' on (0, l1]");

  double kmax_collar = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < samples; ++i) {
    const double x = 0.01 + 0.98 * i / samples;
    kmax_collar = std::max(kmax_collar, curvature_of_profile(p, l1 + x * (l2 - l1)));
  }
  rep.add("curvature_negative_collar", kmax_collar < 0.0, kmax_collar);

  double flat_res = 0.0;
  for (int i = 0; i <= samples; ++i) {
    const double l = l2 * (1.0 + 3.0 * i / samples);
    flat_res = std::max(flat_res, std::abs(p.rho_d(l) - 1.0));
    flat_res = std::max(flat_res, std::abs(curvature_of_profile(p, l)));
  }
  rep.add("flat_beyond_l2", flat_res <= 1e-10, flat_res);
  return rep;
}

}  // namespace dbg
