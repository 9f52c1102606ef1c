#include "dbg/conformal.hpp"

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>
#include <limits>

#include "dbg/error.hpp"

namespace dbg {

namespace {

using Gauss10 = boost::math::quadrature::gauss<double, 10>;

double nearest_image(double x) { return x - 2.0 * std::round(0.5 * x); }

}  // namespace

RadiusMap::RadiusMap(std::function<double(double)> tail, std::function<double(double)> rho,
                     double l_max, int nodes)
    : tail_(std::move(tail)), rho_(std::move(rho)), l_max_(l_max) {
  if (!(l_max > 0.0) || nodes < 2) throw InvalidArgument("radius map needs l_max > 0");
  const double probe = 1e-8 * l_max;
  // A regular profile has tail(s) = O(s); rho'(0) != 1 gives tail ~ c/s.
  const double t = tail_(probe);
  if (!std::isfinite(t) || std::abs(t) * probe > 1e-6) {
    throw SingularityFailure("tail 1/rho - 1/l is unbounded near l = 0");
  }
  cell_ = l_max / nodes;
  log_nodes_.assign(nodes + 1, 0.0);
  r_nodes_.assign(nodes + 1, 0.0);
  for (int i = 0; i < nodes; ++i) {
    const double lo = i * cell_;
    const double hi = (i + 1 == nodes) ? l_max : (i + 1) * cell_;
    log_nodes_[i + 1] = log_nodes_[i] + Gauss10::integrate(tail_, lo, hi);
    r_nodes_[i + 1] = hi * std::exp(log_nodes_[i + 1]);
    if (!std::isfinite(r_nodes_[i + 1])) throw SingularityFailure("radius map is not finite");
  }
  rho_max_ = rho_(l_max);
}

double RadiusMap::log_ratio(double l) const {
  if (l <= 0.0) return 0.0;
  if (l >= l_max_) return log_nodes_.back() + std::log(rho_(l) / rho_max_) - std::log(l / l_max_);
  const std::size_t n = log_nodes_.size() - 1;
  const std::size_t i = std::min(static_cast<std::size_t>(l / cell_), n - 1);
  return log_nodes_[i] + Gauss10::integrate(tail_, i * cell_, l);
}

double RadiusMap::r_of_l(double l) const {
  if (l <= 0.0) return 0.0;
  if (l >= l_max_) return r_max() * rho_(l) / rho_max_;
  return l * std::exp(log_ratio(l));
}

double RadiusMap::l_of_r(double r) const {
  if (r <= 0.0) return 0.0;
  const double rmax = r_max();
  if (r >= rmax) return l_max_ + rho_max_ * (r / rmax - 1.0);
  // Linear interpolation on the monotone node table, then Newton on
  // F(l) = ln r(l) - ln r with F'(l) = 1/rho(l).
  auto it = std::upper_bound(r_nodes_.begin(), r_nodes_.end(), r);
  const std::size_t i = static_cast<std::size_t>(it - r_nodes_.begin()) - 1;
  const double frac = (r - r_nodes_[i]) / (r_nodes_[i + 1] - r_nodes_[i]);
  double l = (i + frac) * cell_;
  const double target = std::log(r);
  for (int iter = 0; iter < 20; ++iter) {
    const double F = std::log(l) + log_ratio(l) - target;
    const double step = F * rho_(l);
    double next = l - step;
    if (next <= 0.0) next = 0.5 * l;
    if (next > l_max_) next = 0.5 * (l + l_max_);
    const bool done = std::abs(next - l) <= 1e-15 * l;
    l = next;
    if (done) break;
  }
  return l;
}

RadiusMap solve_r_of_l(const Profile& p, int nodes) {
  if (p.is_flat()) {
    return RadiusMap([](double) { return 0.0; }, [](double l) { return l; }, 1.0, nodes);
  }
  auto prof = std::make_shared<const Profile>(p);
  return RadiusMap([prof](double s) { return prof->tail(s); },
                   [prof](double s) { return prof->rho(s); }, p.l2(), nodes);
}

RadiusMap solve_r_of_l(std::function<double(double)> rho, double l_max, int nodes) {
  auto tail = [rho](double s) { return s > 0.0 ? (s - rho(s)) / (s * rho(s)) : 0.0; };
  return RadiusMap(tail, std::move(rho), l_max, nodes);
}

QuinticTable::QuinticTable(double u_max, const std::vector<MetricJet>& nodes)
    : u_max_(u_max), du_(u_max / static_cast<double>(nodes.size() - 1)), nodes_(nodes) {
  coef_.resize(nodes.size() - 1);
  for (std::size_t i = 0; i + 1 < nodes.size(); ++i) {
    const double y0 = nodes[i].g, y1 = nodes[i + 1].g;
    const double d0 = nodes[i].g_u * du_, d1 = nodes[i + 1].g_u * du_;
    const double s0 = nodes[i].g_uu * du_ * du_, s1 = nodes[i + 1].g_uu * du_ * du_;
    const double dy = y1 - y0;
    coef_[i] = {y0,
                d0,
                0.5 * s0,
                10.0 * dy - 6.0 * d0 - 4.0 * d1 - 1.5 * s0 + 0.5 * s1,
                -15.0 * dy + 8.0 * d0 + 7.0 * d1 + 1.5 * s0 - s1,
                6.0 * dy - 3.0 * d0 - 3.0 * d1 - 0.5 * s0 + 0.5 * s1};
  }
}

MetricJet QuinticTable::eval(double u) const {
  if (u >= u_max_) {
    const auto& c = coef_.back();
    return {c[0] + c[1] + c[2] + c[3] + c[4] + c[5], 0.0, 0.0};
  }
  const double x = std::max(u, 0.0) / du_;
  const std::size_t i = std::min(static_cast<std::size_t>(x), coef_.size() - 1);
  const double t = x - static_cast<double>(i);
  const auto& c = coef_[i];
  const double v = c[0] + t * (c[1] + t * (c[2] + t * (c[3] + t * (c[4] + t * c[5]))));
  const double d = c[1] + t * (2.0 * c[2] + t * (3.0 * c[3] + t * (4.0 * c[4] + t * 5.0 * c[5])));
  const double dd = 2.0 * c[2] + t * (6.0 * c[3] + t * (12.0 * c[4] + t * 20.0 * c[5]));
  return {v, d / du_, dd / (du_ * du_)};
}

UniformCubic::UniformCubic(double u_max, std::vector<double> values)
    : u_max_(u_max), du_(u_max / static_cast<double>(values.size() - 1)), values_(std::move(values)) {
  if (values_.size() < 4) throw InvalidArgument("cubic table needs at least four nodes");
}

double UniformCubic::eval(double u) const {
  const double x = std::clamp(u, 0.0, u_max_) / du_;
  const std::size_t n = values_.size();
  std::size_t i = static_cast<std::size_t>(x);
  i = std::clamp<std::size_t>(i, 1, n - 3);
  const double t = x - static_cast<double>(i);
  const double f0 = values_[i - 1], f1 = values_[i], f2 = values_[i + 1], f3 = values_[i + 2];
  // Lagrange basis on nodes -1, 0, 1, 2.
  return f0 * (-t * (t - 1.0) * (t - 2.0) / 6.0) + f1 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0) +
         f2 * (-(t + 1.0) * t * (t - 2.0) / 2.0) + f3 * ((t + 1.0) * t * (t - 1.0) / 6.0);
}

RadialMetric RadialMetric::flat() {
  RadialMetric m;
  m.profile_ = std::make_shared<const Profile>(Profile::flat());
  m.radius_ = std::make_shared<const RadiusMap>(solve_r_of_l(*m.profile_, 16));
  m.table_ = std::make_shared<const QuinticTable>(
      1.0, std::vector<MetricJet>{{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
  m.r0_ = m.r1_ = m.r2_ = 0.0;
  m.g_inf_ = 1.0;
  return m;
}

MetricJet RadialMetric::exact(double r) const {
  if (is_flat()) return {1.0, 0.0, 0.0};
  if (r >= r2_) return {g_inf_, 0.0, 0.0};
  const Profile& p = *profile_;
  const double a = p.a();
  if (r <= 0.0) return {1.0, -7.5 * a, 118.75 * a * a};
  const double l = l_of_r(r);
  if (l <= p.l1()) {
    // Closed forms in w = l^2 with E = r/l; free of cancellation near the origin.
    const double w = l * l;
    const double P = 1.0 - 5.0 * a * w + 10.0 * a * a * w * w;
    const double E = std::exp(radius_->log_ratio(l));
    const double E3 = E * E * E;
    const double lin = -7.5 * a + 25.0 * a * a * w;
    return {P / E, lin * P / E3,
            P / (E3 * E * E) * (25.0 * a * a * P + lin * (-12.5 * a + 35.0 * a * a * w))};
  }
  const ProfileJet j = p.jet(l);
  const double g = j.rho / r;
  const double m1 = j.d1 - 1.0;
  const double g_r = g * m1 / r;
  const double g_rr = g_r * m1 / r - g * m1 / (r * r) + g * g * j.d2 / r;
  return {g, g_r / (2.0 * r), (g_rr - g_r / r) / (4.0 * r * r)};
}

MetricJet RadialMetric::jet_u(double u) const {
  if (u >= table_->u_max()) return {g_inf_, 0.0, 0.0};
  return table_->eval(u);
}

double RadialMetric::factor_u(double u) const {
  const double g = jet_u(u).g;
  return g * g + delta_;
}

double conformal_curvature(double G, double G_u, double G_uu, double u) {
  // K = -Lap(ln G) / (2G), with Lap f = 4 f_u + 4 u f_uu for radial f(u).
  const double L_u = G_u / G;
  const double L_uu = G_uu / G - L_u * L_u;
  return -(4.0 * L_u + 4.0 * u * L_uu) / (2.0 * G);
}

double RadialMetric::curvature_u(double u) const {
  if (is_flat() || u >= table_->u_max()) return 0.0;
  return curvature_->eval(u);
}

double RadialMetric::curvature_exact(double r) const {
  if (is_flat() || r >= r2_) return 0.0;
  const MetricJet j = exact(r);
  return conformal_curvature(j.g * j.g + delta_, 2.0 * j.g * j.g_u,
                             2.0 * (j.g_u * j.g_u + j.g * j.g_uu), r * r);
}

RadialMetric RadialMetric::with_delta(double delta) const {
  if (!(g_inf_ * g_inf_ + delta > 0.0)) {
    throw InvalidArgument("shift must keep g^2 + delta positive");
  }
  RadialMetric m = *this;
  m.delta_ = delta;
  if (!is_flat()) {
    // Second derivatives of the quintic interpolant amplify rounding in the
    // nodal data, so curvature is interpolated from exact nodal values.
    const auto& nodes = table_->nodes();
    std::vector<double> k(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const MetricJet& j = nodes[i];
      const double u = table_->spacing() * static_cast<double>(i);
      k[i] = conformal_curvature(j.g * j.g + delta, 2.0 * j.g * j.g_u,
                                 2.0 * (j.g_u * j.g_u + j.g * j.g_uu), u);
    }
    k.back() = 0.0;
    m.curvature_ = std::make_shared<const UniformCubic>(table_->u_max(), std::move(k));
  }
  return m;
}

RadialMetric build_metric(std::shared_ptr<const Profile> p, double delta,
                          const MetricOptions& options) {
  if (!p) throw InvalidArgument("build_metric needs a profile");
  if (p->is_flat()) return RadialMetric::flat().with_delta(delta);
  RadialMetric m;
  m.profile_ = p;
  m.radius_ = std::make_shared<const RadiusMap>(solve_r_of_l(*p, options.radius_nodes));
  m.r0_ = m.r_of_l(p->l0());
  m.r1_ = m.r_of_l(p->l1());
  m.r2_ = m.r_of_l(p->l2());
  if (m.r2_ >= options.max_r2) {
    throw CapTooLarge("cap radius r2 = " + std::to_string(m.r2_) + " does not fit the torus");
  }
  m.g_inf_ = p->rho(p->l2()) / m.r2_;
  const int n = options.table_cells;
  const double u_max = m.r2_ * m.r2_;
  std::vector<MetricJet> nodes(n + 1);
  for (int i = 0; i <= n; ++i) nodes[i] = m.exact(std::sqrt(u_max * i / n));
  nodes[n] = {m.g_inf_, 0.0, 0.0};
  m.table_ = std::make_shared<const QuinticTable>(u_max, nodes);
  return m.with_delta(delta);
}

double gaussian_curvature_xy(const RadialMetric& m, double x, double y) {
  const double xr = nearest_image(x);
  const double yr = nearest_image(y);
  return m.curvature_u(xr * xr + yr * yr);
}

namespace {

// psi = G + u G_u vanishes exactly where d/dr (r sqrt G) = 0.
double parallel_function(const RadialMetric& m, double r) {
  const MetricJet j = m.exact(r);
  return j.g * j.g + m.delta() + 2.0 * r * r * j.g * j.g_u;
}

}  // namespace

std::vector<double> geodesic_parallels(const RadialMetric& m) {
  std::vector<double> roots;
  if (m.is_flat()) return roots;
  const int n = 4000;
  const double r2 = m.r2();
  double prev_r = 0.0;
  double prev = parallel_function(m, 0.0);
  for (int i = 1; i <= n; ++i) {
    const double r = r2 * i / n;
    const double v = parallel_function(m, r);
    if ((prev > 0.0) != (v > 0.0)) {
      boost::math::tools::eps_tolerance<double> tol(52);
      std::uintmax_t iters = 200;
      const auto br = boost::math::tools::toms748_solve(
          [&m](double s) { return parallel_function(m, s); }, prev_r, r, prev, v, tol, iters);
      roots.push_back(0.5 * (br.first + br.second));
    }
    prev_r = r;
    prev = v;
  }
  return roots;
}

CertificateReport dbg_certificate(const RadialMetric& m) {
  CertificateReport rep;
  const std::vector<double> crit = geodesic_parallels(m);
  if (crit.size() != 2) {
    rep.add("parallel_geodesics", false, static_cast<double>(crit.size()),
            "expected two geodesic parallels");
    rep.add("curvature_positive_inner", false, 0.0);
    rep.add("curvature_negative_r1", false, 0.0);
    rep.add("curvature_decreasing", false, 0.0);
    rep.add("curvature_nonpositive_annulus", false, 0.0);
    rep.add("flat_outside", true, 0.0);
    return rep;
  }
  const double rc0 = crit[0], rc1 = crit[1];
  double par_res = std::abs(parallel_function(m, rc0)) + std::abs(parallel_function(m, rc1));
  if (m.delta() == 0.0) {
    const Profile& p = m.profile();
    par_res = std::max(std::abs(p.rho_d(m.l_of_r(m.r0()))), std::abs(p.rho_d(m.l_of_r(m.r1()))));
    par_res = std::max(par_res, std::max(std::abs(rc0 - m.r0()), std::abs(rc1 - m.r1())));
  }
  rep.add("parallel_geodesics", par_res <= 1e-10, par_res);

  const int n = 2000;
  double kmin = std::numeric_limits<double>::infinity();
  for (int i = 0; i <= n; ++i) kmin = std::min(kmin, m.curvature_exact(rc0 * i / n));
  rep.add("curvature_positive_inner", kmin > 0.0, kmin);

  const double k1 = m.curvature_exact(rc1);
  rep.add("curvature_negative_r1", k1 < 0.0, k1);

  double worst_step = -std::numeric_limits<double>::infinity();
  double prev = m.curvature_exact(0.0);
  for (int i = 1; i <= n; ++i) {
    const double k = m.curvature_exact(rc1 * i / n);
    worst_step = std::max(worst_step, k - prev);
    prev = k;
  }
  rep.add("curvature_decreasing", worst_step < 0.0, worst_step);

  // Near r2 the curvature decays like exp(-1/x); values below the rounding
  // floor of the curvature scale carry no sign information.
  const double floor = 1e-13 * std::abs(m.curvature_exact(0.0));
  double kmax = -std::numeric_limits<double>::infinity();
  for (int i = 1; i < n; ++i) {
    kmax = std::max(kmax, m.curvature_exact(rc1 + (m.r2() - rc1) * i / n));
  }
  rep.add("curvature_nonpositive_annulus", kmax <= floor, kmax);

  double kout = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double r = m.r2() + (1.0 - m.r2()) * i / 100.0;
    kout = std::max(kout, std::abs(m.curvature_exact(r)));
    kout = std::max(kout, std::abs(gaussian_curvature_xy(m, r, 0.0)));
  }
  rep.add("flat_outside", kout == 0.0, kout);
  return rep;
}

double largest_certified_shift(const RadialMetric& base, double delta0, int max_doublings) {
  double best = 0.0;
  double d = delta0;
  for (int k = 0; k < max_doublings; ++k, d *= 2.0) {
    if (!(base.g_inf() * base.g_inf() - d > 0.0)) break;
    if (!dbg_certificate(base.with_delta(d)).passed()) break;
    if (!dbg_certificate(base.with_delta(-d)).passed()) break;
    best = d;
  }
  return best;
}

}  // namespace dbg
