#include "dbg/returnmap.hpp"

#include <algorithm>
#include <boost/random/sobol.hpp>
#include <cmath>

#include "dbg/error.hpp"
#include "dbg/fields.hpp"
#include "dbg/flow.hpp"
#include "dbg/parallel.hpp"

namespace dbg {

namespace {

double max_abs_diff(const Mat4& a, const Mat4& b) {
  double m = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) m = std::max(m, std::abs(a[i][j] - b[i][j]));
  }
  return m;
}

double order_of(double c_big, double c_small, double e_big, double e_small) {
  if (!(c_big > 0.0) || !(c_small > 0.0)) return 0.0;
  return std::log(c_big / c_small) / std::log(e_big / e_small);
}

}  // namespace

SectionPoint wrap_section(const SectionPoint& p) {
  CotangentState<2> s;
  s.q = {p.x, p.y};
  const auto w = wrapped(s);
  return {w.q[0], w.q[1], p.alpha, p.beta};
}

SectionPoint reverse_momentum(const SectionPoint& p) { return {p.x, p.y, -p.alpha, -p.beta}; }

double section_distance(const SectionPoint& a, const SectionPoint& b) {
  return std::max({std::abs(a.x - b.x), std::abs(a.y - b.y), std::abs(a.alpha - b.alpha),
                   std::abs(a.beta - b.beta)});
}

SectionPoint R_exact(const SectionPoint& p, double time) {
  const double s = p.alpha * p.alpha + p.beta * p.beta;
  if (!(s < 1.0 - 1e-12)) throw DegenerateCovector("alpha^2 + beta^2 must stay below 1 - 1e-12");
  const double inv = time / std::sqrt(1.0 - s);
  return {p.x + p.alpha * inv, p.y + p.beta * inv, p.alpha, p.beta};
}

Mat4 R_exact_jacobian(const SectionPoint& p, double time) {
  const double s = p.alpha * p.alpha + p.beta * p.beta;
  if (!(s < 1.0 - 1e-12)) throw DegenerateCovector("alpha^2 + beta^2 must stay below 1 - 1e-12");
  const double g = std::sqrt(1.0 - s);
  const double g3 = g * g * g;
  // d(alpha/gamma)/d alpha = (1 - beta^2)/gamma^3, d(alpha/gamma)/d beta = alpha beta/gamma^3.
  Mat4 D{};
  D[0][0] = D[1][1] = D[2][2] = D[3][3] = 1.0;
  D[0][2] = time * (1.0 - p.beta * p.beta) / g3;
  D[0][3] = time * p.alpha * p.beta / g3;
  D[1][2] = time * p.alpha * p.beta / g3;
  D[1][3] = time * (1.0 - p.alpha * p.alpha) / g3;
  return D;
}

SectionPoint R_eps(const SectionPoint& p, double eps, const PerturbedMapOptions& options,
                   double time) {
  if (!(options.h > 0.0)) throw InvalidArgument("step must be positive");
  if (!std::isfinite(time)) throw InvalidArgument("time must be finite");
  if (time < 0.0) return reverse_momentum(R_eps(reverse_momentum(p), eps, options, -time));
  const long n = std::lround(time / options.h);
  if (std::abs(static_cast<double>(n) * options.h - time) > 1e-9 * std::max(1.0, time)) {
    throw InvalidArgument("time must be a multiple of the step");
  }
  HamiltonianSpec spec;
  spec.kind = HamiltonianKind::Relativistic;
  spec.metric = options.metric;
  spec.eps = eps;
  const Hamiltonian<2> H(spec);
  const std::array<double, 2> q{p.x, p.y};
  const std::array<double, 2> mom{p.alpha, p.beta};
  H.value(q.data(), mom.data());
  const PhaseField<2> field{&H};
  Propagator<PhaseField<2>> prop(field, options.h, options.scheme);
  PhaseField<2>::State y{p.x, p.y, p.alpha, p.beta};
  prop.run(y, n);
  return {y[0], y[1], y[2], y[3]};
}

double reversibility_residual(const SectionPoint& p, double eps, const PerturbedMapOptions& options,
                              double time) {
  const SectionPoint a = R_eps(p, eps, options, time);
  const SectionPoint b = reverse_momentum(R_eps(reverse_momentum(a), eps, options, time));
  return section_distance(b, p);
}

Mat4 fd_jacobian(const SectionMap& map, const SectionPoint& p, double step) {
  if (!(step > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  Mat4 D{};
  const Vec4 base = to_vec(p);
  for (int j = 0; j < 4; ++j) {
    Vec4 plus = base, minus = base;
    plus[j] += step;
    minus[j] -= step;
    const Vec4 a = to_vec(map(to_point(plus)));
    const Vec4 b = to_vec(map(to_point(minus)));
    for (int i = 0; i < 4; ++i) D[i][j] = (a[i] - b[i]) / (2.0 * step);
  }
  return D;
}

Mat4 fd_jacobian_richardson(const SectionMap& map, const SectionPoint& p, double step) {
  const Mat4 coarse = fd_jacobian(map, p, step);
  const Mat4 fine = fd_jacobian(map, p, 0.5 * step);
  Mat4 D{};
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) D[i][j] = (4.0 * fine[i][j] - coarse[i][j]) / 3.0;
  }
  return D;
}

double symplectic_defect(const Mat4& D) {
  // Omega(u, v) = u_x v_alpha + u_y v_beta - u_alpha v_x - u_beta v_y.
  static const Mat4 omega{{{0.0, 0.0, 1.0, 0.0},
                           {0.0, 0.0, 0.0, 1.0},
                           {-1.0, 0.0, 0.0, 0.0},
                           {0.0, -1.0, 0.0, 0.0}}};
  double worst = 0.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      double s = 0.0;
      for (int k = 0; k < 4; ++k) {
        for (int l = 0; l < 4; ++l) s += D[k][i] * omega[k][l] * D[l][j];
      }
      worst = std::max(worst, std::abs(s - omega[i][j]));
    }
  }
  return worst;
}

double symplectic_defect(const SectionMap& map, const SectionPoint& p, double fd_step) {
  return symplectic_defect(fd_jacobian(map, p, fd_step));
}

std::vector<SectionPoint> section_samples(std::size_t n, double max_momentum2) {
  if (!(max_momentum2 > 0.0 && max_momentum2 < 1.0)) {
    throw InvalidArgument("momentum bound must lie in (0, 1)");
  }
  boost::random::sobol gen(4);
  const double scale = 0x1.0p-64;
  std::vector<SectionPoint> out(n);
  for (auto& p : out) {
    const double u0 = static_cast<double>(gen()) * scale;
    const double u1 = static_cast<double>(gen()) * scale;
    const double u2 = static_cast<double>(gen()) * scale;
    const double u3 = static_cast<double>(gen()) * scale;
    const double rho = std::sqrt(u2 * max_momentum2);
    const double phi = 2.0 * M_PI * u3;
    p = {2.0 * u0 - 1.0, 2.0 * u1 - 1.0, rho * std::cos(phi), rho * std::sin(phi)};
  }
  return out;
}

MapClosenessReport closeness_scan(const std::vector<double>& eps_grid,
                                  const PerturbedMapOptions& map_options,
                                  const ClosenessOptions& options) {
  if (eps_grid.empty()) throw InvalidArgument("empty eps grid");
  if (options.m != 0 && options.m != 1) throw InvalidArgument("m must be 0 or 1");
  MapClosenessReport rep;
  rep.n_samples = options.n;
  rep.m = options.m;
  rep.max_momentum2 = options.max_momentum2;
  rep.fd_step = options.fd_step;
  const auto pts = section_samples(options.n, options.max_momentum2);
  struct PerSample {
    double c0 = 0.0, c1 = 0.0, defect = 0.0;
  };
  for (double eps : eps_grid) {
    std::vector<PerSample> per(pts.size());
    const SectionMap map = [&](const SectionPoint& z) { return R_eps(z, eps, map_options); };
    parallel_for(pts.size(), options.threads, [&](std::size_t i) {
      const SectionPoint& z = pts[i];
      per[i].c0 = section_distance(map(z), R_exact(z));
      if (options.m == 1) {
        const Mat4 D = fd_jacobian_richardson(map, z, options.fd_step);
        per[i].c1 = max_abs_diff(D, R_exact_jacobian(z));
        per[i].defect = symplectic_defect(D);
      }
    });
    ClosenessRow row;
    row.eps = eps;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double s = pts[i].alpha * pts[i].alpha + pts[i].beta * pts[i].beta;
      row.c0 = std::max(row.c0, per[i].c0);
      row.c1 = std::max(row.c1, per[i].c1);
      row.symplectic_defect = std::max(row.symplectic_defect, per[i].defect);
      if (s >= 2.0 / 3.0) row.outside_cutoff = std::max(row.outside_cutoff, per[i].c0);
      if (per[i].c0 > 1e-8) {
        ++row.support_count;
        row.support_momentum2 = std::max(row.support_momentum2, s);
      }
    }
    rep.rows.push_back(row);
  }
  for (std::size_t k = 0; k + 1 < rep.rows.size(); ++k) {
    const auto& a = rep.rows[k];
    const auto& b = rep.rows[k + 1];
    rep.order_c0.push_back(order_of(a.c0, b.c0, a.eps, b.eps));
    if (options.m == 1) rep.order_c1.push_back(order_of(a.c1, b.c1, a.eps, b.eps));
  }
  return rep;
}

std::vector<EnergyLevelResult> energy_window_scan(const std::shared_ptr<const RadialMetric>& metric,
                                                  double eps, int n_levels, double delta0,
                                                  const SampleSpec& ensemble) {
  if (n_levels < 1) throw InvalidArgument("need at least one level");
  if (eps < 0.0 || !(delta0 >= 0.0) || delta0 >= 1.0) throw InvalidArgument("bad window");
  if (eps * (1.0 + delta0) > 1.0 / 6.0) {
    throw InvalidArgument("levels must keep |p|^2 inside the region where the cutoff is 1");
  }
  const bool flat = eps == 0.0 || !metric || metric->is_flat();
  std::vector<EnergyLevelResult> out;
  for (int k = 0; k < n_levels; ++k) {
    const double s = n_levels == 1 ? 0.0 : -1.0 + 2.0 * k / static_cast<double>(n_levels - 1);
    EnergyLevelResult r;
    r.delta = delta0 * s;
    r.level = eps * (1.0 + r.delta);
    SampleSpec spec = ensemble;
    spec.hamiltonian.kind = HamiltonianKind::ConformalKinetic;
    spec.hamiltonian.eps = 0.0;
    spec.hamiltonian.metric_scale = 1.0;
    if (flat) {
      spec.hamiltonian.metric = std::make_shared<const RadialMetric>(RadialMetric::flat());
    } else {
      auto shifted = std::make_shared<const RadialMetric>(metric->with_delta(r.delta));
      r.certified = dbg_certificate(*shifted).passed();
      spec.hamiltonian.metric = shifted;
    }
    EnsembleOptions o;
    o.extend_flagged = false;
    o.baseline = false;
    const LyapunovReport rep = run_ensemble(spec, o);
    r.positive_fraction = rep.positive_fraction;
    r.positive_lower95 = rep.positive_lower95;
    r.positive = rep.positive_lower95 > 0.0;
    out.push_back(r);
  }
  return out;
}

double planar_diameter(std::vector<std::array<double, 2>> pts) {
  if (pts.size() < 2) return 0.0;
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 2) return 0.0;
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                  const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) {
      best = std::max(best, std::hypot(hull[i][0] - hull[j][0], hull[i][1] - hull[j][1]));
    }
  }
  return best;
}

ActionRangeReport action_range(const std::vector<SectionPoint>& starts, double eps, double T,
                               const PerturbedMapOptions& options, unsigned threads) {
  if (!(T >= 1.0)) throw InvalidArgument("T must be at least 1");
  const long n = std::lround(T);
  ActionRangeReport rep;
  rep.eps = eps;
  rep.T = static_cast<double>(n);
  rep.diameter_T.resize(starts.size());
  rep.diameter_2T.resize(starts.size());
  parallel_for(starts.size(), threads, [&](std::size_t i) {
    std::vector<std::array<double, 2>> seen;
    seen.reserve(static_cast<std::size_t>(2 * n + 1));
    SectionPoint z = starts[i];
    seen.push_back({z.alpha, z.beta});
    for (long k = 1; k <= 2 * n; ++k) {
      z = wrap_section(R_eps(z, eps, options));
      seen.push_back({z.alpha, z.beta});
      if (k == n) rep.diameter_T[i] = planar_diameter(seen);
    }
    rep.diameter_2T[i] = planar_diameter(seen);
  });
  for (std::size_t i = 0; i < starts.size(); ++i) {
    rep.max_T = std::max(rep.max_T, rep.diameter_T[i]);
    rep.max_2T = std::max(rep.max_2T, rep.diameter_2T[i]);
  }
  rep.ratio = rep.max_T > 0.0 ? rep.max_2T / rep.max_T : (rep.max_2T > 0.0 ? INFINITY : 1.0);
  return rep;
}

}  // namespace dbg
