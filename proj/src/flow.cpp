#include "dbg/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dbg/error.hpp"
#include "dbg/fields.hpp"

namespace dbg {

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::CapEnter:
      return "CapEnter";
    case EventKind::ReachInner:
      return "ReachInner";
    case EventKind::CapExit:
      return "CapExit";
    case EventKind::SectionHit:
      return "SectionHit";
  }
  return "?";
}

namespace {

template <std::size_t N>
double lattice_radius(const double* q) {
  double u = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    const double w = nearest_lattice_offset(q[i]);
    u += w * w;
  }
  return std::sqrt(u);
}

template <std::size_t N>
CotangentState<N> to_cotangent(const std::array<double, 2 * N>& y) {
  CotangentState<N> s;
  for (std::size_t i = 0; i < N; ++i) {
    s.q[i] = y[i];
    s.p[i] = y[N + i];
  }
  return s;
}

}  // namespace

double clairaut_value(const RadialMetric& m, const CotangentState<2>& state) {
  const double wx = nearest_lattice_offset(state.q[0]);
  const double wy = nearest_lattice_offset(state.q[1]);
  const double u = wx * wx + wy * wy;
  if (m.is_flat() || std::sqrt(u) >= m.r2()) {
    throw OutsideCap("Clairaut value is defined inside the disc r < r2");
  }
  const double speed = std::hypot(state.p[0], state.p[1]);
  if (speed == 0.0) throw InvalidArgument("Clairaut value needs a nonzero covector");
  const double cross = wx * state.p[1] - wy * state.p[0];
  return std::sqrt(m.factor_u(u)) * cross / speed;
}

template <std::size_t N>
OrbitTrace<N> integrate(const HamiltonianSpec& spec, const CotangentState<N>& state, double T,
                        double h, const IntegrateOptions& options) {
  if (!(h > 0.0)) throw InvalidArgument("integrate needs h > 0");
  if (options.sample_every < 1) throw InvalidArgument("sample_every must be positive");
  const Hamiltonian<N> H(spec);
  const PhaseField<N> field{&H};
  CollocationStepper<PhaseField<N>> stepper(field, options.scheme);
  using State = std::array<double, 2 * N>;

  const double dir = T >= 0.0 ? 1.0 : -1.0;
  const double span = std::abs(T);
  long n_full = static_cast<long>(std::floor(span / h + 1e-9));
  double rem = span - static_cast<double>(n_full) * h;
  if (rem < 1e-9 * h) rem = 0.0;
  const long n_total = n_full + (rem > 0.0 ? 1 : 0);

  State y;
  for (std::size_t i = 0; i < N; ++i) {
    y[i] = state.q[i];
    y[N + i] = state.p[i];
  }

  const RadialMetric* metric = spec.metric.get();
  const bool has_disc = spec.kind != HamiltonianKind::Flat && metric && !metric->is_flat();
  const bool track_clairaut = N == 2 && has_disc && spec.kind == HamiltonianKind::ConformalKinetic;

  OrbitTrace<N> trace;
  const double H0 = H.value(y.data(), y.data() + N);
  bool in_passage = false;
  double c_entry = 0.0;

  auto clairaut_of = [&](const State& s) {
    if (!track_clairaut) return std::numeric_limits<double>::quiet_NaN();
    if (lattice_radius<N>(s.data()) >= metric->r2()) return std::numeric_limits<double>::quiet_NaN();
    CotangentState<2> c2;
    c2.q = {s[0], s[1]};
    c2.p = {s[N], s[N + 1]};
    return clairaut_value(*metric, c2);
  };
  auto push_sample = [&](double t, const State& s, double Hv) {
    TraceSample<N> ts;
    ts.t = t;
    ts.lifted = to_cotangent<N>(s);
    ts.state = wrapped(ts.lifted);
    ts.H = Hv;
    ts.clairaut = clairaut_of(s);
    trace.samples.push_back(ts);
  };
  push_sample(0.0, y, H0);

  const double time_tol = 1e-12;
  double t = 0.0;
  for (long k = 1; k <= n_total; ++k) {
    const double hk = dir * ((k == n_total && rem > 0.0) ? rem : h);
    const State prev = y;
    const double t_prev = t;
    stepper.step(y, hk);
    t = (k == n_total && rem > 0.0) ? T : dir * static_cast<double>(k) * h;

    if (options.events) {
      std::vector<FlowEvent<N>> found;
      auto add_event = [&](EventKind kind, auto&& fn) {
        const double theta = locate_sign_change(stepper, fn, time_tol);
        found.push_back({t_prev + theta * hk, kind, to_cotangent<N>(stepper.dense(theta))});
      };
      if (has_disc) {
        const double r_prev = lattice_radius<N>(prev.data());
        const double r_now = lattice_radius<N>(y.data());
        const double r1 = metric->r1(), r0 = metric->r0();
        if ((r_prev - r1) * (r_now - r1) < 0.0) {
          add_event(r_now < r1 ? EventKind::CapEnter : EventKind::CapExit,
                    [&](const State& s) { return lattice_radius<N>(s.data()) - r1; });
        }
        if (r_prev > r0 && r_now <= r0) {
          add_event(EventKind::ReachInner,
                    [&](const State& s) { return lattice_radius<N>(s.data()) - r0; });
        }
      }
      const double z_prev = prev[N - 1], z_now = y[N - 1];
      const double cell_prev = std::floor(0.5 * (z_prev + 1.0));
      const double cell_now = std::floor(0.5 * (z_now + 1.0));
      if (cell_prev != cell_now) {
        const double wall = 2.0 * std::max(cell_prev, cell_now) - 1.0;
        add_event(EventKind::SectionHit, [&](const State& s) { return s[N - 1] - wall; });
      }
      std::sort(found.begin(), found.end(),
                [dir](const FlowEvent<N>& a, const FlowEvent<N>& b) { return dir * a.t < dir * b.t; });
      trace.events.insert(trace.events.end(), found.begin(), found.end());
    }

    const bool sample_now = (k % options.sample_every == 0) || k == n_total;
    if (options.monitor || sample_now) {
      const double Hv = H.value(y.data(), y.data() + N);
      trace.max_energy_drift = std::max(trace.max_energy_drift, std::abs(Hv - H0));
      if (track_clairaut && options.monitor) {
        const double c = clairaut_of(y);
        if (std::isnan(c)) {
          in_passage = false;
        } else if (!in_passage) {
          in_passage = true;
          c_entry = c;
        } else {
          trace.max_clairaut_drift = std::max(trace.max_clairaut_drift, std::abs(c - c_entry));
        }
      }
      if (sample_now) push_sample(t, y, Hv);
    }
  }
  trace.final_state = to_cotangent<N>(y);
  trace.steps = n_total;
  return trace;
}

template OrbitTrace<2> integrate<2>(const HamiltonianSpec&, const CotangentState<2>&, double, double,
                                    const IntegrateOptions&);
template OrbitTrace<3> integrate<3>(const HamiltonianSpec&, const CotangentState<3>&, double, double,
                                    const IntegrateOptions&);

CotangentState<2> perturbed_level_state(const RadialMetric& m, double eps,
                                        const std::array<double, 2>& q, double angle) {
  const double wx = nearest_lattice_offset(q[0]);
  const double wy = nearest_lattice_offset(q[1]);
  const double g = m.jet_u(wx * wx + wy * wy).g;
  const double s = 2.0 * eps * g * g;
  if (!(eps > 0.0) || s > 1.0 / 3.0) {
    throw InvalidArgument("level H_eps = eps must lie where the momentum cutoff is 1");
  }
  const double speed = std::sqrt(s);
  return {q, {speed * std::cos(angle), speed * std::sin(angle)}};
}

namespace {

double point_segment_distance(const std::array<double, 2>& p, const std::array<double, 2>& a,
                              const std::array<double, 2>& b) {
  const double dx = b[0] - a[0], dy = b[1] - a[1];
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(p[0] - a[0] - t * dx, p[1] - a[1] - t * dy);
}

double directed_hausdorff(const std::vector<std::array<double, 2>>& a,
                          const std::vector<std::array<double, 2>>& b) {
  if (b.size() < 2) {
    double worst = 0.0;
    for (const auto& p : a) worst = std::max(worst, std::hypot(p[0] - b[0][0], p[1] - b[0][1]));
    return worst;
  }
  const std::size_t window = 256;
  std::size_t j = 0;
  double worst = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = j;
    const std::size_t end = std::min(b.size() - 1, j + window);
    for (std::size_t k = j; k < end; ++k) {
      const double d = point_segment_distance(p, b[k], b[k + 1]);
      if (d < best) {
        best = d;
        best_j = k;
      }
    }
    j = best_j;
    worst = std::max(worst, best);
  }
  return worst;
}

struct CrossingPath {
  std::vector<std::array<double, 2>> points;
  double min_radius = std::numeric_limits<double>::infinity();
  bool completed = false;
};

CrossingPath trace_domain_crossing(const HamiltonianSpec& spec, const CotangentState<2>& start,
                                   double h, double max_length) {
  using State = std::array<double, 4>;
  const Hamiltonian<2> H(spec);
  const PhaseField<2> field{&H};
  CollocationStepper<PhaseField<2>> stepper(field);
  const double cx = 2.0 * std::round(0.5 * start.q[0]);
  const double cy = 2.0 * std::round(0.5 * start.q[1]);
  auto box = [&](const State& s) { return std::max(std::abs(s[0] - cx), std::abs(s[1] - cy)) - 1.0; };
  State y{start.q[0], start.q[1], start.p[0], start.p[1]};
  CrossingPath path;
  path.points.push_back({y[0], y[1]});
  double length = 0.0;
  while (length < max_length) {
    const State prev = y;
    stepper.step(y, h);
    path.min_radius = std::min(path.min_radius, lattice_radius<2>(y.data()));
    if (box(y) > 0.0 && box(prev) <= 0.0) {
      const double theta = locate_sign_change(stepper, box, 1e-13);
      const State e = stepper.dense(theta);
      path.points.push_back({e[0], e[1]});
      path.completed = true;
      break;
    }
    length += std::hypot(y[0] - prev[0], y[1] - prev[1]);
    path.points.push_back({y[0], y[1]});
  }
  return path;
}

}  // namespace

double ordered_hausdorff(const std::vector<std::array<double, 2>>& a,
                         const std::vector<std::array<double, 2>>& b) {
  if (a.empty() || b.empty()) throw InvalidArgument("Hausdorff distance needs nonempty curves");
  return std::max(directed_hausdorff(a, b), directed_hausdorff(b, a));
}

MaupertuisReport maupertuis_check(const std::shared_ptr<const RadialMetric>& m, double eps,
                                  const std::vector<CotangentState<2>>& sample, double ds,
                                  double max_length) {
  if (!m) throw InvalidArgument("maupertuis_check needs a metric");
  if (!(eps > 0.0)) throw InvalidArgument("maupertuis_check needs eps > 0");
  HamiltonianSpec pert{HamiltonianKind::PerturbedKinetic, m, eps, 1.0};
  HamiltonianSpec geo{HamiltonianKind::ConformalKinetic, m, 0.0, eps};
  const double h_pert = ds / std::sqrt(2.0 * eps);
  const double h_geo = ds * std::sqrt(eps) * std::min(1.0, m->g_inf());
  MaupertuisReport rep;
  for (const auto& s : sample) {
    const double level = hamiltonian_value(pert, s);
    if (std::abs(level - eps) > 1e-9 * eps) {
      throw InvalidArgument("maupertuis_check samples must lie on the level H_eps = eps");
    }
    CotangentState<2> sg = s;
    for (double& pi : sg.p) pi /= std::sqrt(2.0);
    const CrossingPath a = trace_domain_crossing(pert, s, h_pert, max_length);
    const CrossingPath b = trace_domain_crossing(geo, sg, h_geo, max_length);
    const double d = ordered_hausdorff(a.points, b.points);
    rep.distances.push_back(d);
    rep.crossed_disc.push_back(a.min_radius < m->r2());
    rep.completed.push_back(a.completed && b.completed);
    rep.max_distance = std::max(rep.max_distance, d);
  }
  return rep;
}

}  // namespace dbg
