#include "dbg/jacobi.hpp"

#include <boost/math/tools/roots.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include "dbg/error.hpp"
#include "dbg/fields.hpp"

namespace dbg {

namespace {

using JState = JacobiField::State;

double lattice_radius(const double* q) {
  return std::hypot(nearest_lattice_offset(q[0]), nearest_lattice_offset(q[1]));
}

ChordSample make_sample(const RadialMetric& m, double t, const JState& y) {
  ChordSample s;
  s.t = t;
  s.x = y[0];
  s.y = y[1];
  s.r = std::hypot(y[0], y[1]);
  s.K = m.curvature_u(s.r * s.r);
  s.JS = y[4];
  s.JSp = y[5];
  s.JC = y[6];
  s.JCp = y[7];
  return s;
}

CotangentState<2> cotangent_of(const JState& y) {
  CotangentState<2> c;
  c.q = {y[0], y[1]};
  c.p = {y[2], y[3]};
  return c;
}

/// Cubic Hermite interpolation on [t0, t1] from values and slopes.
double hermite(double t0, double f0, double d0, double t1, double f1, double d1, double t) {
  const double h = t1 - t0;
  const double s = (t - t0) / h;
  const double s2 = s * s, s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * f1 +
         (s3 - s2) * h * d1;
}

/// (J_C, J_C', J_S, J_S') at time t, interpolated between chord samples.
std::array<double, 4> fundamental_at(const CapChord& ch, double t) {
  const auto& s = ch.samples;
  if (t < s.front().t || t > s.back().t) throw InvalidArgument("time outside the chord");
  auto it = std::upper_bound(s.begin(), s.end(), t,
                             [](double v, const ChordSample& c) { return v < c.t; });
  if (it == s.end()) --it;
  if (it == s.begin()) ++it;
  const ChordSample& a = *(it - 1);
  const ChordSample& b = *it;
  if (t == a.t) return {a.JC, a.JCp, a.JS, a.JSp};
  if (t == b.t) return {b.JC, b.JCp, b.JS, b.JSp};
  return {hermite(a.t, a.JC, a.JCp, b.t, b.JC, b.JCp, t),
          hermite(a.t, a.JCp, -a.K * a.JC, b.t, b.JCp, -b.K * b.JC, t),
          hermite(a.t, a.JS, a.JSp, b.t, b.JS, b.JSp, t),
          hermite(a.t, a.JSp, -a.K * a.JS, b.t, b.JSp, -b.K * b.JS, t)};
}

/// J'' = -K(t) J with time carried in the state.
struct ScalarJacobiField {
  static constexpr std::size_t dim = 3;
  using State = std::array<double, 3>;
  const std::function<double(double)>* K;

  void operator()(const State& y, State& f) const {
    f[0] = 1.0;
    f[1] = y[2];
    f[2] = -(*K)(y[0]) * y[1];
  }
  bool free_step(const State&, const State&, double) const { return false; }
};

struct HalfChord {
  std::vector<ChordSample> samples;  // ordered by |t|
  double T1 = 0.0;
  bool has_T2 = false;
  double T2 = 0.0;
  ChordSample at_T2;
  CotangentState<2> end;
};

/// One full collocation step of length tau (dense output is only third order).
JState step_from(const JacobiField& field, Scheme scheme, const JState& from, double tau) {
  JState z = from;
  if (tau == 0.0) return z;
  CollocationStepper<JacobiField> st(field, scheme);
  st.step(z, tau);
  return z;
}

/// Newton on r(step_from(from, tau)) = radius, started from the dense-output estimate.
double refine_crossing(const JacobiField& field, Scheme scheme, const JState& from, double tau,
                       double radius) {
  for (int it = 0; it < 6; ++it) {
    const JState z = step_from(field, scheme, from, tau);
    JState f{};
    field(z, f);
    const double r = std::hypot(z[0], z[1]);
    const double dr = (z[0] * f[0] + z[1] * f[1]) / r;
    if (dr == 0.0) break;
    const double d = (r - radius) / dr;
    tau -= d;
    if (std::abs(d) <= 1e-15) break;
  }
  return tau;
}

HalfChord run_half(const RadialMetric& m, const JacobiField& field, const JState& start, double dir,
                   double boundary, bool deep, const ChordOptions& opt) {
  CollocationStepper<JacobiField> st(field, opt.scheme);
  HalfChord out;
  JState y = start;
  out.samples.push_back(make_sample(m, 0.0, y));
  const double r0 = m.r0();
  const double hk = dir * opt.h;
  const long max_steps = static_cast<long>(std::ceil(1e3 / opt.h));
  for (long k = 1; k <= max_steps; ++k) {
    const JState prev = y;
    st.step(y, hk);
    const double t_prev = dir * static_cast<double>(k - 1) * opt.h;
    const double t = dir * static_cast<double>(k) * opt.h;
    const double r_prev = std::hypot(prev[0], prev[1]);
    const double r_now = std::hypot(y[0], y[1]);
    if (deep && r_prev < r0 && r_now >= r0) {
      const double th = locate_sign_change(
          st, [&](const JState& s) { return std::hypot(s[0], s[1]) - r0; }, 1e-13);
      const double tau = refine_crossing(field, opt.scheme, prev, th * hk, r0);
      out.has_T2 = true;
      out.T2 = std::abs(t_prev + tau);
      out.at_T2 = make_sample(m, t_prev + tau, step_from(field, opt.scheme, prev, tau));
    }
    if (r_now >= boundary) {
      const double th = locate_sign_change(
          st, [&](const JState& s) { return std::hypot(s[0], s[1]) - boundary; }, 1e-13);
      const double tau = refine_crossing(field, opt.scheme, prev, th * hk, boundary);
      const JState e = step_from(field, opt.scheme, prev, tau);
      out.T1 = std::abs(t_prev + tau);
      if (out.T1 > std::abs(t_prev)) out.samples.push_back(make_sample(m, t_prev + tau, e));
      out.end = cotangent_of(e);
      return out;
    }
    out.samples.push_back(make_sample(m, t, y));
  }
  throw StepRejected("chord did not leave the disc within the step budget");
}

}  // namespace

double parallel_clairaut(const RadialMetric& m, double r) {
  return r * std::sqrt(m.factor_u(r * r));
}

CapChord build_chord(const std::shared_ptr<const RadialMetric>& m, double clairaut,
                     const ChordOptions& options) {
  if (!m || m->is_flat()) throw ChordTooShallow("a flat metric has no cap to cross");
  if (!(options.h > 0.0)) throw InvalidArgument("chord step must be positive");
  const double c = std::abs(clairaut);
  const double f0 = parallel_clairaut(*m, m->r0());
  const double f1 = parallel_clairaut(*m, m->r1());
  const double f2 = parallel_clairaut(*m, m->r2());

  CapChord ch;
  ch.metric = m;
  ch.clairaut = c;
  double lo, hi;
  if (c < f1) {
    ch.deep = true;
    ch.boundary = m->r1();
    lo = 0.0;
    hi = m->r0();
    if (!(c < f0)) throw InvalidArgument("Clairaut value exceeds that of r0");
  } else if (c < f2) {
    ch.boundary = m->r2();
    lo = m->r1();
    hi = m->r2();
  } else {
    throw InvalidArgument("the geodesic misses the disc r < r2");
  }
  if (c == 0.0) {
    ch.r_min = 0.0;
  } else {
    boost::math::tools::eps_tolerance<double> tol(52);
    std::uintmax_t iters = 200;
    const auto br = boost::math::tools::toms748_solve(
        [&](double r) { return parallel_clairaut(*m, r) - c; }, lo, hi,
        parallel_clairaut(*m, lo) - c, parallel_clairaut(*m, hi) - c, tol, iters);
    ch.r_min = 0.5 * (br.first + br.second);
  }

  const HamiltonianSpec spec{HamiltonianKind::ConformalKinetic, m, 0.0, 1.0};
  const Hamiltonian<2> H(spec);
  const JacobiField field{&H, m.get()};
  const JState start{ch.r_min, 0.0, 0.0, std::sqrt(m->factor_u(ch.r_min * ch.r_min)),
                     0.0, 1.0, 1.0, 0.0};
  HalfChord fwd = run_half(*m, field, start, 1.0, ch.boundary, ch.deep, options);
  HalfChord bwd = run_half(*m, field, start, -1.0, ch.boundary, ch.deep, options);

  ch.T1 = fwd.T1;
  ch.T1_back = bwd.T1;
  ch.has_T2 = fwd.has_T2 && bwd.has_T2;
  ch.T2 = fwd.T2;
  ch.T2_back = bwd.T2;
  ch.at_T2 = fwd.at_T2;
  ch.at_mT2 = bwd.at_T2;
  ch.exit = fwd.end;
  ch.entry = bwd.end;
  ch.samples.assign(bwd.samples.rbegin(), bwd.samples.rend());
  ch.samples.insert(ch.samples.end(), fwd.samples.begin() + 1, fwd.samples.end());
  return ch;
}

CapChord chord_from_entry_angle(const std::shared_ptr<const RadialMetric>& m, double theta,
                                const ChordOptions& options) {
  if (!m || m->is_flat()) throw ChordTooShallow("a flat metric has no cap to cross");
  if (!(std::abs(theta) < 0.5 * M_PI)) throw InvalidArgument("entry angle must lie in (-pi/2, pi/2)");
  return build_chord(m, parallel_clairaut(*m, m->r1()) * std::sin(theta), options);
}

std::vector<TransverseState> propagate(const CapChord& chord, const TransverseState& init) {
  const auto f = fundamental_at(chord, init.t);
  // Solve a (J_C, J_C') + b (J_S, J_S') = (J, J') at init.t.
  const double det = f[0] * f[3] - f[2] * f[1];
  const double a = (init.J * f[3] - f[2] * init.Jp) / det;
  const double b = (f[0] * init.Jp - f[1] * init.J) / det;
  std::vector<TransverseState> out;
  out.reserve(chord.samples.size());
  for (const auto& s : chord.samples) {
    out.push_back({s.t, a * s.JC + b * s.JS, a * s.JCp + b * s.JSp});
  }
  return out;
}

std::vector<TransverseState> propagate(const std::function<double(double)>& K,
                                       const TransverseState& init, double t_end, double h,
                                       Scheme scheme) {
  if (!(h > 0.0)) throw InvalidArgument("step must be positive");
  const ScalarJacobiField field{&K};
  CollocationStepper<ScalarJacobiField> st(field, scheme);
  const double span = t_end - init.t;
  const long n = std::max(1L, static_cast<long>(std::ceil(std::abs(span) / h - 1e-9)));
  const double hk = span / static_cast<double>(n);
  std::array<double, 3> y{init.t, init.J, init.Jp};
  std::vector<TransverseState> out{init};
  for (long k = 1; k <= n; ++k) {
    st.step(y, hk);
    y[0] = init.t + static_cast<double>(k) * hk;
    out.push_back({y[0], y[1], y[2]});
  }
  return out;
}

std::vector<double> riccati_events(const std::vector<TransverseState>& trace, double tol) {
  std::vector<double> out;
  if (trace.empty()) return out;
  if (trace.front().J == 0.0) out.push_back(trace.front().t);
  for (std::size_t i = 0; i + 1 < trace.size(); ++i) {
    const TransverseState& a = trace[i];
    const TransverseState& b = trace[i + 1];
    if (b.J == 0.0) {
      out.push_back(b.t);
      continue;
    }
    if (a.J == 0.0 || (a.J > 0.0) == (b.J > 0.0)) continue;
    double lo = a.t, hi = b.t;
    const bool a_pos = a.J > 0.0;
    while (std::abs(hi - lo) > tol) {
      const double mid = 0.5 * (lo + hi);
      const double v = hermite(a.t, a.J, a.Jp, b.t, b.J, b.Jp, mid);
      if ((v > 0.0) == a_pos) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    out.push_back(0.5 * (lo + hi));
  }
  return out;
}

double wronskian_drift(const CapChord& chord) {
  double worst = 0.0;
  for (const auto& s : chord.samples) {
    worst = std::max(worst, std::abs(s.JS * s.JCp - s.JSp * s.JC + 1.0));
  }
  return worst;
}

double CheckAReport::max_residual() const {
  return std::max({std::abs(uS_T1), std::abs(uS_mT1), std::abs(uS_T2), std::abs(uS_mT2)});
}

CheckAReport check_A(const CapChord& chord, double tol) {
  if (!chord.deep || !chord.has_T2) throw ChordTooShallow("chord does not reach C_{r0}");
  CheckAReport rep;
  rep.tol = tol;
  const ChordSample& e = chord.samples.back();
  const ChordSample& s = chord.samples.front();
  rep.uS_T1 = e.JSp / e.JS;
  rep.uS_mT1 = s.JSp / s.JS;
  rep.uS_T2 = chord.at_T2.JSp / chord.at_T2.JS;
  rep.uS_mT2 = chord.at_mT2.JSp / chord.at_mT2.JS;
  std::vector<TransverseState> trace;
  trace.reserve(chord.samples.size());
  for (const auto& c : chord.samples) trace.push_back({c.t, c.JS, c.JSp});
  for (double tau : riccati_events(trace)) {
    if (tau != 0.0) ++rep.extra_zeros;
  }
  return rep;
}

double cone_transit(const CapChord& chord, double u_entry) {
  const auto trace = propagate(chord, {chord.samples.front().t, 1.0, u_entry});
  return trace.back().Jp / trace.back().J;
}

CotangentState<2> unit_state(const RadialMetric& m, const std::array<double, 2>& q, double angle) {
  const double wx = nearest_lattice_offset(q[0]);
  const double wy = nearest_lattice_offset(q[1]);
  const double speed = std::sqrt(m.factor_u(wx * wx + wy * wy));
  CotangentState<2> s;
  s.q = q;
  s.p = {speed * std::cos(angle), speed * std::sin(angle)};
  return s;
}

AdvanceReport strict_advance(const std::shared_ptr<const RadialMetric>& m,
                             const CotangentState<2>& state, double u_entry, double t_max, double h,
                             Scheme scheme) {
  if (!m) throw InvalidArgument("strict_advance needs a metric");
  if (!(h > 0.0)) throw InvalidArgument("step must be positive");
  AdvanceReport rep;
  if (m->is_flat()) return rep;
  const HamiltonianSpec spec{HamiltonianKind::ConformalKinetic, m, 0.0, 1.0};
  const Hamiltonian<2> H(spec);
  const JacobiField field{&H, m.get()};
  CollocationStepper<JacobiField> st(field, scheme);
  const double r1 = m->r1();
  JState y{state.q[0], state.q[1], state.p[0], state.p[1], 0.0, 1.0, 1.0, 0.0};
  JState f{};
  double t = 0.0;
  int phase = 0;  // 0: before the first entry, 1: inside the first passage, 2: left the cap
  const long max_steps = static_cast<long>(std::ceil(t_max / h));
  long done = 0;
  auto radius_gap = [&](const JState& s) { return lattice_radius(s.data()) - r1; };
  while (done < max_steps) {
    field(y, f);
    const long jump = field.flight_steps(y, f, h, max_steps - done);
    if (jump >= 2) {
      const double dt = static_cast<double>(jump) * h;
      for (std::size_t d = 0; d < y.size(); ++d) y[d] += dt * f[d];
      t += dt;
      done += jump;
      st.forget();
      if (phase == 1) phase = 2;
      continue;
    }
    const JState prev = y;
    st.step(y, h);
    ++done;
    const double r_prev = lattice_radius(prev.data());
    const double r_now = lattice_radius(y.data());
    if (phase == 1 && r_now > r1 && t - rep.t_first > 10.0 * h) phase = 2;
    if (r_prev >= r1 && r_now < r1 && phase != 1) {
      const double th = locate_sign_change(st, radius_gap, 1e-13);
      JState e = st.dense(th);
      const double te = t + th * h;
      if (phase == 0) {
        e[4] = 1.0;
        e[5] = u_entry;
        y = e;
        t = te;
        rep.t_first = te;
        st.forget();
        phase = 1;
        continue;
      }
      rep.found = true;
      rep.t_second = te;
      rep.margin = e[5] / e[4];
      rep.expansion = std::hypot(e[4], e[5]) / std::hypot(1.0, u_entry);
      return rep;
    }
    t += h;
  }
  return rep;
}

}  // namespace dbg
