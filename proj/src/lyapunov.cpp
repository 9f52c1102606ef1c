#include "dbg/lyapunov.hpp"

#include <algorithm>
#include <cmath>

#include "dbg/error.hpp"
#include "dbg/fields.hpp"
#include "dbg/parallel.hpp"

namespace dbg {

namespace {

constexpr std::uint32_t kStartStream = 0;
constexpr std::uint32_t kTangentStream = 1;

double weighted_norm(const std::array<double, 8>& y, const std::array<double, 4>& w) {
  double s = 0.0;
  for (int i = 0; i < 4; ++i) s += w[i] * y[4 + i] * y[4 + i];
  return std::sqrt(s);
}

double lattice_u(double x, double y) {
  const double wx = nearest_lattice_offset(x);
  const double wy = nearest_lattice_offset(y);
  return wx * wx + wy * wy;
}

bool has_disc(const SampleSpec& spec) {
  return spec.hamiltonian.kind == HamiltonianKind::ConformalKinetic && spec.hamiltonian.metric &&
         !spec.hamiltonian.metric->is_flat();
}

double level_factor(const SampleSpec& spec, double u) {
  if (spec.hamiltonian.kind == HamiltonianKind::Flat) return 1.0;
  return spec.hamiltonian.metric_scale * spec.hamiltonian.metric->factor_u(u);
}

/// Jacobi equation in flow time at speed v: J'' = -v^2 K J.
struct FlowJacobiField {
  static constexpr std::size_t dim = JacobiField::dim;
  static constexpr std::size_t base_dim = JacobiField::base_dim;
  using State = JacobiField::State;
  JacobiField base;
  double v2 = 1.0;

  void operator()(const State& y, State& f) const {
    base(y, f);
    f[5] *= v2;
    f[7] *= v2;
  }
  bool free_step(const State& y, const State& f, double h) const { return base.free_step(y, f, h); }
  long flight_steps(const State& y, const State& f, double h, long max_steps) const {
    return base.flight_steps(y, f, h, max_steps);
  }
};

}  // namespace

void SampleSpec::validate() const {
  if (n_orbits < 1) throw InvalidArgument("n_orbits must be at least 1");
  if (!(renorm_dt > 0.0)) throw InvalidArgument("renorm_dt must be positive");
  if (!(T >= 100.0 * renorm_dt)) throw InvalidArgument("T must be at least 100 renorm_dt");
  if (!(h > 0.0) || h > renorm_dt) throw InvalidArgument("h must lie in (0, renorm_dt]");
  if (!(energy_level > 0.0)) throw InvalidArgument("energy level must be positive");
  if (hamiltonian.kind != HamiltonianKind::Flat &&
      hamiltonian.kind != HamiltonianKind::ConformalKinetic) {
    throw InvalidArgument("ensembles support Flat and ConformalKinetic Hamiltonians");
  }
  if (hamiltonian.kind == HamiltonianKind::ConformalKinetic && !hamiltonian.metric) {
    throw InvalidArgument("ConformalKinetic ensemble needs a metric");
  }
  for (double w : norm_weights) {
    if (!(w > 0.0)) throw InvalidArgument("norm weights must be positive");
  }
}

std::mt19937_64 orbit_stream(std::uint64_t seed, std::uint64_t index, std::uint32_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    purpose};
  return std::mt19937_64(seq);
}

double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

CotangentState<2> sample_start(const SampleSpec& spec, std::size_t index, long* trials) {
  auto gen = orbit_stream(spec.seed, index, kStartStream);
  double g_max = 1.0;
  if (has_disc(spec)) {
    const RadialMetric& m = *spec.hamiltonian.metric;
    g_max = spec.hamiltonian.metric_scale * std::max(1.0 + m.delta(), m.g_inf() * m.g_inf() + m.delta());
  } else if (spec.hamiltonian.kind == HamiltonianKind::ConformalKinetic) {
    g_max = level_factor(spec, 0.0);
  }
  CotangentState<2> s;
  if (trials) *trials = 0;
  for (;;) {
    if (trials) ++*trials;
    const double x = 2.0 * uniform01(gen) - 1.0;
    const double y = 2.0 * uniform01(gen) - 1.0;
    const double G = level_factor(spec, lattice_u(x, y));
    if (uniform01(gen) * g_max < G) {
      s.q = {x, y};
      const double phi = 2.0 * M_PI * uniform01(gen);
      const double speed = std::sqrt(2.0 * spec.energy_level * G);
      s.p = {speed * std::cos(phi), speed * std::sin(phi)};
      return s;
    }
  }
}

std::vector<CotangentState<2>> sample_liouville(const SampleSpec& spec) {
  spec.validate();
  std::vector<CotangentState<2>> out(spec.n_orbits);
  for (std::size_t i = 0; i < spec.n_orbits; ++i) out[i] = sample_start(spec, i);
  return out;
}

std::array<double, 4> sample_tangent(const SampleSpec& spec, std::size_t index) {
  auto gen = orbit_stream(spec.seed, index, kTangentStream);
  for (;;) {
    std::array<double, 4> v;
    double n2 = 0.0;
    for (double& c : v) {
      c = 2.0 * uniform01(gen) - 1.0;
      n2 += c * c;
    }
    if (n2 > 1.0 || n2 < 1e-6) continue;
    const double n = std::sqrt(n2);
    for (double& c : v) c /= n;
    return v;
  }
}

double ExponentRun::chi(const std::array<double, 4>& weights) const {
  if (t <= 0.0) return 0.0;
  return (log_sum + std::log(weighted_norm(y, weights))) / t;
}

ExponentRun start_exponent_run(const SampleSpec& spec, const CotangentState<2>& start,
                               const std::array<double, 4>& tangent) {
  spec.validate();
  ExponentRun run;
  run.y = {start.q[0], start.q[1], start.p[0], start.p[1],
           tangent[0], tangent[1], tangent[2], tangent[3]};
  const double n = weighted_norm(run.y, spec.norm_weights);
  if (!(n > 0.0)) throw InvalidArgument("tangent vector must be nonzero");
  for (int i = 4; i < 8; ++i) run.y[i] /= n;
  run.next_renorm = spec.renorm_dt;
  const Hamiltonian<2> H(spec.hamiltonian);
  run.H0 = H.value(run.y.data(), run.y.data() + 2);
  return run;
}

void advance(const SampleSpec& spec, ExponentRun& run, double t_end) {
  const Hamiltonian<2> H(spec.hamiltonian);
  const TangentField<2> field{&H};
  // The variational stages stall near 1e-13 relative to the tangent, so the
  // relative stage tolerance is 1e-11.
  CollocationStepper<TangentField<2>> st(field, spec.scheme, 1e-11);
  const long n_target = std::lround(t_end / spec.h);
  const bool disc = has_disc(spec);
  const double r1 = disc ? spec.hamiltonian.metric->r1() : 0.0;
  const double r2 = disc ? spec.hamiltonian.metric->r2() : 0.0;
  std::array<double, 8> f{};

  // Positions are kept in [-1, 1]^2 so their rounding does not grow with the lift.
  auto wrap = [&] {
    for (int d = 0; d < 2; ++d) {
      if (std::abs(run.y[d]) > 1.0) run.y[d] = nearest_lattice_offset(run.y[d]);
    }
  };

  auto renormalize = [&] {
    if (run.t + 1e-9 * spec.h < run.next_renorm) return;
    const double n = weighted_norm(run.y, spec.norm_weights);
    run.log_sum += std::log(n);
    for (int i = 4; i < 8; ++i) run.y[i] /= n;
    while (run.next_renorm <= run.t + 1e-9 * spec.h) run.next_renorm += spec.renorm_dt;
  };

  while (run.steps_done < n_target) {
    field(run.y, f);
    const long jump = field.flight_steps(run.y, f, spec.h, n_target - run.steps_done);
    if (jump >= 2) {
      const double dt = static_cast<double>(jump) * spec.h;
      for (int d = 0; d < 8; ++d) run.y[d] += dt * f[d];
      run.steps_done += jump;
      run.t = static_cast<double>(run.steps_done) * spec.h;
      run.in_disc = false;
      st.forget();
      wrap();
      renormalize();
      continue;
    }
    const std::array<double, 8> prev = run.y;
    st.step(run.y, spec.h);
    ++run.steps_done;
    run.t = static_cast<double>(run.steps_done) * spec.h;
    const double Hv = H.value(run.y.data(), run.y.data() + 2);
    run.max_energy_drift = std::max(run.max_energy_drift, std::abs(Hv - run.H0));
    if (disc) {
      const double u_prev = lattice_u(prev[0], prev[1]);
      const double u_now = lattice_u(run.y[0], run.y[1]);
      if (u_prev >= r1 * r1 && u_now < r1 * r1) {
        ++run.cap_entries;
        run.entry_times.push_back(run.t);
      }
      if (u_now < r2 * r2) {
        const double wx = nearest_lattice_offset(run.y[0]);
        const double wy = nearest_lattice_offset(run.y[1]);
        const double c = std::sqrt(spec.hamiltonian.metric->factor_u(u_now)) *
                         (wx * run.y[3] - wy * run.y[2]) / std::hypot(run.y[2], run.y[3]);
        if (!run.in_disc) {
          run.in_disc = true;
          run.c_entry = c;
        } else {
          run.max_clairaut_drift = std::max(run.max_clairaut_drift, std::abs(c - run.c_entry));
        }
      } else {
        run.in_disc = false;
      }
    }
    wrap();
    renormalize();
  }
}

double finite_time_exponent(const SampleSpec& spec, const CotangentState<2>& start,
                            const std::array<double, 4>& tangent, double T) {
  ExponentRun run = start_exponent_run(spec, start, tangent);
  advance(spec, run, T);
  return run.chi(spec.norm_weights);
}

JacobiExponent jacobi_exponent(const SampleSpec& spec, const CotangentState<2>& start, double T) {
  spec.validate();
  if (!has_disc(spec)) throw InvalidArgument("Jacobi exponent needs a curved metric");
  const Hamiltonian<2> H(spec.hamiltonian);
  const double speed = std::sqrt(2.0 * spec.energy_level);
  const FlowJacobiField field{JacobiField{&H, spec.hamiltonian.metric.get()},
                               speed * speed / spec.hamiltonian.metric_scale};
  CollocationStepper<FlowJacobiField> st(field, spec.scheme, 1e-11);
  const double r2sq = spec.hamiltonian.metric->r2() * spec.hamiltonian.metric->r2();
  FlowJacobiField::State y{start.q[0], start.q[1], start.p[0], start.p[1], 1.0, 0.0, 0.0, 0.0};
  const long n_target = std::lround(T / spec.h);
  long steps = 0;
  double log_sum = 0.0, next_renorm = spec.renorm_dt, log_at_entry = 0.0;
  bool inside = lattice_u(y[0], y[1]) < r2sq;
  JacobiExponent out;
  FlowJacobiField::State f{};
  // |(J, dJ/ds)| with s the arc length.
  auto log_norm = [&] { return log_sum + std::log(std::hypot(y[4], y[5] / speed)); };
  if (inside) log_at_entry = log_norm();
  while (steps < n_target) {
    field(y, f);
    const long jump = field.flight_steps(y, f, spec.h, n_target - steps);
    if (jump >= 2) {
      const double dt = static_cast<double>(jump) * spec.h;
      for (int d = 0; d < 6; ++d) y[d] += dt * f[d];
      steps += jump;
      st.forget();
    } else {
      st.step(y, spec.h);
      ++steps;
    }
    for (int d = 0; d < 2; ++d) {
      if (std::abs(y[d]) > 1.0) y[d] = nearest_lattice_offset(y[d]);
    }
    const bool now_inside = lattice_u(y[0], y[1]) < r2sq;
    if (now_inside && !inside) log_at_entry = log_norm();
    if (!now_inside && inside) out.passage_logs.push_back(log_norm() - log_at_entry);
    inside = now_inside;
    const double t = static_cast<double>(steps) * spec.h;
    if (t + 1e-9 * spec.h >= next_renorm) {
      const double n = std::hypot(y[4], y[5] / speed);
      log_sum += std::log(n);
      y[4] /= n;
      y[5] /= n;
      while (next_renorm <= t + 1e-9 * spec.h) next_renorm += spec.renorm_dt;
    }
  }
  out.chi = log_norm() / (static_cast<double>(steps) * spec.h);
  return out;
}

double positivity_threshold(double T) { return 5.0 * 2.0 * std::log(T) / T; }

double wilson_lower(std::size_t k, std::size_t n, double z) {
  if (k == 0 || n == 0) return 0.0;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(k) / nn;
  const double z2 = z * z;
  const double centre = p + z2 / (2.0 * nn);
  const double spread = z * std::sqrt(p * (1.0 - p) / nn + z2 / (4.0 * nn * nn));
  return std::max(0.0, (centre - spread) / (1.0 + z2 / nn));
}

PesinEstimate pesin_lower_bound(const std::vector<OrbitExponent>& orbits, long min_entries) {
  PesinEstimate e;
  double sum = 0.0, sum2 = 0.0;
  for (const auto& o : orbits) {
    if (o.cap_entries < min_entries) continue;
    const double v = std::max(o.chi, 0.0);
    sum += v;
    sum2 += v * v;
    ++e.n;
  }
  if (e.n == 0) return e;
  const double n = static_cast<double>(e.n);
  e.mean = sum / n;
  if (e.n > 1) {
    const double var = std::max(0.0, (sum2 - n * e.mean * e.mean) / (n - 1.0));
    e.std_error = std::sqrt(var / n);
  }
  return e;
}

PesinEstimate pesin_lower_bound(const LyapunovReport& report) {
  return pesin_lower_bound(report.per_orbit);
}

LyapunovReport run_ensemble(const SampleSpec& spec, const EnsembleOptions& options) {
  spec.validate();
  LyapunovReport rep;
  rep.spec = spec;
  rep.threshold = positivity_threshold(spec.T);
  rep.per_orbit.resize(spec.n_orbits);
  parallel_for(spec.n_orbits, spec.threads, [&](std::size_t i) {
    OrbitExponent& o = rep.per_orbit[i];
    o.index = i;
    o.start = sample_start(spec, i);
    ExponentRun run = start_exponent_run(spec, o.start, sample_tangent(spec, i));
    advance(spec, run, spec.T);
    o.chi = run.chi(spec.norm_weights);
    o.cap_entries = run.cap_entries;
    o.entry_times = run.entry_times;
    o.max_clairaut_drift = run.max_clairaut_drift;
    o.max_energy_drift = run.max_energy_drift;
    if (options.extend_flagged && o.chi > rep.threshold) {
      advance(spec, run, 2.0 * spec.T);
      o.chi_2T = run.chi(spec.norm_weights);
    }
  });
  for (const auto& o : rep.per_orbit) {
    if (o.chi > rep.threshold) {
      ++rep.positive;
      if (o.chi_2T >= 0.0) {
        ++rep.extended;
        if (o.chi_2T >= 0.7 * o.chi && o.chi_2T <= 1.3 * o.chi) ++rep.stable;
      }
    }
  }
  rep.positive_fraction = static_cast<double>(rep.positive) / static_cast<double>(spec.n_orbits);
  rep.positive_lower95 = wilson_lower(rep.positive, spec.n_orbits);
  rep.pesin = pesin_lower_bound(rep.per_orbit);
  if (options.baseline) {
    SampleSpec flat = spec;
    flat.hamiltonian.kind = HamiltonianKind::ConformalKinetic;
    flat.hamiltonian.metric = std::make_shared<const RadialMetric>(RadialMetric::flat());
    flat.hamiltonian.eps = 0.0;
    EnsembleOptions plain;
    plain.extend_flagged = false;
    plain.baseline = false;
    const LyapunovReport base = run_ensemble(flat, plain);
    rep.baseline = base.pesin;
    for (const auto& o : base.per_orbit) rep.baseline_max_chi = std::max(rep.baseline_max_chi, o.chi);
    rep.has_baseline = true;
  }
  return rep;
}

RecurrenceStats recurrence_stats(const std::vector<OrbitExponent>& orbits) {
  RecurrenceStats s;
  double total = 0.0;
  for (const auto& o : orbits) {
    ++s.entry_histogram[o.cap_entries];
    total += static_cast<double>(o.cap_entries);
    for (std::size_t k = 1; k < o.entry_times.size(); ++k) {
      s.return_times.push_back(o.entry_times[k] - o.entry_times[k - 1]);
    }
  }
  if (!orbits.empty()) s.mean_entries = total / static_cast<double>(orbits.size());
  if (!s.return_times.empty()) {
    double sum = 0.0;
    for (double v : s.return_times) sum += v;
    s.mean_return_time = sum / static_cast<double>(s.return_times.size());
  }
  return s;
}

}  // namespace dbg
