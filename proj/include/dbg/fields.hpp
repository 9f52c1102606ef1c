#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>

#include "dbg/dual.hpp"
#include "dbg/hamiltonian.hpp"
#include "dbg/integrator.hpp"

namespace dbg {

/// Smallest distance from the segment [q, q + d] to a point of the lattice (2Z)^N.
/// Assumes |d| < 1, so only the lattice points nearest to the endpoints matter.
template <std::size_t N>
double segment_lattice_distance(const double* q, const double* d) {
  double best = std::numeric_limits<double>::infinity();
  for (int end = 0; end < 2; ++end) {
    std::array<double, N> rel;
    double dd = 0.0, rd = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double x = q[i] + (end ? d[i] : 0.0);
      rel[i] = q[i] - 2.0 * std::round(0.5 * x);
      dd += d[i] * d[i];
      rd += rel[i] * d[i];
    }
    const double t = dd > 0.0 ? std::clamp(-rd / dd, 0.0, 1.0) : 0.0;
    double dist2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = rel[i] + t * d[i];
      dist2 += e * e;
    }
    best = std::min(best, std::sqrt(dist2));
  }
  return best;
}

/// First time t in [0, t_max] at which q + t v comes within radius R of the
/// lattice (2Z)^N, or +inf. Walks the lattice cells crossed by the line; R < 1.
template <std::size_t N>
double first_lattice_approach(const double* q, const double* v, double R, double t_max) {
  double vv = 0.0;
  for (std::size_t i = 0; i < N; ++i) vv += v[i] * v[i];
  if (vv == 0.0) {
    double d2 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = nearest_lattice_offset(q[i]);
      d2 += e * e;
    }
    return d2 <= R * R ? 0.0 : std::numeric_limits<double>::infinity();
  }
  double t = 0.0;
  const double nudge = 1e-12;
  while (t <= t_max) {
    std::array<double, N> c, d;
    double b = 0.0, cc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double x = q[i] + (t + nudge) * v[i];
      c[i] = 2.0 * std::round(0.5 * x);
      d[i] = q[i] - c[i];
      b += d[i] * v[i];
      cc += d[i] * d[i];
    }
    cc -= R * R;
    const double disc = b * b - vv * cc;
    if (disc >= 0.0) {
      const double root = std::sqrt(disc);
      const double t1 = (-b - root) / vv;
      const double t2 = (-b + root) / vv;
      if (t2 >= t) return std::max(t1, t);
    }
    double t_exit = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < N; ++i) {
      if (v[i] == 0.0) continue;
      const double wall = c[i] + (v[i] > 0.0 ? 1.0 : -1.0);
      t_exit = std::min(t_exit, (wall - q[i]) / v[i]);
    }
    t = std::max(t_exit, t + nudge);
  }
  return std::numeric_limits<double>::infinity();
}

/// Number of whole steps of size |h| from q along v that keep clear of the radius R
/// around every lattice point with margin for the stage points; capped at max_steps.
template <std::size_t N>
long free_flight_steps(const double* q, const double* v, double h, double R, long max_steps) {
  std::array<double, N> vs;
  double speed = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    vs[i] = h > 0.0 ? v[i] : -v[i];
    speed += v[i] * v[i];
  }
  speed = std::sqrt(speed);
  const double ah = std::abs(h);
  const double pad = 2.0 * ah * speed + 1e-9;
  if (R + pad >= 1.0) return 0;
  const double t_max = static_cast<double>(max_steps) * ah;
  const double t_hit = first_lattice_approach<N>(q, vs.data(), R + pad, t_max);
  if (t_hit >= t_max) return max_steps;
  const long n = static_cast<long>(std::floor(t_hit / ah)) - 1;
  return std::max(0L, n);
}

/// Phase-space vector field of a Hamiltonian, state (q, p).
template <std::size_t N>
struct PhaseField {
  static constexpr std::size_t dim = 2 * N;
  using State = std::array<double, dim>;
  const Hamiltonian<N>* H;

  void operator()(const State& y, State& f) const {
    H->template field<double>(y.data(), y.data() + N, f.data(), f.data() + N);
  }
  bool free_step(const State& y, const State& f, double h) const {
    if (H->momentum_free(y.data() + N)) return true;
    const double R = H->free_radius();
    if (R == 0.0) return true;
    std::array<double, N> d;
    for (std::size_t i = 0; i < N; ++i) d[i] = h * f[i];
    return segment_lattice_distance<N>(y.data(), d.data()) > R * (1.0 + 1e-12);
  }
  long flight_steps(const State& y, const State& f, double h, long max_steps) const {
    if (H->momentum_free(y.data() + N)) return max_steps;
    const double R = H->free_radius();
    if (R == 0.0) return max_steps;
    return free_flight_steps<N>(y.data(), f.data(), h, R, max_steps);
  }
};

/// Phase flow together with its linearization, state (q, p, dq, dp), using
/// forward-mode differentiation of the analytic vector field.
template <std::size_t N>
struct TangentField {
  static constexpr std::size_t dim = 4 * N;
  static constexpr std::size_t base_dim = 2 * N;
  using State = std::array<double, dim>;
  const Hamiltonian<N>* H;

  void operator()(const State& y, State& f) const {
    std::array<Dual, N> q, p, dq, dp;
    for (std::size_t i = 0; i < N; ++i) {
      q[i] = Dual(y[i], y[2 * N + i]);
      p[i] = Dual(y[N + i], y[3 * N + i]);
    }
    H->template field<Dual>(q.data(), p.data(), dq.data(), dp.data());
    for (std::size_t i = 0; i < N; ++i) {
      f[i] = dq[i].v;
      f[N + i] = dp[i].v;
      f[2 * N + i] = dq[i].d;
      f[3 * N + i] = dp[i].d;
    }
  }
  bool free_step(const State& y, const State& f, double h) const {
    if (H->momentum_free(y.data() + N)) return true;
    const double R = H->free_radius();
    if (R == 0.0) return true;
    std::array<double, N> d;
    for (std::size_t i = 0; i < N; ++i) d[i] = h * f[i];
    return segment_lattice_distance<N>(y.data(), d.data()) > R * (1.0 + 1e-12);
  }
  long flight_steps(const State& y, const State& f, double h, long max_steps) const {
    if (H->momentum_free(y.data() + N)) return max_steps;
    const double R = H->free_radius();
    if (R == 0.0) return max_steps;
    return free_flight_steps<N>(y.data(), f.data(), h, R, max_steps);
  }
};

/// Unit-speed geodesic of a conformal metric with two perpendicular Jacobi fields:
/// state (x, y, px, py, J1, J1', J2, J2'), J'' = -K J.
struct JacobiField {
  static constexpr std::size_t dim = 8;
  static constexpr std::size_t base_dim = 4;
  using State = std::array<double, dim>;
  const Hamiltonian<2>* H;
  const RadialMetric* metric;

  void operator()(const State& y, State& f) const {
    H->field<double>(y.data(), y.data() + 2, f.data(), f.data() + 2);
    const double wx = nearest_lattice_offset(y[0]);
    const double wy = nearest_lattice_offset(y[1]);
    const double K = metric->curvature_u(wx * wx + wy * wy);
    f[4] = y[5];
    f[5] = -K * y[4];
    f[6] = y[7];
    f[7] = -K * y[6];
  }
  /// K vanishes identically for r >= r2, where J moves linearly with the geodesic.
  bool free_step(const State& y, const State& f, double h) const {
    const double R = H->free_radius();
    if (R == 0.0) return true;
    std::array<double, 2> d{h * f[0], h * f[1]};
    return segment_lattice_distance<2>(y.data(), d.data()) > R * (1.0 + 1e-12);
  }
  long flight_steps(const State& y, const State& f, double h, long max_steps) const {
    const double R = H->free_radius();
    if (R == 0.0) return max_steps;
    return free_flight_steps<2>(y.data(), f.data(), h, R, max_steps);
  }
};

/// Fixed-grid propagation that replaces runs of free steps by one exact jump.
/// Jumps keep the global step grid, so the result is a smooth function of the
/// initial data up to rounding.
template <class Field>
class Propagator {
 public:
  using Stepper = CollocationStepper<Field>;
  using State = typename Stepper::State;

  Propagator(const Field& field, double h, Scheme scheme = Scheme::Gauss6, bool flights = true)
      : stepper_(field, scheme), h_(h), flights_(flights) {}

  Stepper& stepper() { return stepper_; }
  double h() const { return h_; }

  /// Advance by n_steps steps. obs(y_prev, y, steps_done, jumped) is called after
  /// every numerical step and after every jump.
  template <class Obs>
  void run(State& y, long n_steps, Obs&& obs) {
    long done = 0;
    State prev;
    State f{};
    while (done < n_steps) {
      if (flights_) {
        stepper_.field()(y, f);
        const long m = stepper_.field().flight_steps(y, f, h_, n_steps - done);
        if (m >= 2) {
          prev = y;
          const double dt = static_cast<double>(m) * h_;
          for (std::size_t d = 0; d < y.size(); ++d) y[d] += dt * f[d];
          done += m;
          stepper_.forget();
          obs(prev, y, done, true);
          continue;
        }
      }
      prev = y;
      stepper_.step(y, h_);
      ++done;
      obs(prev, y, done, false);
    }
  }

  void run(State& y, long n_steps) {
    run(y, n_steps, [](const State&, const State&, long, bool) {});
  }

 private:
  Stepper stepper_;
  double h_;
  bool flights_;
};

}  // namespace dbg
