#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <vector>

#include "dbg/conformal.hpp"
#include "dbg/hamiltonian.hpp"
#include "dbg/integrator.hpp"

namespace dbg {

template <std::size_t N>
struct CotangentState {
  std::array<double, N> q{};
  std::array<double, N> p{};
};

/// Position reduced to the fundamental domain [-1, 1)^N.
template <std::size_t N>
CotangentState<N> wrapped(const CotangentState<N>& s) {
  CotangentState<N> out = s;
  for (std::size_t i = 0; i < N; ++i) {
    double x = s.q[i] - 2.0 * std::floor(0.5 * (s.q[i] + 1.0));
    if (x >= 1.0) x -= 2.0;
    out.q[i] = x;
  }
  return out;
}

template <std::size_t N>
double hamiltonian_value(const HamiltonianSpec& spec, const CotangentState<N>& s) {
  return Hamiltonian<N>(spec).value(s.q.data(), s.p.data());
}

enum class EventKind { CapEnter, ReachInner, CapExit, SectionHit };
const char* to_string(EventKind kind);

template <std::size_t N>
struct FlowEvent {
  double t = 0.0;
  EventKind kind = EventKind::CapEnter;
  CotangentState<N> state;  // lifted position
};

template <std::size_t N>
struct TraceSample {
  double t = 0.0;
  CotangentState<N> lifted;
  CotangentState<N> state;  // position wrapped into [-1, 1)^N
  double H = 0.0;
  double clairaut = 0.0;  // NaN outside the disc r < r2 or when undefined
};

template <std::size_t N>
struct OrbitTrace {
  std::vector<TraceSample<N>> samples;
  std::vector<FlowEvent<N>> events;
  CotangentState<N> final_state;  // lifted
  double max_energy_drift = 0.0;
  double max_clairaut_drift = 0.0;  // worst |C(t) - C(first sample of passage)| over passages
  long steps = 0;
};

struct IntegrateOptions {
  Scheme scheme = Scheme::Gauss6;
  long sample_every = 1;
  bool events = true;
  bool monitor = true;
};

/// Integrate Hamilton's equations from state over time T (negative T runs
/// backwards) with fixed step h > 0. Events: r crossing r1 (CapEnter/CapExit),
/// r crossing r0 inwards (ReachInner), and the last coordinate crossing an odd
/// integer (SectionHit, the boundary face of the fundamental domain).
template <std::size_t N>
OrbitTrace<N> integrate(const HamiltonianSpec& spec, const CotangentState<N>& state, double T,
                        double h, const IntegrateOptions& options = {});

/// Clairaut integral rho(l(r)) sin(theta) = r sqrt(g^2 + delta) sin(theta) for a
/// base point inside the disc r < r2. Throws OutsideCap otherwise.
double clairaut_value(const RadialMetric& m, const CotangentState<2>& state);

/// State on the level H_eps = eps (momenta in the region where xi = 1) at base
/// point q moving in direction angle.
CotangentState<2> perturbed_level_state(const RadialMetric& m, double eps,
                                        const std::array<double, 2>& q, double angle);

struct MaupertuisReport {
  std::vector<double> distances;  // Hausdorff distance per sample
  std::vector<bool> crossed_disc;
  std::vector<bool> completed;  // false if the orbit did not leave its domain in time
  double max_distance = 0.0;
};

/// Compare base curves of the H_eps flow on {H_eps = eps} with geodesics of
/// eps g^2 (dx^2 + dy^2) from matched data, over one crossing of the fundamental
/// domain that contains the starting point. ds bounds the distance moved per step.
MaupertuisReport maupertuis_check(const std::shared_ptr<const RadialMetric>& m, double eps,
                                  const std::vector<CotangentState<2>>& sample,
                                  double ds = 1e-3, double max_length = 50.0);

/// Hausdorff distance between two polylines traversing the same path in the same direction.
double ordered_hausdorff(const std::vector<std::array<double, 2>>& a,
                         const std::vector<std::array<double, 2>>& b);

}  // namespace dbg
