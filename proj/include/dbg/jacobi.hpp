#pragma once

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include "dbg/conformal.hpp"
#include "dbg/flow.hpp"
#include "dbg/integrator.hpp"

namespace dbg {

/// Scalar perpendicular Jacobi field J with covariant derivative Jp at time t.
struct TransverseState {
  double t = 0.0;
  double J = 0.0;
  double Jp = 0.0;
};

/// Point of a chord with the two fundamental solutions J_S (0, 1) and J_C (1, 0) at t = 0.
struct ChordSample {
  double t = 0.0;
  double x = 0.0, y = 0.0, r = 0.0;
  double K = 0.0;
  double JS = 0.0, JSp = 0.0, JC = 0.0, JCp = 0.0;
};

struct ChordOptions {
  double h = 1e-3;
  Scheme scheme = Scheme::Gauss6;
};

/// Unit-speed geodesic through one cap passage, closest approach at t = 0.
/// Deep chords run between two points of C_{r1}; shallow chords (Clairaut value
/// above that of r1) never reach r1 and run between two points of C_{r2}.
struct CapChord {
  std::shared_ptr<const RadialMetric> metric;
  double clairaut = 0.0;
  double r_min = 0.0;
  double boundary = 0.0;
  bool deep = false;
  double T1 = 0.0;       // forward time to the boundary circle
  double T1_back = 0.0;  // backward time to the boundary circle (positive)
  bool has_T2 = false;
  double T2 = 0.0;       // forward time to C_{r0}
  double T2_back = 0.0;
  std::vector<ChordSample> samples;  // ascending in t, endpoints at -T1_back and T1
  ChordSample at_T2, at_mT2;
  CotangentState<2> entry, exit;  // unit-speed states at -T1_back and T1
};

/// r sqrt(G(r)): the Clairaut value of the parallel of radius r.
double parallel_clairaut(const RadialMetric& m, double r);

/// Throws ChordTooShallow on a flat metric and InvalidArgument when the
/// Clairaut value does not produce a passage through the disc r < r2.
CapChord build_chord(const std::shared_ptr<const RadialMetric>& m, double clairaut,
                     const ChordOptions& options = {});
/// Chord entering C_{r1} at angle theta to the inward meridian.
CapChord chord_from_entry_angle(const std::shared_ptr<const RadialMetric>& m, double theta,
                                const ChordOptions& options = {});

/// Solution with the given data at init.t, on the chord's grid.
std::vector<TransverseState> propagate(const CapChord& chord, const TransverseState& init);
/// J'' = -K(t) J from init to t_end (either direction) with step h.
std::vector<TransverseState> propagate(const std::function<double(double)>& K,
                                       const TransverseState& init, double t_end, double h,
                                       Scheme scheme = Scheme::Gauss6);

/// Zeros of J on the trace, located by bisection on the cubic Hermite interpolant.
std::vector<double> riccati_events(const std::vector<TransverseState>& trace, double tol = 1e-10);

/// Largest |J_S J_C' - J_S' J_C + 1| over the chord.
double wronskian_drift(const CapChord& chord);

struct CheckAReport {
  double uS_T1 = 0.0, uS_mT1 = 0.0, uS_T2 = 0.0, uS_mT2 = 0.0;
  int extra_zeros = 0;  // zeros of J_S on [-T1, T1] other than t = 0
  double tol = 1e-6;
  double max_residual() const;
  bool within_tolerance() const { return max_residual() <= tol && extra_zeros == 0; }
};

/// Throws ChordTooShallow when the chord does not reach C_{r0}.
CheckAReport check_A(const CapChord& chord, double tol = 1e-6);

/// u = J'/J at the exit for data (J, J') = (1, u_entry) at the entry.
double cone_transit(const CapChord& chord, double u_entry);

struct AdvanceReport {
  bool found = false;
  double t_first = 0.0, t_second = 0.0;
  double margin = 0.0;     // u at the second entry into C_{r1}
  double expansion = 0.0;  // |(J, J')| at the second entry over |(1, u_entry)|
};

/// Follow a unit-speed geodesic (ConformalKinetic, scale 1) from state until it
/// enters C_{r1}, start (J, J') = (1, u_entry) there and report u at the next entry.
AdvanceReport strict_advance(const std::shared_ptr<const RadialMetric>& m,
                             const CotangentState<2>& state, double u_entry = 0.0,
                             double t_max = 200.0, double h = 1e-3,
                             Scheme scheme = Scheme::Gauss6);

/// Unit-speed state at base point q moving in direction angle.
CotangentState<2> unit_state(const RadialMetric& m, const std::array<double, 2>& q, double angle);

}  // namespace dbg
