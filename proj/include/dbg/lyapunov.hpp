#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <vector>

#include "dbg/flow.hpp"
#include "dbg/hamiltonian.hpp"
#include "dbg/integrator.hpp"

namespace dbg {

/// Ensemble parameters. The Hamiltonian must be Flat or ConformalKinetic (n = 2);
/// its level sets carry the Liouville measure G dx dy dphi.
struct SampleSpec {
  std::size_t n_orbits = 1000;
  double T = 1e4;
  double renorm_dt = 1.0;
  std::uint64_t seed = 1;
  double energy_level = 0.5;
  HamiltonianSpec hamiltonian;
  double h = 1e-2;
  Scheme scheme = Scheme::Gauss6;
  std::array<double, 4> norm_weights{1.0, 1.0, 1.0, 1.0};
  unsigned threads = 1;

  /// Throws InvalidArgument.
  void validate() const;
};

/// Random stream keyed by (seed, index, purpose); independent of evaluation order.
std::mt19937_64 orbit_stream(std::uint64_t seed, std::uint64_t index, std::uint32_t purpose = 0);
/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(std::mt19937_64& gen);

/// Start of orbit `index`: base point with density G / sup G by rejection,
/// uniform direction, |p| fixed by the energy level. `trials` receives the
/// number of proposals used.
CotangentState<2> sample_start(const SampleSpec& spec, std::size_t index, long* trials = nullptr);
std::vector<CotangentState<2>> sample_liouville(const SampleSpec& spec);
/// Unit tangent vector (dx, dy, dpx, dpy) drawn after the start of orbit `index`.
std::array<double, 4> sample_tangent(const SampleSpec& spec, std::size_t index);

/// Resumable tangent-flow run with periodic renormalization.
struct ExponentRun {
  std::array<double, 8> y{};  // x, y, px, py, dx, dy, dpx, dpy
  double t = 0.0;
  long steps_done = 0;
  double log_sum = 0.0;
  double next_renorm = 0.0;
  long cap_entries = 0;
  std::vector<double> entry_times;
  double max_clairaut_drift = 0.0;
  double max_energy_drift = 0.0;
  double H0 = 0.0;
  bool in_disc = false;
  double c_entry = 0.0;

  /// Exponent at the current time in the chart norm.
  double chi(const std::array<double, 4>& weights) const;
};

ExponentRun start_exponent_run(const SampleSpec& spec, const CotangentState<2>& start,
                               const std::array<double, 4>& tangent);
/// Advance to time t_end (a multiple of spec.h up to rounding).
void advance(const SampleSpec& spec, ExponentRun& run, double t_end);

/// chi+(T) = log(|D phi_T xi| / |xi|) / T for one orbit.
double finite_time_exponent(const SampleSpec& spec, const CotangentState<2>& start,
                            const std::array<double, 4>& tangent, double T);

/// The same orbit seen through the scalar Jacobi equation J'' = -v^2 K J (v the
/// metric speed) for a perpendicular field started at (J, J') = (1, 0).
struct JacobiExponent {
  double chi = 0.0;                  // log |(J, J')| / T
  std::vector<double> passage_logs;  // log expansion of |(J, J')| over each visit to r < r2
};

JacobiExponent jacobi_exponent(const SampleSpec& spec, const CotangentState<2>& start, double T);

struct OrbitExponent {
  std::size_t index = 0;
  CotangentState<2> start;
  double chi = 0.0;
  double chi_2T = -1.0;  // only for flagged orbits when the extension ran
  long cap_entries = 0;
  std::vector<double> entry_times;
  double max_clairaut_drift = 0.0;
  double max_energy_drift = 0.0;
};

struct PesinEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
};

struct LyapunovReport {
  SampleSpec spec;
  std::vector<OrbitExponent> per_orbit;
  double threshold = 0.0;
  std::size_t positive = 0;
  double positive_fraction = 0.0;
  double positive_lower95 = 0.0;  // Wilson score bound
  PesinEstimate pesin;
  bool has_baseline = false;
  PesinEstimate baseline;
  double baseline_max_chi = 0.0;
  std::size_t stable = 0;  // flagged orbits with chi(2T) in [0.7, 1.3] chi(T)
  std::size_t extended = 0;
};

/// 5 (2 log T / T): above the linear-shear ceiling of the flat flow.
double positivity_threshold(double T);
double wilson_lower(std::size_t k, std::size_t n, double z = 1.959963984540054);

struct EnsembleOptions {
  bool extend_flagged = true;  // continue flagged orbits to 2T
  bool baseline = true;        // flat ensemble with the same spec and seed
};

LyapunovReport run_ensemble(const SampleSpec& spec, const EnsembleOptions& options = {});

/// Mean of max(chi, 0) with its standard error over orbits with at least min_entries cap entries.
PesinEstimate pesin_lower_bound(const std::vector<OrbitExponent>& orbits, long min_entries = 0);
PesinEstimate pesin_lower_bound(const LyapunovReport& report);

struct RecurrenceStats {
  std::map<long, std::size_t> entry_histogram;  // cap entries -> orbit count
  double mean_entries = 0.0;
  std::vector<double> return_times;  // gaps between successive entries, all orbits
  double mean_return_time = 0.0;
};

RecurrenceStats recurrence_stats(const std::vector<OrbitExponent>& orbits);

}  // namespace dbg
