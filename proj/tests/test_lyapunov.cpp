#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <cstring>
#include <memory>

#include "dbg/error.hpp"
#include "dbg/lyapunov.hpp"
#include "doctest.h"

using namespace dbg;

namespace {

std::shared_ptr<const RadialMetric> metric5() {
  static const auto m = [] {
    CapParams p;
    p.a = 5.0;
    return std::make_shared<const RadialMetric>(
        build_metric(std::make_shared<const Profile>(build_profile(p))));
  }();
  return m;
}

SampleSpec dbg_spec(std::size_t n, double T) {
  SampleSpec s;
  s.n_orbits = n;
  s.T = T;
  s.hamiltonian = {HamiltonianKind::ConformalKinetic, metric5(), 0.0, 1.0};
  return s;
}

SampleSpec flat_spec(std::size_t n, double T) {
  SampleSpec s = dbg_spec(n, T);
  s.hamiltonian.metric = std::make_shared<const RadialMetric>(RadialMetric::flat());
  return s;
}

double shear_ceiling(double T) { return 2.0 * std::log(T) / T; }

// Mean of g^2 over the square by radial quadrature: the disc r < r2 lies inside
// the square and g is constant outside it.
double mean_factor(const RadialMetric& m) {
  const double r2 = m.r2();
  const double ginf2 = m.g_inf() * m.g_inf();
  const double disc = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double r) { return 2.0 * M_PI * r * m.factor_u(r * r); }, 0.0, r2, 15, 1e-13);
  return (disc + ginf2 * (4.0 - M_PI * r2 * r2)) / 4.0;
}

double disc_share(const RadialMetric& m) {
  const double r2 = m.r2();
  const double disc = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      [&](double r) { return 2.0 * M_PI * r * m.factor_u(r * r); }, 0.0, r2, 15, 1e-13);
  return disc / (4.0 * mean_factor(m));
}

}  // namespace

TEST_CASE("flat sampling is uniform and never rejects") {
  SampleSpec s = flat_spec(2000, 1000.0);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < s.n_orbits; ++i) {
    long trials = 0;
    const auto st = sample_start(s, i, &trials);
    CHECK(trials == 1);
    CHECK(std::abs(st.q[0]) <= 1.0);
    CHECK(std::abs(st.q[1]) <= 1.0);
    CHECK(std::hypot(st.p[0], st.p[1]) == doctest::Approx(1.0).epsilon(1e-14));
    mx += st.q[0];
    my += st.q[1];
  }
  // Standard deviation of the mean is 1/sqrt(3 n).
  const double sd = 1.0 / std::sqrt(3.0 * 2000.0);
  CHECK(std::abs(mx / 2000.0) < 5.0 * sd);
  CHECK(std::abs(my / 2000.0) < 5.0 * sd);
}

TEST_CASE("Liouville sampling: acceptance rate and disc share match quadrature") {
  SampleSpec s = dbg_spec(20000, 1000.0);
  const RadialMetric& m = *metric5();
  long total = 0;
  std::size_t in_disc = 0;
  for (std::size_t i = 0; i < s.n_orbits; ++i) {
    long trials = 0;
    const auto st = sample_start(s, i, &trials);
    total += trials;
    if (std::hypot(st.q[0], st.q[1]) < m.r2()) ++in_disc;
    const double G = m.factor_u(st.q[0] * st.q[0] + st.q[1] * st.q[1]);
    // Kinetic energy |p|^2 / (2G) sits on the level.
    CHECK((st.p[0] * st.p[0] + st.p[1] * st.p[1]) / (2.0 * G) ==
          doctest::Approx(0.5).epsilon(1e-13));
  }
  const double rate = static_cast<double>(s.n_orbits) / static_cast<double>(total);
  const double expected = mean_factor(m);
  const double sd_rate = std::sqrt(expected * (1.0 - expected) / static_cast<double>(total));
  CHECK(std::abs(rate - expected) < 5.0 * sd_rate);
  const double share = static_cast<double>(in_disc) / static_cast<double>(s.n_orbits);
  const double q = disc_share(m);
  CHECK(std::abs(share - q) < 5.0 * std::sqrt(q * (1.0 - q) / static_cast<double>(s.n_orbits)));
}

TEST_CASE("same seed gives identical samples, other seeds differ") {
  SampleSpec s = dbg_spec(50, 1000.0);
  const auto a = sample_liouville(s);
  const auto b = sample_liouville(s);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::memcmp(&a[i], &b[i], sizeof(a[i])) == 0);
  }
  s.seed = 2;
  const auto c = sample_liouville(s);
  CHECK(c[0].q[0] != a[0].q[0]);
}

TEST_CASE("flat ensemble stays below the shear ceiling") {
  const double T = 1000.0;
  SampleSpec s = flat_spec(16, T);
  EnsembleOptions o;
  o.baseline = false;
  const auto rep = run_ensemble(s, o);
  for (const auto& orb : rep.per_orbit) {
    CHECK(orb.chi <= shear_ceiling(T));
    CHECK(orb.cap_entries == 0);
  }
  CHECK(rep.positive == 0);
  CHECK(rep.pesin.mean <= 3.0 * std::log(T) / T);
}

TEST_CASE("orbit trapped away from the cap shears only") {
  const double T = 1000.0;
  SampleSpec s = dbg_spec(1, T);
  const double G = metric5()->g_inf() * metric5()->g_inf();
  CotangentState<2> start;
  start.q = {0.3, 1.0};
  start.p = {std::sqrt(G), 0.0};
  auto run = start_exponent_run(s, start, {0.0, 0.6, 0.8, 0.0});
  advance(s, run, T);
  CHECK(run.chi(s.norm_weights) <= shear_ceiling(T));
  CHECK(run.cap_entries == 0);
  std::vector<OrbitExponent> one(1);
  one[0].cap_entries = run.cap_entries;
  CHECK(recurrence_stats(one).entry_histogram.at(0) == 1);
}

TEST_CASE("orbit started inside the cap returns to it") {
  SampleSpec s = dbg_spec(1, 500.0);
  CotangentState<2> start;
  start.q = {0.01, 0.0};
  const double G = metric5()->factor_u(1e-4);
  start.p = {std::sqrt(G) * std::cos(0.4), std::sqrt(G) * std::sin(0.4)};
  auto run = start_exponent_run(s, start, {1.0, 0.0, 0.0, 0.0});
  advance(s, run, s.T);
  CHECK(run.cap_entries >= 1);
}

TEST_CASE("renormalization interval does not change the exponent") {
  SampleSpec s = dbg_spec(1, 500.0);
  const auto start = sample_start(s, 0);
  const auto xi = sample_tangent(s, 0);
  const double a = finite_time_exponent(s, start, xi, s.T);
  s.renorm_dt = 0.5;
  const double b = finite_time_exponent(s, start, xi, s.T);
  CHECK(a > 1.0);
  CHECK(std::abs(a - b) <= 1e-6 * std::abs(a));
}

TEST_CASE("chart norms related by L change the exponent by at most 2 log cond(L) / T") {
  SampleSpec s = dbg_spec(3, 500.0);
  SampleSpec w = s;
  w.norm_weights = {1.0, 1.0, 9.0, 9.0};  // L = diag(1, 1, 3, 3), cond 3
  const double bound = 2.0 * std::log(3.0) / s.T;
  for (std::size_t i = 0; i < 3; ++i) {
    const auto start = sample_start(s, i);
    const auto xi = sample_tangent(s, i);
    const double a = finite_time_exponent(s, start, xi, s.T);
    const double b = finite_time_exponent(w, start, xi, s.T);
    CHECK(std::abs(a - b) <= bound);
  }
}

TEST_CASE("tangent exponent agrees with the Jacobi accounting along the same orbit") {
  const double T = 1000.0;
  SampleSpec s = dbg_spec(4, T);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto start = sample_start(s, i);
    auto run = start_exponent_run(s, start, sample_tangent(s, i));
    advance(s, run, T);
    const double chi = run.chi(s.norm_weights);
    const auto jac = jacobi_exponent(s, start, T);
    REQUIRE(jac.passage_logs.size() > 100);
    double sum = 0.0;
    double mu = INFINITY;
    for (double l : jac.passage_logs) {
      sum += l;
      mu = std::min(mu, l);
    }
    INFO("orbit " << i << " chi " << chi << " jacobi " << jac.chi);
    // Chart factors and the flow direction add O(log T / T).
    CHECK(std::abs(chi - jac.chi) <= 4.0 * std::log(T) / T);
    CHECK(mu > 0.0);
    CHECK(chi >= static_cast<double>(jac.passage_logs.size()) * mu / T - 4.0 * std::log(T) / T);
    CHECK(chi >= sum / T - 4.0 * std::log(T) / T);
  }
}

TEST_CASE("curved ensemble separates from the flat baseline") {
  const double T = 1000.0;
  SampleSpec s = dbg_spec(12, T);
  const auto rep = run_ensemble(s);
  CHECK(rep.positive > 0);
  CHECK(rep.positive_lower95 > 0.0);
  CHECK(rep.positive_fraction >= 0.0);
  CHECK(rep.positive_fraction <= 1.0);
  REQUIRE(rep.has_baseline);
  CHECK(rep.baseline_max_chi <= shear_ceiling(T));
  CHECK(rep.pesin.mean >= 10.0 * rep.baseline.mean);
  CHECK(rep.extended == rep.positive);
  CHECK(rep.stable == rep.extended);
  for (const auto& o : rep.per_orbit) {
    CHECK(o.max_clairaut_drift < 1e-4);
    if (o.chi > rep.threshold) CHECK(o.chi_2T > 0.0);
  }

  SUBCASE("Pesin estimate restricted to frequent visitors dominates the full one") {
    const auto all = pesin_lower_bound(rep.per_orbit, 0);
    const auto often = pesin_lower_bound(rep.per_orbit, 10);
    CHECK(all.mean == doctest::Approx(rep.pesin.mean).epsilon(1e-15));
    REQUIRE(often.n > 0);
    CHECK(often.mean >= all.mean);
  }
}

TEST_CASE("seed determinism of the report") {
  SampleSpec s = dbg_spec(4, 200.0);
  const auto a = run_ensemble(s);
  const auto b = run_ensemble(s);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::memcmp(&a.per_orbit[i].chi, &b.per_orbit[i].chi, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.per_orbit[i].chi_2T, &b.per_orbit[i].chi_2T, sizeof(double)) == 0);
    CHECK(a.per_orbit[i].entry_times == b.per_orbit[i].entry_times);
  }
  s.threads = 3;
  const auto c = run_ensemble(s);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(std::memcmp(&a.per_orbit[i].chi, &c.per_orbit[i].chi, sizeof(double)) == 0);
  }
}

TEST_CASE("cap entries grow linearly with the horizon") {
  SampleSpec s = dbg_spec(6, 1000.0);
  EnsembleOptions o;
  o.extend_flagged = false;
  o.baseline = false;
  const auto r1 = recurrence_stats(run_ensemble(s, o).per_orbit);
  s.T = 2000.0;
  const auto r2 = recurrence_stats(run_ensemble(s, o).per_orbit);
  REQUIRE(r1.mean_entries > 10.0);
  CHECK(r2.mean_entries / r1.mean_entries == doctest::Approx(2.0).epsilon(0.1));
  CHECK(r1.mean_return_time > 0.0);
  CHECK(r2.mean_return_time == doctest::Approx(r1.mean_return_time).epsilon(0.1));
}

TEST_CASE("Wilson bound and threshold") {
  CHECK(wilson_lower(0, 100) == 0.0);
  CHECK(wilson_lower(100, 100) > 0.96);
  CHECK(wilson_lower(100, 100) < 1.0);
  // p = 0.5, n = 100: centre 0.5, lower bound 0.4038.
  CHECK(wilson_lower(50, 100) == doctest::Approx(0.40383153).epsilon(1e-6));
  CHECK(positivity_threshold(1e4) == doctest::Approx(10.0 * std::log(1e4) / 1e4));
}

TEST_CASE("invalid specs are rejected") {
  SampleSpec s = dbg_spec(0, 1000.0);
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = dbg_spec(1, 50.0);
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = dbg_spec(1, 1000.0);
  s.hamiltonian.kind = HamiltonianKind::Relativistic;
  CHECK_THROWS_AS(s.validate(), InvalidArgument);
  s = flat_spec(1, 1000.0);
  CHECK_THROWS_AS(jacobi_exponent(s, sample_start(s, 0), 1000.0), InvalidArgument);
}
