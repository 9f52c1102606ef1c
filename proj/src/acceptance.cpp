#include "dbg/acceptance.hpp"

#include <algorithm>
#include <cfloat>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <memory>

#include "dbg/error.hpp"
#include "dbg/parallel.hpp"
#include "dbg/pipeline.hpp"

namespace dbg {

namespace {

using Clock = std::chrono::steady_clock;

std::shared_ptr<const Profile> profile_a(double a) {
  CapParams p;
  p.a = a;
  return std::make_shared<const Profile>(build_profile(p));
}

std::shared_ptr<const RadialMetric> metric_a(double a) {
  return std::make_shared<const RadialMetric>(build_metric(profile_a(a)));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string summary;
  Json detail;

  void check(bool ok) { pass = pass && ok; }
  void note(const std::string& s) { summary += summary.empty() ? s : "; " + s; }
};

// 1. rho rho''' - rho' rho'' = 100 a^2 l^3 (1 + 12 a l^2 - 40 a^2 l^4) on (0, 1/sqrt(5a)].
Outcome criterion_profile_identity() {
  Outcome o;
  double worst_all = 0.0;
  for (double a : {5.0, 25.0, 100.0}) {
    const auto p = profile_a(a);
    const double l_end = 1.0 / std::sqrt(5.0 * a);
    double worst = 0.0;
    for (int i = 1; i <= 1000; ++i) {
      const double l = l_end * i / 1000.0;
      const ProfileJet j = p->jet(l);
      const double lhs = j.rho * j.d3 - j.d1 * j.d2;
      const double rhs = 100.0 * a * a * l * l * l * (1.0 + 12.0 * a * l * l - 40.0 * a * a * std::pow(l, 4));
      worst = std::max(worst, std::abs(lhs - rhs) / std::abs(rhs));
    }
    o.detail["a=" + fmt("%g", a)] = worst;
    worst_all = std::max(worst_all, worst);
  }
  o.check(worst_all <= 1e-9);
  o.note("max relative residual " + fmt("%.2e", worst_all) + " (<= 1e-9)");
  return o;
}

// 2. rho' vanishes on the two critical parallels.
Outcome criterion_critical_parallels() {
  Outcome o;
  double worst = 0.0;
  for (double a : {5.0, 25.0, 100.0}) {
    const auto p = profile_a(a);
    const double d0 = std::abs(p->rho_d(1.0 / std::sqrt(10.0 * a)));
    const double d1 = std::abs(p->rho_d(1.0 / std::sqrt(5.0 * a)));
    o.detail["a=" + fmt("%g", a)] = {{"drho_l0", d0}, {"drho_l1", d1}};
    worst = std::max({worst, d0, d1});
  }
  o.check(worst <= 1e-10);
  o.note("max |rho'| " + fmt("%.2e", worst) + " (<= 1e-10)");
  return o;
}

// 3. Radius solver and conformal factor.
Outcome criterion_conformal_solver() {
  Outcome o;
  double g0 = 0.0, trip = 0.0, ident = 0.0, mono = 0.0, strict = -INFINITY, after = 0.0;
  for (double a : {5.0, 25.0, 100.0}) {
    const RadialMetric m = build_metric(profile_a(a));
    const Profile& p = m.profile();
    const double g0a = std::max(std::abs(m.g(0.0) - 1.0), std::abs(m.exact(0.0).g - 1.0));
    double tripa = 0.0, identa = 0.0, monoa = 0.0, stricta = -INFINITY, aftera = 0.0;
    for (int i = 0; i <= 4000; ++i) {
      const double l = p.l2() * i / 4000.0;
      tripa = std::max(tripa, std::abs(m.l_of_r(m.r_of_l(l)) - l));
    }
    double prev = m.g(0.0);
    for (int i = 1; i <= 4000; ++i) {
      const double r = m.r2() * i / 4000.0;
      identa = std::max(identa, std::abs(p.rho(m.l_of_r(r)) - r * m.g(r)));
      const double v = m.g(r);
      // Increase beyond 4 ulp counts as a violation.
      monoa = std::max(monoa, (v - prev) / (DBL_EPSILON * prev));
      prev = v;
    }
    for (int i = 1; i < 50; ++i) {
      stricta = std::max(stricta, m.g(m.r2() * (i + 1) / 50.0) - m.g(m.r2() * i / 50.0));
    }
    for (int i = 0; i <= 200; ++i) {
      const double r = m.r2() + (1.0 - m.r2()) * i / 200.0;
      aftera = std::max(aftera, std::abs(m.g(r) - m.g_inf()));
    }
    o.detail["a=" + fmt("%g", a)] = {{"g0_error", g0a},
                                     {"round_trip", tripa},
                                     {"rho_vs_rg", identa},
                                     {"max_increase_ulp", monoa},
                                     {"max_coarse_step", stricta},
                                     {"after_r2", aftera}};
    g0 = std::max(g0, g0a);
    trip = std::max(trip, tripa);
    ident = std::max(ident, identa);
    mono = std::max(mono, monoa);
    strict = std::max(strict, stricta);
    after = std::max(after, aftera);
  }
  o.check(g0 <= 1e-8);
  o.check(trip <= 1e-10);
  o.check(ident <= 1e-8);
  o.check(mono <= 4.0);
  o.check(strict < 0.0);
  o.check(after == 0.0);
  o.note("g(0) err " + fmt("%.1e", g0) + ", round trip " + fmt("%.1e", trip) + ", rho-rg " +
         fmt("%.1e", ident) + ", coarse step " + fmt("%.1e", strict) + ", |g-g_inf| after r2 " +
         fmt("%.1e", after));
  return o;
}

// 4. r2 <= exp(2 - ln(3 - sqrt 5)) / (2 sqrt a), decreasing in a.
Outcome criterion_r2_bound() {
  Outcome o;
  double prev = INFINITY;
  bool bound = true, decreasing = true;
  double worst_ratio = 0.0;
  for (double a : {5.0, 25.0, 100.0, 400.0}) {
    const RadialMetric m = build_metric(profile_a(a));
    const double b = std::exp(2.0 - std::log(3.0 - std::sqrt(5.0))) / (2.0 * std::sqrt(a));
    bound = bound && m.r2() <= b;
    decreasing = decreasing && m.r2() < prev;
    prev = m.r2();
    worst_ratio = std::max(worst_ratio, m.r2() / b);
    o.detail["a=" + fmt("%g", a)] = {{"r2", m.r2()}, {"bound", b}};
  }
  o.check(bound);
  o.check(decreasing);
  o.note(std::string("bound ") + (bound ? "holds" : "fails") + " (max r2/bound " +
         fmt("%.3f", worst_ratio) + "), r2 " + (decreasing ? "decreasing" : "not decreasing"));
  return o;
}

// 5. Curvature from the profile vs the conformal Laplacian; DBG certificates.
Outcome criterion_curvature() {
  Outcome o;
  double worst = 0.0;
  for (double a : {5.0, 25.0}) {
    const RadialMetric m = build_metric(profile_a(a));
    double w = 0.0;
    for (int i = 1; i < 2000; ++i) {
      const double r = m.r2() * i / 2000.0;
      const double phi = 0.37 * i;
      const double kxy = gaussian_curvature_xy(m, r * std::cos(phi), r * std::sin(phi));
      w = std::max(w, std::abs(kxy - curvature_of_profile(m.profile(), m.l_of_r(r))));
    }
    o.detail["curvature_a=" + fmt("%g", a)] = w;
    worst = std::max(worst, w);
  }
  const RadialMetric m = build_metric(profile_a(5.0));
  const CertificateReport base = dbg_certificate(m);
  const double delta0 = 1e-3 * (1.0 - m.g_inf() * m.g_inf());
  const bool plus = dbg_certificate(m.with_delta(delta0)).passed();
  const bool minus = dbg_certificate(m.with_delta(-delta0)).passed();
  o.detail["certificate_a=5"] = to_json(base);
  o.detail["delta0"] = delta0;
  o.detail["shift_plus"] = plus;
  o.detail["shift_minus"] = minus;
  o.check(worst <= 1e-6);
  o.check(base.passed());
  o.check(plus || minus);
  o.note("max |K_xy - K_profile| " + fmt("%.1e", worst) + ", certificate a=5 " +
         (base.passed() ? "pass" : "FAIL") + ", delta=+-" + fmt("%.2e", delta0) + " " +
         (plus ? "+" : "") + (minus ? "-" : "") + " certified");
  return o;
}

// 6. Energy and Clairaut drift over T = 1e3 at h = 1e-3; closed forms of the free flows.
Outcome criterion_integrator() {
  Outcome o;
  const auto m = metric_a(5.0);
  struct Case {
    HamiltonianSpec spec;
    CotangentState<2> s;
  };
  const std::vector<Case> cases = {
      {{HamiltonianKind::Flat, m, 0.0, 1.0}, {{0.1, 0.2}, {0.5, 0.3}}},
      {{HamiltonianKind::ConformalKinetic, m, 0.0, 1.0}, unit_state(*m, {0.9, 0.05}, 3.0)},
      {{HamiltonianKind::PerturbedKinetic, m, 0.1, 1.0}, {{0.9, 0.05}, {-0.45, 0.1}}},
      {{HamiltonianKind::Relativistic, m, 0.1, 1.0}, {{0.9, 0.05}, {-0.45, 0.1}}},
  };
  const double T = 1e3;
  IntegrateOptions opt;
  opt.sample_every = 1000;
  double worst_drift = 0.0, clairaut = 0.0;
  for (const auto& c : cases) {
    const auto tr = integrate<2>(c.spec, c.s, T, 1e-3, opt);
    const double H0 = tr.samples.front().H;
    const double rel = tr.max_energy_drift / std::max(1.0, std::abs(H0));
    worst_drift = std::max(worst_drift, rel);
    long entries = 0;
    for (const auto& e : tr.events) entries += e.kind == EventKind::CapEnter;
    Json d{{"H0", H0}, {"energy_drift", tr.max_energy_drift}, {"cap_entries", entries}};
    if (c.spec.kind == HamiltonianKind::ConformalKinetic) {
      clairaut = tr.max_clairaut_drift;
      d["clairaut_drift"] = clairaut;
    }
    o.detail[to_string(c.spec.kind)] = std::move(d);
  }
  // Free flows: straight lines q + T p (Flat, PerturbedKinetic at eps = 0) and
  // q + T p / gamma (Relativistic at eps = 0).
  double closed = 0.0;
  const CotangentState<2> s{{0.1, -0.3}, {0.6, 0.45}};
  const double gamma = std::sqrt(1.0 - 0.36 - 0.2025);
  for (auto kind : {HamiltonianKind::Flat, HamiltonianKind::PerturbedKinetic,
                    HamiltonianKind::Relativistic}) {
    const auto tr = integrate<2>({kind, m, 0.0, 1.0}, s, T, 1e-3, opt);
    const double speed = kind == HamiltonianKind::Relativistic ? 1.0 / gamma : 1.0;
    double err = 0.0;
    for (int i = 0; i < 2; ++i) {
      err = std::max(err, std::abs(tr.final_state.q[i] - (s.q[i] + T * speed * s.p[i])) / T);
      err = std::max(err, std::abs(tr.final_state.p[i] - s.p[i]) / T);
    }
    o.detail[std::string("closed_form_") + to_string(kind)] = err;
    closed = std::max(closed, err);
  }
  o.check(worst_drift <= 1e-8);
  o.check(clairaut <= 1e-7);
  o.check(closed <= 1e-10);
  o.note("energy drift " + fmt("%.1e", worst_drift) + " (<= 1e-8), Clairaut " +
         fmt("%.1e", clairaut) + " (<= 1e-7), closed form " + fmt("%.1e", closed) +
         "/unit time (<= 1e-10)");
  return o;
}

// 7. Cone preservation, (B), (A) residuals and strict advance.
Outcome criterion_cones(unsigned threads) {
  Outcome o;
  const auto m = metric_a(5.0);
  const std::size_t n_deep = 300, n_shallow = 200;
  struct Passage {
    bool deep = false;
    double u0 = 0.0, u5 = 0.0;
    bool b_holds = false;
    double a_residual = 0.0;
    bool a_ok = true;
  };
  std::vector<Passage> out(n_deep + n_shallow);
  const double f1 = parallel_clairaut(*m, m->r1());
  const double f2 = parallel_clairaut(*m, m->r2());
  parallel_for(out.size(), threads, [&](std::size_t i) {
    Passage& p = out[i];
    CapChord ch;
    if (i < n_deep) {
      const double theta = 0.5 * M_PI * (static_cast<double>(i) + 0.5) / n_deep;
      ch = chord_from_entry_angle(m, theta);
    } else {
      const double w = (static_cast<double>(i - n_deep) + 0.5) / n_shallow;
      ch = build_chord(m, f1 + w * (f2 - f1));
    }
    p.deep = ch.deep;
    p.u0 = cone_transit(ch, 0.0);
    p.u5 = cone_transit(ch, 0.5);
    if (ch.deep) {
      for (double tau : riccati_events(propagate(ch, {0.0, 1.0, 0.0}))) {
        if (tau > 0.0) {
          p.b_holds = ch.has_T2 && tau < ch.T2;
          break;
        }
      }
      const CheckAReport a = check_A(ch);
      p.a_residual = a.max_residual();
      p.a_ok = a.within_tolerance();
    }
  });
  std::size_t deep = 0, shallow = 0, cone_ok = 0, b_ok = 0, a_flagged = 0;
  double worst_u = INFINITY, worst_a = 0.0;
  for (const auto& p : out) {
    (p.deep ? deep : shallow) += 1;
    const bool ok = p.u0 >= -1e-8 && p.u5 >= -1e-8;
    cone_ok += ok;
    worst_u = std::min({worst_u, p.u0, p.u5});
    if (p.deep) {
      b_ok += p.b_holds;
      a_flagged += !p.a_ok;
      worst_a = std::max(worst_a, p.a_residual);
    }
  }

  // Strict advance on keyed random orbits started outside the cap.
  const std::size_t n_orbits = 60;
  std::vector<AdvanceReport> adv(n_orbits);
  parallel_for(n_orbits, threads, [&](std::size_t i) {
    auto gen = orbit_stream(1, i, 0x41445643);
    std::array<double, 2> q;
    do {
      q = {2.0 * uniform01(gen) - 1.0, 2.0 * uniform01(gen) - 1.0};
    } while (std::hypot(q[0], q[1]) <= m->r2());
    const double angle = 2.0 * M_PI * uniform01(gen);
    adv[i] = strict_advance(m, unit_state(*m, q, angle));
  });
  std::size_t found = 0, positive = 0;
  double min_margin = INFINITY;
  for (const auto& r : adv) {
    if (!r.found) continue;
    ++found;
    positive += r.margin > 0.0;
    min_margin = std::min(min_margin, r.margin);
  }

  o.detail = {{"passages", out.size()},  {"deep", deep},
              {"shallow", shallow},       {"cone_preserved", cone_ok},
              {"min_u_exit", worst_u},    {"B_holds", b_ok},
              {"A_max_residual", worst_a}, {"A_flagged", a_flagged},
              {"advance_orbits", n_orbits}, {"advance_found", found},
              {"advance_positive", positive}, {"advance_min_margin", min_margin}};
  o.check(out.size() >= 500 && cone_ok == out.size());
  o.check(deep >= 100 && b_ok == deep);
  o.check(found > 0 && positive == found);
  o.note("cone " + std::to_string(cone_ok) + "/" + std::to_string(out.size()) + " (min u_exit " +
         fmt("%.1e", worst_u) + "), (B) " + std::to_string(b_ok) + "/" + std::to_string(deep) +
         ", (A) max " + fmt("%.1e", worst_a) + " flagged " + std::to_string(a_flagged) +
         ", advance " + std::to_string(positive) + "/" + std::to_string(found));
  return o;
}

// 8. Lyapunov separation of the DBG and flat ensembles.
Outcome criterion_lyapunov(unsigned threads) {
  Outcome o;
  SampleSpec s;
  s.n_orbits = 1000;
  s.T = 1e4;
  s.seed = 1;
  s.hamiltonian = {HamiltonianKind::ConformalKinetic, metric_a(5.0), 0.0, 1.0};
  s.threads = threads;
  const LyapunovReport r = run_ensemble(s);
  const double ceiling = 2.0 * std::log(s.T) / s.T;
  o.detail = {{"n_orbits", s.n_orbits},
              {"T", s.T},
              {"h", s.h},
              {"baseline_max_chi", r.baseline_max_chi},
              {"ceiling", ceiling},
              {"positive", r.positive},
              {"positive_fraction", r.positive_fraction},
              {"positive_lower95", r.positive_lower95},
              {"pesin", to_json(r.pesin)},
              {"baseline_pesin", to_json(r.baseline)},
              {"extended", r.extended},
              {"stable", r.stable}};
  o.check(r.has_baseline && r.baseline_max_chi <= ceiling);
  o.check(r.positive_lower95 > 0.0);
  o.check(r.pesin.mean >= 10.0 * r.baseline.mean);
  o.check(r.stable == r.extended);
  o.note("flat max chi " + fmt("%.2e", r.baseline_max_chi) + " (<= " + fmt("%.2e", ceiling) +
         "), positive " + std::to_string(r.positive) + "/" + std::to_string(s.n_orbits) +
         " lower95 " + fmt("%.3f", r.positive_lower95) + ", Pesin " + fmt("%.3f", r.pesin.mean) +
         " vs flat " + fmt("%.2e", r.baseline.mean) + ", stable " + std::to_string(r.stable) + "/" +
         std::to_string(r.extended));
  return o;
}

PerturbedMapOptions section_map() {
  PerturbedMapOptions mo;
  mo.metric = metric_a(25.0);
  return mo;
}

// 9. Closeness of R_eps and R_exact.
Outcome criterion_closeness(unsigned threads) {
  Outcome o;
  ClosenessOptions co;
  co.n = 10000;
  co.threads = threads;
  const auto r = closeness_scan({1e-1, 1e-2, 1e-3}, section_map(), co);
  double order_dev = 0.0, outside = 0.0, defect = 0.0;
  for (double v : r.order_c0) order_dev = std::max(order_dev, std::abs(v - 1.0));
  for (double v : r.order_c1) order_dev = std::max(order_dev, std::abs(v - 1.0));
  for (const auto& row : r.rows) {
    outside = std::max(outside, row.outside_cutoff);
    defect = std::max(defect, row.symplectic_defect);
  }
  o.detail = to_json(r);
  o.check(r.order_c0.size() == 2 && r.order_c1.size() == 2 && order_dev <= 0.3);
  o.check(outside <= 1e-8);
  o.check(defect <= 1e-6);
  std::string orders;
  for (double v : r.order_c0) orders += fmt("%.3f ", v);
  for (double v : r.order_c1) orders += fmt("%.3f ", v);
  o.note("orders C0/C1 " + orders + "(1 +- 0.3), outside cutoff " + fmt("%.1e", outside) +
         ", symplectic defect " + fmt("%.1e", defect) + " (n = 10000, a = 25)");
  return o;
}

// 10. Lens suite.
Outcome criterion_lens(unsigned threads) {
  Outcome o;
  SigmaEpsConfig sc;
  sc.map = section_map();
  sc.metric = sc.map.metric;
  sc.eps = 1e-2;
  LensSuiteOptions lo;
  lo.n = 1000;
  lo.threads = threads;
  const LensSuiteReport r = lens_suite(sc, lo);
  const double defect = std::max({r.defect_sigma0, r.defect_phi1, r.defect_phi2, r.defect_sigma_eps});
  o.detail = to_json(r);
  o.check(r.lens_reversibility <= 1e-7);
  o.check(r.sigma_eps_symmetry <= 1e-7);
  o.check(defect <= 1e-6);
  o.check(r.decomposition.residual <= 1e-9 && r.decomposition.excluded == 0);
  o.check(r.a > r.threshold_a);
  o.note("reversibility " + fmt("%.1e", r.lens_reversibility) + ", symmetry " +
         fmt("%.1e", r.sigma_eps_symmetry) + ", max defect " + fmt("%.1e", defect) +
         ", decomposition " + fmt("%.1e", r.decomposition.residual) + " excluded " +
         std::to_string(r.decomposition.excluded) + " (a = 25 > a* = " + fmt("%.2f", r.threshold_a) +
         ")");
  return o;
}

// 11. Action oscillation at T and 2T.
Outcome criterion_action(unsigned threads) {
  Outcome o;
  const auto r = action_range(section_samples(100), 1e-2, 1e4, section_map(), threads);
  o.detail = {{"orbits", r.diameter_T.size()}, {"eps", r.eps},   {"T", r.T},
              {"max_T", r.max_T},              {"max_2T", r.max_2T}, {"ratio", r.ratio}};
  o.check(r.ratio <= 1.1);
  o.note("max diameter " + fmt("%.4f", r.max_T) + " at T, " + fmt("%.4f", r.max_2T) +
         " at 2T, ratio " + fmt("%.4f", r.ratio) + " (<= 1.1)");
  return o;
}

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.flow.T = 2.0;
  c.figure.n = 101;
  c.ensemble.n_orbits = 6;
  c.ensemble.T = 100.0;
  c.returnmap.n = 48;
  c.returnmap.action_orbits = 4;
  c.returnmap.action_T = 20.0;
  c.lens.n = 40;
  return c;
}

std::vector<Artifact> run_all_stages(const ExperimentConfig& c) {
  std::vector<Artifact> files;
  auto add = [&](const StageOutput& s) {
    for (const auto& f : s.files) files.push_back(f);
  };
  add(stage_build_profile(c));
  const StageOutput metric = stage_solve_metric(c);
  add(metric);
  add(stage_integrate(c));
  add(stage_jacobi(c));
  add(stage_lyapunov(c));
  add(stage_returnmap(c));
  add(stage_lens_check(c, metric.find("metric.json")->content));
  add(stage_figure_rho(c));
  add(stage_figure_riccati(c));
  return files;
}

// 12. Byte-identical reports for identical config and seed, across thread counts.
Outcome criterion_reproducibility() {
  Outcome o;
  ExperimentConfig c = small_config();
  c.threads = 1;
  const auto a = run_all_stages(c);
  const auto b = run_all_stages(c);
  c.threads = 3;
  const auto t = run_all_stages(c);
  std::size_t identical = 0, envelopes = 0, json_files = 0;
  Json files = Json::array();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool same = i < b.size() && i < t.size() && a[i].content == b[i].content &&
                      a[i].content == t[i].content && a[i].name == t[i].name;
    identical += same;
    files.push_back(Json{{"name", a[i].name}, {"identical", same}, {"blob", blob_hash(a[i].content)}});
    if (a[i].name.size() > 5 && a[i].name.substr(a[i].name.size() - 5) == ".json") {
      ++json_files;
      const Json j = Json::parse(a[i].content);
      const bool ok = j.contains("schema") && j.contains("config") &&
                      j["inputs"]["config"] == blob_hash(j["config"].dump());
      envelopes += ok;
    }
  }
  o.detail = {{"files", std::move(files)}, {"json_envelopes", envelopes}};
  o.check(a.size() == b.size() && a.size() == t.size() && identical == a.size());
  o.check(envelopes == json_files);
  o.note(std::to_string(identical) + "/" + std::to_string(a.size()) +
         " artifacts byte-identical over two runs and threads 1 vs 3; " + std::to_string(envelopes) +
         "/" + std::to_string(json_files) + " reports carry schema, config and hash");
  return o;
}

struct CriterionDef {
  int id;
  const char* title;
  double limit;
  std::function<Outcome(unsigned)> run;
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  const unsigned threads = worker_count(options.threads);
  const std::vector<CriterionDef> defs = {
      {1, "profile identity", 1.0, [](unsigned) { return criterion_profile_identity(); }},
      {2, "critical parallels", 0.0, [](unsigned) { return criterion_critical_parallels(); }},
      {3, "radius solver and conformal factor", 0.0,
       [](unsigned) { return criterion_conformal_solver(); }},
      {4, "r2 bound and monotonicity", 10.0, [](unsigned) { return criterion_r2_bound(); }},
      {5, "curvature cross-check and DBG certificate", 0.0,
       [](unsigned) { return criterion_curvature(); }},
      {6, "integrator drift and closed forms", 60.0,
       [](unsigned) { return criterion_integrator(); }},
      {7, "cone mechanism", 300.0, criterion_cones},
      {8, "Lyapunov separation", 1800.0, criterion_lyapunov},
      {9, "return map closeness", 0.0, criterion_closeness},
      {10, "lens suite", 0.0, criterion_lens},
      {11, "action oscillation", 0.0, criterion_action},
      {12, "reproducibility", 0.0, [](unsigned) { return criterion_reproducibility(); }},
  };
  std::vector<CriterionResult> results;
  for (const auto& d : defs) {
    if (!options.only.empty() &&
        std::find(options.only.begin(), options.only.end(), d.id) == options.only.end()) {
      continue;
    }
    CriterionResult r;
    r.id = d.id;
    r.title = d.title;
    r.runtime_limit = d.limit;
    const auto t0 = Clock::now();
    try {
      Outcome o = d.run(threads);
      r.checks_pass = o.pass;
      r.summary = std::move(o.summary);
      r.detail = std::move(o.detail);
    } catch (const Error& e) {
      r.checks_pass = false;
      r.summary = std::string("error ") + e.code() + ": " + e.what();
      r.detail = error_record(e.code(), e.what());
    } catch (const std::exception& e) {
      r.checks_pass = false;
      r.summary = std::string("error: ") + e.what();
      r.detail = error_record("Exception", e.what());
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    r.pass = r.checks_pass && (r.runtime_limit == 0.0 || r.seconds < r.runtime_limit);
    if (on_result) on_result(r);
    results.push_back(std::move(r));
  }
  return results;
}

std::string format_line(const CriterionResult& r) {
  std::string s = r.pass ? "[PASS] " : "[FAIL] ";
  s += std::to_string(r.id) + " " + r.title + ": " + r.summary;
  s += " | " + fmt("%.1f s", r.seconds);
  if (r.runtime_limit > 0.0) {
    s += " (limit " + fmt("%g s", r.runtime_limit) + (r.seconds < r.runtime_limit ? ")" : ", EXCEEDED)");
  }
  return s;
}

Json acceptance_json(const std::vector<CriterionResult>& results) {
  Json list = Json::array();
  bool all = !results.empty();
  for (const auto& r : results) {
    all = all && r.pass;
    Json e{{"id", r.id}, {"title", r.title}, {"pass", r.pass}, {"checks_pass", r.checks_pass}};
    if (r.runtime_limit > 0.0) e["runtime_limit_s"] = r.runtime_limit;
    e["detail"] = r.detail;
    list.push_back(std::move(e));
  }
  return Json{{"schema", "dbglab.acceptance/1"}, {"all_pass", all}, {"criteria", std::move(list)}};
}

Json timings_json(const std::vector<CriterionResult>& results) {
  Json list = Json::array();
  for (const auto& r : results) {
    Json e{{"id", r.id}, {"seconds", r.seconds}};
    if (r.runtime_limit > 0.0) e["limit_s"] = r.runtime_limit;
    list.push_back(std::move(e));
  }
  return Json{{"schema", "dbglab.timings/1"}, {"criteria", std::move(list)}};
}

}  // namespace dbg
