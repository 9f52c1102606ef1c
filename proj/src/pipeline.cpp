#include "dbg/pipeline.hpp"

#include <cmath>

#include "dbg/error.hpp"

namespace dbg {

namespace {

std::shared_ptr<const Profile> profile_for(const ExperimentConfig& c, double a) {
  CapParams p = c.cap;
  p.a = a;
  return std::make_shared<const Profile>(build_profile(p));
}

HamiltonianSpec flow_spec(const ExperimentConfig& c, const std::shared_ptr<const RadialMetric>& m) {
  return {hamiltonian_kind_from_string(c.flow.hamiltonian), m, c.flow.eps, 1.0};
}

SampleSpec ensemble_spec(const ExperimentConfig& c, const std::shared_ptr<const RadialMetric>& m) {
  SampleSpec s;
  s.n_orbits = c.ensemble.n_orbits;
  s.T = c.ensemble.T;
  s.renorm_dt = c.ensemble.renorm_dt;
  s.seed = c.ensemble.seed;
  s.h = c.ensemble.h;
  s.scheme = scheme_from_string(c.flow.scheme);
  s.hamiltonian = {HamiltonianKind::ConformalKinetic, m, 0.0, 1.0};
  s.threads = c.threads;
  return s;
}

PerturbedMapOptions map_options(const ExperimentConfig& c,
                                const std::shared_ptr<const RadialMetric>& m) {
  PerturbedMapOptions o;
  o.metric = m;
  o.h = c.perturbation.map_h;
  o.scheme = scheme_from_string(c.flow.scheme);
  return o;
}

Artifact report(const std::string& file, const std::string& kind, const ExperimentConfig& c,
                Json result, const std::vector<std::pair<std::string, std::string>>& inputs = {}) {
  return {file, dump(make_report(kind, c, std::move(result), inputs))};
}

std::vector<double> zeros_after(const std::vector<TransverseState>& trace, double t0) {
  std::vector<double> out;
  for (double t : riccati_events(trace)) {
    if (t > t0) out.push_back(t);
  }
  return out;
}

}  // namespace

const Artifact* StageOutput::find(const std::string& name) const {
  for (const auto& f : files) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::shared_ptr<const RadialMetric> metric_for(const ExperimentConfig& c, double a) {
  return std::make_shared<const RadialMetric>(build_metric(profile_for(c, a), c.delta));
}

StageOutput stage_build_profile(const ExperimentConfig& c) {
  const auto p = profile_for(c, c.cap.a);
  CsvTable csv({"l", "rho", "d1", "d2", "d3", "K"});
  const std::size_t n = std::max<std::size_t>(c.figure.n, 2);
  const double l_max = 1.25 * p->l2();
  for (std::size_t i = 0; i < n; ++i) {
    const double l = l_max * static_cast<double>(i) / static_cast<double>(n - 1);
    const ProfileJet j = p->jet(l);
    csv.row({l, j.rho, j.d1, j.d2, j.d3, curvature_of_profile(*p, l)});
  }
  Json result{{"profile", to_json(*p)}, {"verification", to_json(verify_profile(*p))}};
  return {{report("profile.json", "profile", c, std::move(result)), {"profile.csv", csv.str()}}};
}

StageOutput stage_solve_metric(const ExperimentConfig& c) {
  const auto m = metric_for(c, c.cap.a);
  Json result{{"metric", to_json(*m)}, {"certificate", to_json(dbg_certificate(*m))}};
  if (!m->is_flat()) {
    const double delta0 = 1e-3 * (1.0 - m->g_inf() * m->g_inf());
    result["delta0"] = delta0;
    result["largest_certified_shift"] = largest_certified_shift(m->with_delta(0.0), delta0);
  }
  CsvTable csv({"r", "l", "g", "G", "K"});
  const std::size_t n = std::max<std::size_t>(c.figure.n, 2);
  const double r_max = std::min(1.0, 1.25 * m->r2());
  for (std::size_t i = 0; i < n; ++i) {
    const double r = r_max * static_cast<double>(i) / static_cast<double>(n - 1);
    csv.row({r, m->l_of_r(r), m->g(r), m->factor_u(r * r), m->curvature_u(r * r)});
  }
  return {{report("metric.json", "metric", c, std::move(result)), {"metric.csv", csv.str()}}};
}

StageOutput stage_integrate(const ExperimentConfig& c) {
  const auto m = metric_for(c, c.cap.a);
  const HamiltonianSpec spec = flow_spec(c, m);
  CotangentState<2> s;
  if (spec.kind == HamiltonianKind::ConformalKinetic) {
    s = unit_state(*m, c.flow.q, c.flow.angle);
  } else {
    s.q = c.flow.q;
    s.p = {c.flow.speed * std::cos(c.flow.angle), c.flow.speed * std::sin(c.flow.angle)};
  }
  IntegrateOptions opt;
  opt.scheme = scheme_from_string(c.flow.scheme);
  opt.sample_every = c.flow.sample_every;
  const auto tr = integrate<2>(spec, s, c.flow.T, c.flow.h, opt);

  CsvTable csv({"t", "x", "y", "px", "py", "H", "clairaut"});
  for (const auto& x : tr.samples) {
    csv.row({x.t, x.state.q[0], x.state.q[1], x.state.p[0], x.state.p[1], x.H, x.clairaut});
  }
  Json events = Json::array();
  for (const auto& e : tr.events) {
    events.push_back(Json{{"t", e.t}, {"kind", to_string(e.kind)},
                          {"q", {e.state.q[0], e.state.q[1]}}});
  }
  Json result{{"H0", tr.samples.front().H},
              {"max_energy_drift", tr.max_energy_drift},
              {"max_clairaut_drift", tr.max_clairaut_drift},
              {"steps", tr.steps},
              {"final_state",
               {{"q", {tr.final_state.q[0], tr.final_state.q[1]}},
                {"p", {tr.final_state.p[0], tr.final_state.p[1]}}}},
              {"events", std::move(events)}};
  return {{report("integrate.json", "integrate", c, std::move(result)),
           {"trajectory.csv", csv.str()}}};
}

StageOutput stage_jacobi(const ExperimentConfig& c) {
  const auto m = metric_for(c, c.cap.a);
  ChordOptions co;
  co.h = c.jacobi.h;
  co.scheme = scheme_from_string(c.flow.scheme);
  const CapChord ch = chord_from_entry_angle(m, c.jacobi.theta, co);
  Json result{{"chord", to_json(ch)}};
  result["check_A"] = to_json(check_A(ch));
  const auto uc = propagate(ch, {0.0, 1.0, 0.0});
  const auto zeros = zeros_after(uc, 0.0);
  Json b{{"zeros", zeros}};
  b["holds"] = !zeros.empty() && ch.has_T2 && zeros.front() < ch.T2;
  result["check_B"] = std::move(b);
  result["wronskian_drift"] = wronskian_drift(ch);
  result["u_entry"] = c.jacobi.u_entry;
  result["u_exit"] = cone_transit(ch, c.jacobi.u_entry);
  result["strict_advance"] =
      to_json(strict_advance(m, unit_state(*m, c.flow.q, c.flow.angle), c.jacobi.u_entry));

  CsvTable csv({"t", "x", "y", "r", "K", "JS", "JSp", "JC", "JCp"});
  for (const auto& s : ch.samples) csv.row({s.t, s.x, s.y, s.r, s.K, s.JS, s.JSp, s.JC, s.JCp});
  return {{report("jacobi.json", "jacobi", c, std::move(result)), {"jacobi.csv", csv.str()}}};
}

StageOutput stage_lyapunov(const ExperimentConfig& c) {
  const auto m = metric_for(c, c.cap.a);
  EnsembleOptions eo;
  eo.extend_flagged = c.ensemble.extend_flagged;
  eo.baseline = c.ensemble.baseline;
  const LyapunovReport rep = run_ensemble(ensemble_spec(c, m), eo);
  Json result = to_json(rep);
  result["metric"] = to_json(*m);
  result["recurrence_mean_entries"] = recurrence_stats(rep.per_orbit).mean_entries;
  CsvTable csv({"index", "chi", "chi_2T", "cap_entries"});
  for (const auto& o : rep.per_orbit) {
    csv.row({static_cast<double>(o.index), o.chi, o.chi_2T, static_cast<double>(o.cap_entries)});
  }
  return {{report("lyapunov.json", "lyapunov", c, std::move(result)),
           {"lyapunov.csv", csv.str()}}};
}

StageOutput stage_returnmap(const ExperimentConfig& c) {
  const auto m = metric_for(c, c.perturbation.section_a);
  const PerturbedMapOptions mo = map_options(c, m);
  ClosenessOptions co;
  co.n = c.returnmap.n;
  co.m = c.returnmap.m;
  co.fd_step = c.returnmap.fd_step;
  co.max_momentum2 = c.returnmap.max_momentum2;
  co.threads = c.threads;
  Json result{{"metric", to_json(*m)}};
  result["closeness"] = to_json(closeness_scan(c.perturbation.eps_grid, mo, co));
  if (c.returnmap.action_orbits > 0) {
    const auto starts = section_samples(c.returnmap.action_orbits, c.returnmap.max_momentum2);
    result["action_range"] = to_json(
        action_range(starts, c.perturbation.eps, c.returnmap.action_T, mo, c.threads));
  }
  if (c.returnmap.levels > 0) {
    ExperimentConfig e = c;
    e.ensemble.n_orbits = c.returnmap.level_orbits;
    e.ensemble.T = c.returnmap.level_T;
    const double delta0 = 1e-3 * (1.0 - m->g_inf() * m->g_inf());
    Json levels = Json::array();
    for (const auto& l :
         energy_window_scan(m, c.perturbation.eps, c.returnmap.levels, delta0, ensemble_spec(e, m))) {
      levels.push_back(to_json(l));
    }
    result["energy_window"] = std::move(levels);
  }
  return {{report("returnmap.json", "returnmap", c, std::move(result))}};
}

StageOutput stage_lens_check(const ExperimentConfig& c, const std::optional<std::string>& metric_json) {
  std::vector<std::pair<std::string, std::string>> inputs;
  ExperimentConfig mc = c;
  double a = c.perturbation.section_a;
  if (metric_json) {
    Json j;
    try {
      j = Json::parse(*metric_json);
    } catch (const nlohmann::json::parse_error& e) {
      throw InvalidArgument(std::string("metric file: ") + e.what());
    }
    if (!j.is_object() || j.value("schema", "") != "dbglab.metric/1" || !j.contains("config")) {
      throw InvalidArgument("metric file is not a dbglab.metric/1 report");
    }
    const ExperimentConfig src = config_from_json(j["config"]);
    mc.cap = src.cap;
    mc.delta = src.delta;
    a = src.cap.a;
    inputs.emplace_back("metric", blob_hash(*metric_json));
  }
  const auto m = metric_for(mc, a);
  SigmaEpsConfig sc;
  sc.metric = m;
  sc.eps = c.perturbation.eps;
  sc.map = map_options(c, m);
  LensSuiteOptions lo;
  lo.n = c.lens.n;
  lo.seed = c.lens.seed;
  lo.threads = c.threads;
  lo.fd_step = c.returnmap.fd_step;
  Json result{{"metric", to_json(*m)}, {"suite", to_json(lens_suite(sc, lo))}};
  return {{report("lens.json", "lens", c, std::move(result), inputs)}};
}

StageOutput stage_figure_rho(const ExperimentConfig& c) {
  const auto p = profile_for(c, c.cap.a);
  const double a = p->a();
  CsvTable csv({"l", "rho", "drho", "K"});
  const std::size_t n = std::max<std::size_t>(c.figure.n, 2);
  const double l_max = 1.25 * p->l2();
  for (std::size_t i = 0; i < n; ++i) {
    const double l = l_max * static_cast<double>(i) / static_cast<double>(n - 1);
    const ProfileJet j = p->jet(l);
    csv.row({l, j.rho, j.d1, curvature_of_profile(*p, l)});
  }
  CsvTable marks({"l", "rho", "drho"});
  Json names = Json::array();
  const std::pair<const char*, double> abscissae[] = {{"1/sqrt(10a)", 1.0 / std::sqrt(10.0 * a)},
                                                      {"1/sqrt(5a)", 1.0 / std::sqrt(5.0 * a)},
                                                      {"1/(2sqrt(a))", 0.5 / std::sqrt(a)}};
  for (const auto& [name, l] : abscissae) {
    const ProfileJet j = p->jet(l);
    marks.row({l, j.rho, j.d1});
    names.push_back(Json{{"mark", name}, {"l", l}, {"rho", j.rho}, {"drho", j.d1}});
  }
  Json result{{"profile", to_json(*p)}, {"marks", std::move(names)}, {"rows", csv.size()}};
  return {{report("figure_rho.json", "figure.rho", c, std::move(result)),
           {"rho.csv", csv.str()},
           {"rho_marks.csv", marks.str()}}};
}

StageOutput stage_figure_riccati(const ExperimentConfig& c) {
  const auto m = metric_for(c, c.cap.a);
  ChordOptions co;
  co.h = c.jacobi.h;
  co.scheme = scheme_from_string(c.flow.scheme);
  const CapChord ch = chord_from_entry_angle(m, c.jacobi.theta, co);
  const auto u = propagate(ch, {-ch.T1_back, 1.0, c.jacobi.u_entry});
  CsvTable csv({"t", "u_S", "u_C", "u"});
  for (std::size_t i = 0; i < ch.samples.size(); ++i) {
    const ChordSample& s = ch.samples[i];
    csv.row({s.t, s.JSp / s.JS, s.JCp / s.JC, u[i].Jp / u[i].J});
  }
  Json result{{"chord", to_json(ch)},
              {"blowups_u_S", riccati_events(propagate(ch, {0.0, 0.0, 1.0}))},
              {"blowups_u_C", riccati_events(propagate(ch, {0.0, 1.0, 0.0}))},
              {"blowups_u", riccati_events(u)},
              {"u_exit", u.back().Jp / u.back().J}};
  return {{report("figure_riccati.json", "figure.riccati", c, std::move(result)),
           {"riccati.csv", csv.str()}}};
}

std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir,
                                                 const StageOutput& out) {
  std::vector<std::filesystem::path> paths;
  for (const auto& f : out.files) {
    paths.push_back(dir / f.name);
    write_text(paths.back(), f.content);
  }
  return paths;
}

}  // namespace dbg
