// dbglab: command-line front end for the DBG torus experiments.
#include <cstdio>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dbg/acceptance.hpp"
#include "dbg/error.hpp"
#include "dbg/io.hpp"
#include "dbg/pipeline.hpp"

using namespace dbg;

namespace {

/// Command-line values that override the config file when given.
class Overrides {
 public:
  template <class T, class Field>
  void add(CLI::App* app, const std::string& name, const std::string& help, Field field) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = app->add_option(name, *value, help);
    items_.push_back({opt, [value, field](ExperimentConfig& c) { field(c) = *value; }});
  }

  void apply(ExperimentConfig& c) const {
    for (const auto& [opt, set] : items_) {
      if (opt->count() > 0) set(c);
    }
  }

 private:
  std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> items_;
};

void add_cap(Overrides& o, CLI::App* app) {
  o.add<double>(app, "--a", "cap parameter", [](ExperimentConfig& c) -> double& { return c.cap.a; });
}

void add_delta(Overrides& o, CLI::App* app) {
  o.add<double>(app, "--delta", "uniform metric shift",
                [](ExperimentConfig& c) -> double& { return c.delta; });
}

void report_written(const std::vector<std::filesystem::path>& paths) {
  for (const auto& p : paths) std::printf("%s\n", p.string().c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Experiments on a conformally flat torus with a DBG cap"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  unsigned threads = 0;
  std::string out_dir;
  app.add_option("--config", config_path, "JSON config file; flags override its values")
      ->check(CLI::ExistingFile);
  CLI::Option* threads_opt = app.add_option("--threads", threads, "worker cap (0: all cores)");
  CLI::Option* out_opt =
      app.add_option("--out", out_dir, "output directory (default: $DBG_OUT_DIR or .)");

  Overrides ov;

  CLI::App* build_profile = app.add_subcommand("build-profile", "radial profile and its checks");
  add_cap(ov, build_profile);

  CLI::App* solve_metric = app.add_subcommand("solve-metric", "conformal factor and certificate");
  add_cap(ov, solve_metric);
  add_delta(ov, solve_metric);

  CLI::App* integrate_cmd = app.add_subcommand("integrate", "one trajectory of a Hamiltonian flow");
  add_cap(ov, integrate_cmd);
  add_delta(ov, integrate_cmd);
  ov.add<std::string>(integrate_cmd, "--hamiltonian",
                      "Flat | ConformalKinetic | PerturbedKinetic | Relativistic",
                      [](ExperimentConfig& c) -> std::string& { return c.flow.hamiltonian; });
  ov.add<std::string>(integrate_cmd, "--scheme", "gauss6 | gauss4 | midpoint",
                      [](ExperimentConfig& c) -> std::string& { return c.flow.scheme; });
  ov.add<double>(integrate_cmd, "--step", "integration step",
                 [](ExperimentConfig& c) -> double& { return c.flow.h; });
  ov.add<double>(integrate_cmd, "--T", "horizon",
                 [](ExperimentConfig& c) -> double& { return c.flow.T; });
  ov.add<double>(integrate_cmd, "--eps", "perturbation size",
                 [](ExperimentConfig& c) -> double& { return c.flow.eps; });
  ov.add<double>(integrate_cmd, "--x", "start x",
                 [](ExperimentConfig& c) -> double& { return c.flow.q[0]; });
  ov.add<double>(integrate_cmd, "--y", "start y",
                 [](ExperimentConfig& c) -> double& { return c.flow.q[1]; });
  ov.add<double>(integrate_cmd, "--angle", "start direction",
                 [](ExperimentConfig& c) -> double& { return c.flow.angle; });
  ov.add<double>(integrate_cmd, "--speed", "|p| for the kinetic flows",
                 [](ExperimentConfig& c) -> double& { return c.flow.speed; });
  ov.add<long>(integrate_cmd, "--sample-every", "steps between CSV rows",
               [](ExperimentConfig& c) -> long& { return c.flow.sample_every; });

  CLI::App* jacobi = app.add_subcommand("jacobi", "Jacobi fields along one cap chord");
  add_cap(ov, jacobi);
  ov.add<double>(jacobi, "--theta", "entry angle to the inward meridian",
                 [](ExperimentConfig& c) -> double& { return c.jacobi.theta; });
  ov.add<double>(jacobi, "--step", "integration step",
                 [](ExperimentConfig& c) -> double& { return c.jacobi.h; });
  ov.add<double>(jacobi, "--u-entry", "u = J'/J at the entry",
                 [](ExperimentConfig& c) -> double& { return c.jacobi.u_entry; });

  CLI::App* lyapunov = app.add_subcommand("lyapunov", "Lyapunov ensemble with flat baseline");
  add_cap(ov, lyapunov);
  add_delta(ov, lyapunov);
  ov.add<std::size_t>(lyapunov, "--n", "orbits",
                      [](ExperimentConfig& c) -> std::size_t& { return c.ensemble.n_orbits; });
  ov.add<double>(lyapunov, "--T", "horizon",
                 [](ExperimentConfig& c) -> double& { return c.ensemble.T; });
  ov.add<std::uint64_t>(lyapunov, "--seed", "seed",
                        [](ExperimentConfig& c) -> std::uint64_t& { return c.ensemble.seed; });
  ov.add<double>(lyapunov, "--step", "integration step",
                 [](ExperimentConfig& c) -> double& { return c.ensemble.h; });
  ov.add<double>(lyapunov, "--renorm-dt", "renormalization interval",
                 [](ExperimentConfig& c) -> double& { return c.ensemble.renorm_dt; });
  ov.add<bool>(lyapunov, "--baseline", "run the flat baseline",
               [](ExperimentConfig& c) -> bool& { return c.ensemble.baseline; });
  ov.add<bool>(lyapunov, "--extend", "continue flagged orbits to 2T",
               [](ExperimentConfig& c) -> bool& { return c.ensemble.extend_flagged; });

  CLI::App* returnmap = app.add_subcommand("returnmap", "section map closeness and action range");
  ov.add<double>(returnmap, "--a", "cap parameter of the section map",
                 [](ExperimentConfig& c) -> double& { return c.perturbation.section_a; });
  ov.add<double>(returnmap, "--eps", "perturbation for the action range",
                 [](ExperimentConfig& c) -> double& { return c.perturbation.eps; });
  ov.add<std::vector<double>>(
      returnmap, "--eps-grid", "perturbations for the closeness scan",
      [](ExperimentConfig& c) -> std::vector<double>& { return c.perturbation.eps_grid; });
  ov.add<std::size_t>(returnmap, "--n", "closeness samples",
                      [](ExperimentConfig& c) -> std::size_t& { return c.returnmap.n; });
  ov.add<int>(returnmap, "--m", "derivative order (0 or 1)",
              [](ExperimentConfig& c) -> int& { return c.returnmap.m; });
  ov.add<std::size_t>(returnmap, "--action-orbits", "action-range starts (0 skips)",
                      [](ExperimentConfig& c) -> std::size_t& { return c.returnmap.action_orbits; });
  ov.add<double>(returnmap, "--action-T", "action-range horizon",
                 [](ExperimentConfig& c) -> double& { return c.returnmap.action_T; });
  ov.add<int>(returnmap, "--levels", "energy-window levels (0 skips)",
              [](ExperimentConfig& c) -> int& { return c.returnmap.levels; });

  CLI::App* lens = app.add_subcommand("lens-check", "lens maps and the perturbed dual lens map");
  std::string metric_path;
  lens->add_option("--metric", metric_path, "metric.json written by solve-metric")
      ->check(CLI::ExistingFile);
  ov.add<double>(lens, "--a", "cap parameter when no metric file is given",
                 [](ExperimentConfig& c) -> double& { return c.perturbation.section_a; });
  ov.add<double>(lens, "--eps", "perturbation",
                 [](ExperimentConfig& c) -> double& { return c.perturbation.eps; });
  ov.add<std::size_t>(lens, "--n", "samples",
                      [](ExperimentConfig& c) -> std::size_t& { return c.lens.n; });
  ov.add<std::uint64_t>(lens, "--seed", "seed",
                        [](ExperimentConfig& c) -> std::uint64_t& { return c.lens.seed; });

  CLI::App* figure = app.add_subcommand("figure", "plot data");
  figure->require_subcommand(1);
  CLI::App* fig_rho = figure->add_subcommand("rho", "profile with the three marked abscissae");
  add_cap(ov, fig_rho);
  ov.add<std::size_t>(fig_rho, "--n", "rows",
                      [](ExperimentConfig& c) -> std::size_t& { return c.figure.n; });
  CLI::App* fig_riccati = figure->add_subcommand("riccati", "u_S, u_C and u along a deep chord");
  add_cap(ov, fig_riccati);
  ov.add<double>(fig_riccati, "--theta", "entry angle to the inward meridian",
                 [](ExperimentConfig& c) -> double& { return c.jacobi.theta; });
  ov.add<double>(fig_riccati, "--u-entry", "u at the entry",
                 [](ExperimentConfig& c) -> double& { return c.jacobi.u_entry; });

  CLI::App* acceptance = app.add_subcommand("acceptance", "run the acceptance criteria");
  std::vector<int> only;
  acceptance->add_option("--only", only, "criterion ids (default: all)");

  CLI11_PARSE(app, argc, argv);

  ExperimentConfig config;
  std::filesystem::path dir;
  try {
    if (!config_path.empty()) config = load_config(config_path);
    ov.apply(config);
    if (threads_opt->count() > 0) config.threads = threads;
    if (out_opt->count() > 0) config.output_dir = out_dir;
    dir = output_dir(config);

    if (build_profile->parsed()) {
      report_written(write_outputs(dir, stage_build_profile(config)));
    } else if (solve_metric->parsed()) {
      report_written(write_outputs(dir, stage_solve_metric(config)));
    } else if (integrate_cmd->parsed()) {
      report_written(write_outputs(dir, stage_integrate(config)));
    } else if (jacobi->parsed()) {
      report_written(write_outputs(dir, stage_jacobi(config)));
    } else if (lyapunov->parsed()) {
      report_written(write_outputs(dir, stage_lyapunov(config)));
    } else if (returnmap->parsed()) {
      report_written(write_outputs(dir, stage_returnmap(config)));
    } else if (lens->parsed()) {
      std::optional<std::string> metric;
      if (!metric_path.empty()) metric = read_text(metric_path);
      report_written(write_outputs(dir, stage_lens_check(config, metric)));
    } else if (fig_rho->parsed()) {
      report_written(write_outputs(dir, stage_figure_rho(config)));
    } else if (fig_riccati->parsed()) {
      report_written(write_outputs(dir, stage_figure_riccati(config)));
    } else if (acceptance->parsed()) {
      AcceptanceOptions opt;
      opt.threads = config.threads;
      opt.only = only;
      const auto results = run_acceptance(opt, [](const CriterionResult& r) {
        std::printf("%s\n", format_line(r).c_str());
        std::fflush(stdout);
      });
      write_text(dir / "acceptance.json", dump(acceptance_json(results)));
      write_text(dir / "acceptance_timings.json", dump(timings_json(results)));
      for (const auto& r : results) {
        if (!r.pass) return 1;
      }
    }
  } catch (const Error& e) {
    std::cerr << error_record(e.code(), e.what()).dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << error_record("Exception", e.what()).dump() << "\n";
    return 2;
  }
  return 0;
}
