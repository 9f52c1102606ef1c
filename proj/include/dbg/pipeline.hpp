#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dbg/io.hpp"

namespace dbg {

/// One output file, named relative to the output directory.
struct Artifact {
  std::string name;
  std::string content;
};

/// Artifacts of one stage, in a fixed order.
struct StageOutput {
  std::vector<Artifact> files;
  const Artifact* find(const std::string& name) const;
};

std::shared_ptr<const RadialMetric> metric_for(const ExperimentConfig& c, double a);

/// profile.json, profile.csv (l, rho, d1, d2, d3, K).
StageOutput stage_build_profile(const ExperimentConfig& c);
/// metric.json (radii, DBG certificate, shifted certificates), metric.csv (r, l, g, G, K).
StageOutput stage_solve_metric(const ExperimentConfig& c);
/// integrate.json, trajectory.csv (t, x, y, px, py, H, clairaut).
StageOutput stage_integrate(const ExperimentConfig& c);
/// jacobi.json, jacobi.csv (t, x, y, r, K, JS, JSp, JC, JCp).
StageOutput stage_jacobi(const ExperimentConfig& c);
/// lyapunov.json, lyapunov.csv (index, chi, chi_2T, cap_entries).
StageOutput stage_lyapunov(const ExperimentConfig& c);
/// returnmap.json at a = perturbation.section_a.
StageOutput stage_returnmap(const ExperimentConfig& c);
/// lens.json. `metric_json` is the text of a metric.json from solve-metric whose
/// cap group replaces the section cap; without it a = perturbation.section_a.
StageOutput stage_lens_check(const ExperimentConfig& c,
                             const std::optional<std::string>& metric_json = std::nullopt);
/// figure_rho.json, rho.csv (l, rho, drho, K), rho_marks.csv (l, rho, drho) at
/// 1/sqrt(10a), 1/sqrt(5a), 1/(2 sqrt a) in that order.
StageOutput stage_figure_rho(const ExperimentConfig& c);
/// figure_riccati.json, riccati.csv (t, u_S, u_C, u) on the deep chord entering at
/// jacobi.theta; u starts from u = jacobi.u_entry at the entry.
StageOutput stage_figure_riccati(const ExperimentConfig& c);

/// Writes every artifact under dir and returns the written paths.
std::vector<std::filesystem::path> write_outputs(const std::filesystem::path& dir,
                                                 const StageOutput& out);

}  // namespace dbg
