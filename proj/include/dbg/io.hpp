#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "dbg/conformal.hpp"
#include "dbg/flow.hpp"
#include "dbg/jacobi.hpp"
#include "dbg/lens.hpp"
#include "dbg/lyapunov.hpp"
#include "dbg/profile.hpp"
#include "dbg/report.hpp"
#include "dbg/returnmap.hpp"

namespace dbg {

/// Insertion-ordered JSON, so dumps follow the order in which fields are written.
using Json = nlohmann::ordered_json;

/// Resolved experiment configuration. JSON groups mirror the nested structs;
/// threads and the output directory are run settings and stay out of the echo.
struct ExperimentConfig {
  CapParams cap;
  double delta = 0.0;

  struct Flow {
    std::string hamiltonian = "ConformalKinetic";
    std::string scheme = "gauss6";
    double h = 1e-3;
    double T = 10.0;
    double eps = 0.0;
    std::array<double, 2> q{0.9, 0.05};
    double angle = 3.0;
    double speed = 1.0;  // |p| for the kinetic flows; ignored for ConformalKinetic
    long sample_every = 10;
  } flow;

  struct Perturbation {
    double eps = 1e-2;
    std::vector<double> eps_grid{1e-1, 1e-2, 1e-3};
    double section_a = 25.0;  // cap parameter of the section-map experiments
    double map_h = 1e-2;
  } perturbation;

  struct Ensemble {
    std::size_t n_orbits = 1000;
    double T = 1e4;
    double renorm_dt = 1.0;
    std::uint64_t seed = 1;
    double h = 1e-2;
    bool extend_flagged = true;
    bool baseline = true;
  } ensemble;

  struct Jacobi {
    double theta = 0.5;  // entry angle to the inward meridian
    double h = 1e-3;
    double u_entry = 0.0;
  } jacobi;

  struct ReturnMap {
    std::size_t n = 10000;
    int m = 1;
    double fd_step = 1e-5;
    double max_momentum2 = 0.8;
    std::size_t action_orbits = 100;
    double action_T = 1e4;
    int levels = 0;  // energy-window levels; 0 skips the scan
    std::size_t level_orbits = 50;
    double level_T = 1e3;
  } returnmap;

  struct Lens {
    std::size_t n = 1000;
    std::uint64_t seed = 1;
  } lens;

  struct Figure {
    std::size_t n = 2001;
  } figure;

  unsigned threads = 0;     // 0: hardware concurrency
  std::string output_dir;   // empty: $DBG_OUT_DIR or the working directory
};

Json to_json(const ExperimentConfig& c);
/// Fields present in j override `base`; unknown keys and wrong types throw InvalidArgument.
ExperimentConfig config_from_json(const Json& j, ExperimentConfig base = {});
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base = {});

/// Lowercase hex SHA-1 of bytes.
std::string sha1_hex(const std::string& bytes);
/// Git blob hash: SHA-1 of "blob <size>\0" followed by the bytes.
std::string blob_hash(const std::string& bytes);

/// Report envelope: schema "dbglab.<kind>/1", config echo, hashes of the config
/// echo and of any extra inputs, then the result.
Json make_report(const std::string& kind, const ExperimentConfig& config, Json result,
                 const std::vector<std::pair<std::string, std::string>>& input_hashes = {});
/// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);

/// Output directory: config value, else $DBG_OUT_DIR, else ".".
std::filesystem::path output_dir(const ExperimentConfig& c);
/// Writes the file, creating parent directories; throws InvalidArgument on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// %.17g, with "nan", "inf" and "-inf" for non-finite values.
std::string format_double(double v);

/// CSV with a fixed header; every row must have one field per column.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void row(const std::vector<double>& values);
  std::string str() const;
  std::size_t size() const { return rows_; }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

Json to_json(const CertificateReport& r);
Json to_json(const Profile& p);
Json to_json(const RadialMetric& m);
Json to_json(const CapChord& c);
Json to_json(const CheckAReport& r);
Json to_json(const AdvanceReport& r);
Json to_json(const PesinEstimate& e);
Json to_json(const LyapunovReport& r);
Json to_json(const MapClosenessReport& r);
Json to_json(const EnergyLevelResult& r);
Json to_json(const ActionRangeReport& r);
Json to_json(const DecompositionReport& r);
Json to_json(const LensSuiteReport& r);

/// Error record for a failed run: {"schema": "dbglab.error/1", "code", "message"}.
Json error_record(const std::string& code, const std::string& message);

}  // namespace dbg
