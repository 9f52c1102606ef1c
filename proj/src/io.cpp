#include "dbg/io.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "dbg/error.hpp"

namespace dbg {

namespace {

/// Reads the members of one JSON object and rejects keys nobody asked for.
class Fields {
 public:
  Fields(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument("config: " + where() + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    used_.insert(key);
    out = convert<T>(*it, where(key));
  }

  /// Nested object, or nullptr when absent.
  const Json* group(const char* key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  std::string where(const std::string& key = {}) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) throw InvalidArgument("config: unknown key " + where(it.key()));
    }
  }

 private:
  template <class T>
  static T convert(const Json& v, const std::string& name) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw InvalidArgument("config: " + name + " must be a boolean");
      return v.get<bool>();
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw InvalidArgument("config: " + name + " must be a string");
      return v.get<std::string>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw InvalidArgument("config: " + name + " must be a number");
      return v.get<T>();
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw InvalidArgument("config: " + name + " must be an integer");
      if (std::is_unsigned_v<T> && !v.is_number_unsigned()) {
        throw InvalidArgument("config: " + name + " must be non-negative");
      }
      return v.get<T>();
    } else {
      // std::vector<double> or std::array<double, N>
      if (!v.is_array()) throw InvalidArgument("config: " + name + " must be an array");
      T out{};
      if constexpr (requires { out.push_back(0.0); }) {
        for (const auto& x : v) out.push_back(convert<double>(x, name));
      } else {
        if (v.size() != out.size()) {
          throw InvalidArgument("config: " + name + " must have " + std::to_string(out.size()) +
                                " entries");
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = convert<double>(v[i], name);
      }
      return out;
    }
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

Json array_of(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

}  // namespace

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["cap"] = {{"a", c.cap.a}, {"quadrature_tol", c.cap.quadrature_tol}, {"grid_n", c.cap.grid_n}};
  j["metric"] = {{"delta", c.delta}};
  j["flow"] = {{"hamiltonian", c.flow.hamiltonian},
               {"scheme", c.flow.scheme},
               {"h", c.flow.h},
               {"T", c.flow.T},
               {"eps", c.flow.eps},
               {"q", {c.flow.q[0], c.flow.q[1]}},
               {"angle", c.flow.angle},
               {"speed", c.flow.speed},
               {"sample_every", c.flow.sample_every}};
  j["perturbation"] = {{"eps", c.perturbation.eps},
                       {"eps_grid", array_of(c.perturbation.eps_grid)},
                       {"section_a", c.perturbation.section_a},
                       {"map_h", c.perturbation.map_h}};
  j["ensemble"] = {{"n_orbits", c.ensemble.n_orbits},
                   {"T", c.ensemble.T},
                   {"renorm_dt", c.ensemble.renorm_dt},
                   {"seed", c.ensemble.seed},
                   {"h", c.ensemble.h},
                   {"extend_flagged", c.ensemble.extend_flagged},
                   {"baseline", c.ensemble.baseline}};
  j["jacobi"] = {{"theta", c.jacobi.theta}, {"h", c.jacobi.h}, {"u_entry", c.jacobi.u_entry}};
  j["returnmap"] = {{"n", c.returnmap.n},
                    {"m", c.returnmap.m},
                    {"fd_step", c.returnmap.fd_step},
                    {"max_momentum2", c.returnmap.max_momentum2},
                    {"action_orbits", c.returnmap.action_orbits},
                    {"action_T", c.returnmap.action_T},
                    {"levels", c.returnmap.levels},
                    {"level_orbits", c.returnmap.level_orbits},
                    {"level_T", c.returnmap.level_T}};
  j["lens"] = {{"n", c.lens.n}, {"seed", c.lens.seed}};
  j["figure"] = {{"n", c.figure.n}};
  return j;
}

ExperimentConfig config_from_json(const Json& j, ExperimentConfig c) {
  Fields root(j, "");
  if (const Json* g = root.group("cap")) {
    Fields f(*g, "cap");
    f.get("a", c.cap.a);
    f.get("quadrature_tol", c.cap.quadrature_tol);
    f.get("grid_n", c.cap.grid_n);
    f.finish();
  }
  if (const Json* g = root.group("metric")) {
    Fields f(*g, "metric");
    f.get("delta", c.delta);
    f.finish();
  }
  if (const Json* g = root.group("flow")) {
    Fields f(*g, "flow");
    f.get("hamiltonian", c.flow.hamiltonian);
    f.get("scheme", c.flow.scheme);
    f.get("h", c.flow.h);
    f.get("T", c.flow.T);
    f.get("eps", c.flow.eps);
    f.get("q", c.flow.q);
    f.get("angle", c.flow.angle);
    f.get("speed", c.flow.speed);
    f.get("sample_every", c.flow.sample_every);
    f.finish();
  }
  if (const Json* g = root.group("perturbation")) {
    Fields f(*g, "perturbation");
    f.get("eps", c.perturbation.eps);
    f.get("eps_grid", c.perturbation.eps_grid);
    f.get("section_a", c.perturbation.section_a);
    f.get("map_h", c.perturbation.map_h);
    f.finish();
  }
  if (const Json* g = root.group("ensemble")) {
    Fields f(*g, "ensemble");
    f.get("n_orbits", c.ensemble.n_orbits);
    f.get("T", c.ensemble.T);
    f.get("renorm_dt", c.ensemble.renorm_dt);
    f.get("seed", c.ensemble.seed);
    f.get("h", c.ensemble.h);
    f.get("extend_flagged", c.ensemble.extend_flagged);
    f.get("baseline", c.ensemble.baseline);
    f.finish();
  }
  if (const Json* g = root.group("jacobi")) {
    Fields f(*g, "jacobi");
    f.get("theta", c.jacobi.theta);
    f.get("h", c.jacobi.h);
    f.get("u_entry", c.jacobi.u_entry);
    f.finish();
  }
  if (const Json* g = root.group("returnmap")) {
    Fields f(*g, "returnmap");
    f.get("n", c.returnmap.n);
    f.get("m", c.returnmap.m);
    f.get("fd_step", c.returnmap.fd_step);
    f.get("max_momentum2", c.returnmap.max_momentum2);
    f.get("action_orbits", c.returnmap.action_orbits);
    f.get("action_T", c.returnmap.action_T);
    f.get("levels", c.returnmap.levels);
    f.get("level_orbits", c.returnmap.level_orbits);
    f.get("level_T", c.returnmap.level_T);
    f.finish();
  }
  if (const Json* g = root.group("lens")) {
    Fields f(*g, "lens");
    f.get("n", c.lens.n);
    f.get("seed", c.lens.seed);
    f.finish();
  }
  if (const Json* g = root.group("figure")) {
    Fields f(*g, "figure");
    f.get("n", c.figure.n);
    f.finish();
  }
  root.get("threads", c.threads);
  root.get("output_dir", c.output_dir);
  root.finish();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  const std::string text = read_text(path);
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InvalidArgument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j, std::move(base));
}

std::string sha1_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha1(), nullptr) != 1) {
    throw InvalidArgument("SHA-1 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

std::string blob_hash(const std::string& bytes) {
  std::string framed = "blob " + std::to_string(bytes.size());
  framed.push_back('\0');
  framed += bytes;
  return sha1_hex(framed);
}

Json make_report(const std::string& kind, const ExperimentConfig& config, Json result,
                 const std::vector<std::pair<std::string, std::string>>& input_hashes) {
  const Json echo = to_json(config);
  Json inputs;
  inputs["config"] = blob_hash(echo.dump());
  for (const auto& [name, hash] : input_hashes) inputs[name] = hash;
  Json j;
  j["schema"] = "dbglab." + kind + "/1";
  j["config"] = echo;
  j["inputs"] = inputs;
  j["result"] = std::move(result);
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

std::filesystem::path output_dir(const ExperimentConfig& c) {
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* env = std::getenv("DBG_OUT_DIR"); env != nullptr && *env != '\0') return env;
  return ".";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
  if (!out) throw InvalidArgument("write failed: " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : columns_(header.size()) {
  if (header.empty()) throw InvalidArgument("CSV header is empty");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i) text_ += ',';
    text_ += header[i];
  }
  text_ += '\n';
}

void CsvTable::row(const std::vector<double>& values) {
  if (values.size() != columns_) throw InvalidArgument("CSV row width does not match the header");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) text_ += ',';
    text_ += format_double(values[i]);
  }
  text_ += '\n';
  ++rows_;
}

std::string CsvTable::str() const { return text_; }

Json to_json(const CertificateReport& r) {
  Json checks = Json::array();
  for (const auto& c : r.checks()) {
    Json e{{"name", c.name}, {"pass", c.pass}, {"residual", c.residual}};
    if (!c.detail.empty()) e["detail"] = c.detail;
    checks.push_back(std::move(e));
  }
  return Json{{"passed", r.passed()}, {"checks", std::move(checks)}};
}

Json to_json(const Profile& p) {
  if (p.is_flat()) return Json{{"flat", true}};
  return Json{{"a", p.a()},
              {"C", p.C()},
              {"l0", p.l0()},
              {"l1", p.l1()},
              {"l2", p.l2()},
              {"K0", curvature_of_profile(p, 0.0)}};
}

Json to_json(const RadialMetric& m) {
  if (m.is_flat()) return Json{{"flat", true}, {"delta", m.delta()}};
  return Json{{"a", m.profile().a()}, {"delta", m.delta()}, {"r0", m.r0()},
              {"r1", m.r1()},         {"r2", m.r2()},       {"g_inf", m.g_inf()}};
}

Json to_json(const CapChord& c) {
  Json j{{"clairaut", c.clairaut}, {"r_min", c.r_min}, {"boundary", c.boundary},
         {"deep", c.deep},         {"T1", c.T1},       {"T1_back", c.T1_back},
         {"has_T2", c.has_T2}};
  if (c.has_T2) {
    j["T2"] = c.T2;
    j["T2_back"] = c.T2_back;
  }
  j["samples"] = c.samples.size();
  return j;
}

Json to_json(const CheckAReport& r) {
  return Json{{"uS_T1", r.uS_T1},         {"uS_mT1", r.uS_mT1},
              {"uS_T2", r.uS_T2},         {"uS_mT2", r.uS_mT2},
              {"extra_zeros", r.extra_zeros}, {"tol", r.tol},
              {"max_residual", r.max_residual()}, {"within_tolerance", r.within_tolerance()}};
}

Json to_json(const AdvanceReport& r) {
  return Json{{"found", r.found},   {"t_first", r.t_first},     {"t_second", r.t_second},
              {"margin", r.margin}, {"expansion", r.expansion}};
}

Json to_json(const PesinEstimate& e) {
  return Json{{"mean", e.mean}, {"std_error", e.std_error}, {"n", e.n}};
}

Json to_json(const LyapunovReport& r) {
  Json j;
  j["hamiltonian"] = to_string(r.spec.hamiltonian.kind);
  j["n_orbits"] = r.spec.n_orbits;
  j["T"] = r.spec.T;
  j["h"] = r.spec.h;
  j["seed"] = r.spec.seed;
  j["threshold"] = r.threshold;
  j["positive"] = r.positive;
  j["positive_fraction"] = r.positive_fraction;
  j["positive_lower95"] = r.positive_lower95;
  j["pesin"] = to_json(r.pesin);
  if (r.has_baseline) {
    j["baseline"] = to_json(r.baseline);
    j["baseline_max_chi"] = r.baseline_max_chi;
  }
  j["extended"] = r.extended;
  j["stable"] = r.stable;
  Json orbits = Json::array();
  for (const auto& o : r.per_orbit) {
    Json e{{"index", o.index}, {"chi", o.chi}};
    if (o.chi_2T >= 0.0) e["chi_2T"] = o.chi_2T;
    e["cap_entries"] = o.cap_entries;
    e["max_energy_drift"] = o.max_energy_drift;
    e["max_clairaut_drift"] = o.max_clairaut_drift;
    orbits.push_back(std::move(e));
  }
  j["per_orbit"] = std::move(orbits);
  return j;
}

Json to_json(const MapClosenessReport& r) {
  Json rows = Json::array();
  for (const auto& row : r.rows) {
    rows.push_back(Json{{"eps", row.eps},
                        {"c0", row.c0},
                        {"c1", row.c1},
                        {"symplectic_defect", row.symplectic_defect},
                        {"outside_cutoff", row.outside_cutoff},
                        {"support_momentum2", row.support_momentum2},
                        {"support_count", row.support_count}});
  }
  return Json{{"n_samples", r.n_samples},
              {"m", r.m},
              {"max_momentum2", r.max_momentum2},
              {"fd_step", r.fd_step},
              {"rows", std::move(rows)},
              {"order_c0", array_of(r.order_c0)},
              {"order_c1", array_of(r.order_c1)}};
}

Json to_json(const EnergyLevelResult& r) {
  return Json{{"level", r.level},
              {"delta", r.delta},
              {"certified", r.certified},
              {"positive_fraction", r.positive_fraction},
              {"positive_lower95", r.positive_lower95},
              {"positive", r.positive}};
}

Json to_json(const ActionRangeReport& r) {
  return Json{{"eps", r.eps},
              {"T", r.T},
              {"max_T", r.max_T},
              {"max_2T", r.max_2T},
              {"ratio", r.ratio},
              {"diameter_T", array_of(r.diameter_T)},
              {"diameter_2T", array_of(r.diameter_2T)}};
}

Json to_json(const DecompositionReport& r) {
  return Json{{"samples", r.samples}, {"excluded", r.excluded}, {"residual", r.residual}};
}

Json to_json(const LensSuiteReport& r) {
  return Json{{"a", r.a},
              {"eps", r.eps},
              {"threshold_a", r.threshold_a},
              {"n", r.n},
              {"lens_reversibility", r.lens_reversibility},
              {"sphere_residual", r.sphere_residual},
              {"sigma_eps_symmetry", r.sigma_eps_symmetry},
              {"sigma_eps_vs_sigma0", r.sigma_eps_vs_sigma0},
              {"defect_sigma0", r.defect_sigma0},
              {"defect_phi1", r.defect_phi1},
              {"defect_phi2", r.defect_phi2},
              {"defect_sigma_eps", r.defect_sigma_eps},
              {"sigma_eps_undefined", r.sigma_eps_undefined},
              {"decomposition", to_json(r.decomposition)}};
}

Json error_record(const std::string& code, const std::string& message) {
  return Json{{"schema", "dbglab.error/1"}, {"code", code}, {"message", message}};
}

}  // namespace dbg
