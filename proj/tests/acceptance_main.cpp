// Runs the acceptance criteria; optional arguments select criterion ids.
#include <cstdio>
#include <cstdlib>
#include <string>

#include "dbg/acceptance.hpp"
#include "dbg/io.hpp"

int main(int argc, char** argv) {
  dbg::AcceptanceOptions options;
  for (int i = 1; i < argc; ++i) options.only.push_back(std::atoi(argv[i]));
  const auto results = dbg::run_acceptance(options, [](const dbg::CriterionResult& r) {
    std::printf("%s\n", dbg::format_line(r).c_str());
    std::fflush(stdout);
  });
  dbg::ExperimentConfig config;
  const auto dir = dbg::output_dir(config);
  dbg::write_text(dir / "acceptance.json", dbg::dump(dbg::acceptance_json(results)));
  dbg::write_text(dir / "acceptance_timings.json", dbg::dump(dbg::timings_json(results)));
  int failed = 0;
  for (const auto& r : results) failed += !r.pass;
  std::printf("%d/%zu criteria passed\n", static_cast<int>(results.size()) - failed, results.size());
  return failed == 0 ? 0 : 1;
}
