#include <cmath>
#include <cstdlib>
#include <limits>

#include "dbg/error.hpp"
#include "dbg/io.hpp"
#include "dbg/pipeline.hpp"
#include "doctest.h"

using namespace dbg;

TEST_CASE("hashes against published vectors") {
  CHECK(sha1_hex("abc") == "a9993e364706816aba3e25717850c26c9cd0d89d");
  CHECK(sha1_hex("") == "da39a3ee5e6b4b0d3255bfef95601890afd80709");
  // git hash-object of "hello\n".
  CHECK(blob_hash("hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a");
}

TEST_CASE("doubles are written with 17 significant digits") {
  CHECK(format_double(0.1) == "0.10000000000000001");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-2.5e-300) == "-2.5e-300");
  CHECK(format_double(std::numeric_limits<double>::quiet_NaN()) == "nan");
  CHECK(format_double(-INFINITY) == "-inf");
  for (double v : {M_PI, 1.0 / 3.0, 6.02214076e23, 4.9e-324}) {
    CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
  }
}

TEST_CASE("CSV table keeps its header width") {
  CsvTable t({"a", "b"});
  t.row({1.0, 0.5});
  CHECK(t.str() == "a,b\n1,0.5\n");
  CHECK(t.size() == 1);
  CHECK_THROWS_AS(t.row({1.0}), InvalidArgument);
  CHECK_THROWS_AS(CsvTable({}), InvalidArgument);
}

TEST_CASE("config round trip and overrides") {
  ExperimentConfig c;
  c.cap.a = 25.0;
  c.perturbation.eps_grid = {0.2, 0.02};
  c.ensemble.seed = 7;
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(to_json(back).dump() == to_json(c).dump());

  const Json partial = Json::parse(R"({"flow": {"T": 5, "q": [0.1, 0.2]}, "threads": 2})");
  const ExperimentConfig d = config_from_json(partial, c);
  CHECK(d.flow.T == 5.0);
  CHECK(d.flow.q[1] == 0.2);
  CHECK(d.cap.a == 25.0);
  CHECK(d.threads == 2);
  // threads and the output directory stay out of the echo.
  CHECK(to_json(d).dump() == to_json(config_from_json(partial, c)).dump());
  CHECK_FALSE(to_json(d).contains("threads"));
}

TEST_CASE("config rejects unknown keys and wrong types") {
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"cap": {"b": 1}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"colour": 1})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"cap": {"a": "five"}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"ensemble": {"seed": -1}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"ensemble": {"n_orbits": 1.5}})")),
                  InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse(R"({"flow": {"q": [1, 2, 3]}})")), InvalidArgument);
  CHECK_THROWS_AS(config_from_json(Json::parse("[1, 2]")), InvalidArgument);
}

TEST_CASE("report envelope") {
  ExperimentConfig c;
  const Json r = make_report("unit", c, Json{{"x", 1.5}}, {{"metric", "abc"}});
  CHECK(r["schema"] == "dbglab.unit/1");
  CHECK(r["inputs"]["config"] == blob_hash(to_json(c).dump()));
  CHECK(r["inputs"]["metric"] == "abc");
  CHECK(r["result"]["x"] == 1.5);
  const std::string text = dump(r);
  CHECK(text.back() == '\n');
  CHECK(text.find("\"schema\"") < text.find("\"config\""));
}

TEST_CASE("stages: deterministic artifacts and the marked abscissae") {
  ExperimentConfig c;
  c.figure.n = 41;
  const StageOutput a = stage_figure_rho(c);
  const StageOutput b = stage_figure_rho(c);
  REQUIRE(a.files.size() == 3);
  for (std::size_t i = 0; i < a.files.size(); ++i) CHECK(a.files[i].content == b.files[i].content);
  const Artifact* rho = a.find("rho.csv");
  REQUIRE(rho != nullptr);
  CHECK(rho->content.rfind("l,rho,drho,K\n", 0) == 0);
  const Json fig = Json::parse(a.find("figure_rho.json")->content);
  const auto& marks = fig["result"]["marks"];
  REQUIRE(marks.size() == 3);
  // rho' vanishes at the two critical parallels and is 1 at the end of the collar.
  CHECK(std::abs(marks[0]["drho"].get<double>()) <= 1e-10);
  CHECK(std::abs(marks[1]["drho"].get<double>()) <= 1e-10);
  CHECK(marks[2]["drho"].get<double>() == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(marks[0]["l"].get<double>() == doctest::Approx(1.0 / std::sqrt(50.0)));
}

TEST_CASE("stages: Riccati figure blows up inside the chord") {
  ExperimentConfig c;
  const StageOutput out = stage_figure_riccati(c);
  const Json j = Json::parse(out.find("figure_riccati.json")->content);
  const auto& r = j["result"];
  // u_S blows up at t = 0 only, u_C once on each side.
  REQUIRE(r["blowups_u_S"].size() == 1);
  CHECK(std::abs(r["blowups_u_S"][0].get<double>()) <= 1e-9);
  CHECK(r["blowups_u_C"].size() == 2);
  CHECK(r["u_exit"].get<double>() >= -1e-8);
  CHECK(out.find("riccati.csv")->content.rfind("t,u_S,u_C,u\n", 0) == 0);
}

TEST_CASE("lens check reads a metric report and hashes it") {
  ExperimentConfig c;
  c.cap.a = 25.0;
  c.lens.n = 20;
  c.returnmap.fd_step = 1e-5;
  const StageOutput metric = stage_solve_metric(c);
  const std::string text = metric.find("metric.json")->content;
  const StageOutput lens = stage_lens_check(ExperimentConfig{}, text);
  const Json j = Json::parse(lens.find("lens.json")->content);
  CHECK(j["inputs"]["metric"] == blob_hash(text));
  CHECK(j["result"]["metric"]["a"] == 25.0);
  CHECK_THROWS_AS(stage_lens_check(c, std::string("{}")), InvalidArgument);
  CHECK_THROWS_AS(stage_lens_check(c, std::string("not json")), InvalidArgument);
}
