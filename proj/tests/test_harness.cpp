#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kamred/harness.hpp"

using namespace kamred;

TEST_CASE("threshold values and branches") {
  const Threshold t2 = threshold(2.0);
  CHECK(t2.value == doctest::Approx((std::sqrt(13.0) - 1.0) / 2.0).epsilon(1e-14));
  CHECK(t2.value == doctest::Approx(1.30278).epsilon(1e-5));
  CHECK(t2.branch == 2);
  const Threshold t12 = threshold(1.2);
  CHECK(t12.value == doctest::Approx(1.2 - 2.0 / 3.0).epsilon(1e-14));
  CHECK(t12.branch == 1);
  CHECK_THROWS_AS(threshold(1.0), Error);
  CHECK_THROWS_AS(threshold(0.5), Error);
}

TEST_CASE("threshold is continuous at 4/3 and bounded below by ell - 3/4") {
  const double e = 4.0 / 3.0;
  const double first = e - 2.0 / 3.0;
  const double second = 0.5 * (std::sqrt(4.0 * e * e - 2.0 * e + 1.0) - 1.0);
  CHECK(std::abs(first - second) < 1e-12);
  CHECK(std::abs(threshold(e).value - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(threshold(std::nextafter(e, 0.0)).value - threshold(e).value) < 1e-12);
  for (double ell = 4.0 / 3.0; ell <= 20.0; ell += 0.01) {
    const Threshold t = threshold(ell);
    CHECK(t.value >= ell - 0.75);
    // the switch picks the smaller expression
    CHECK(t.value <= ell - 2.0 / 3.0 + 1e-12);
  }
  for (double ell = 1.01; ell < 4.0 / 3.0; ell += 0.01) {
    CHECK(threshold(ell).value <= 0.5 * (std::sqrt(4.0 * ell * ell - 2.0 * ell + 1.0) - 1.0));
  }
}

TEST_CASE("config validation at load") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.perturbation.mu = 1.4;
  CHECK_THROWS_AS(c.validate(), Error);
  c.perturbation.mu = 1.30;
  CHECK_NOTHROW(c.validate());

  CHECK_THROWS_AS(parse_config("{\"N\": 10}"), Error);  // no schema_version
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 99}"), Error);
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 1, \"bogus\": 2}"), Error);
  CHECK_THROWS_AS(parse_config("{\"schema_version\": 1, \"N\": 60, \"J\": 50}"), Error);
  CHECK_THROWS_AS(parse_config("not json"), Error);
  try {
    parse_config("{\"schema_version\": 1, \"perturbation\": {\"mu\": 1.4, \"eps\": 0.001, "
                 "\"terms\": [{\"kx\": [1], \"l\": [1]}]}}");
    FAIL("accepted mu above the threshold");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Config);
  }
}

TEST_CASE("config round trip is byte identical") {
  ExperimentConfig c;
  c.N = 12;
  c.J = 20;
  c.perturbation.eps = 2.5e-4;
  c.schedule.stop_tol = 1e-9;
  c.measure.enabled = true;
  c.dynamics.x0_modes = {1, 3};
  c.seed = 7;
  c.auto_grid = false;
  c.grid = Grid{7.5, 3001};
  const std::string a = serialize_config(c);
  const std::string b = serialize_config(parse_config(a));
  CHECK(a == b);
  const ExperimentConfig d = parse_config(a);
  CHECK(d.N == 12);
  CHECK(d.grid.n_pts == 3001);
  CHECK(d.dynamics.x0_modes == std::vector<int>{1, 3});
  CHECK(d.perturbation.terms.size() == 1);

  // a hand-written minimal file picks up defaults
  const ExperimentConfig m = parse_config("{\"schema_version\": 1}");
  CHECK(m.N == 40);
  CHECK(serialize_config(m) == serialize_config(ExperimentConfig{}));
}

namespace {

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.N = 10;
  c.J = 14;
  c.K_phi = 4;
  c.schedule.K_screen = 10;
  c.schedule.l_max = 4;
  c.measure.enabled = true;
  c.measure.per_axis = 201;
  c.measure.K_max = 10;
  c.dynamics.enabled = true;
  c.dynamics.periods = 5.0;
  c.dynamics.samples = 20;
  return c;
}

}  // namespace

TEST_CASE("zero perturbation gives the identity") {
  ExperimentConfig c = small_config();
  c.perturbation.eps = 0.0;
  const ExperimentReport r = run(c);
  const auto& k = r.json.at("kam");
  CHECK(k.at("stop_reason") == "zero-perturbation");
  CHECK(k.at("U_deviation").get<double>() == 0.0);
  CHECK(k.at("reducibility_residual").get<double>() == 0.0);
  CHECK(r.json.at("problem").at("norm_beta").get<double>() == 0.0);
  CHECK(r.json.at("dynamics").at("max_deviation").get<double>() < 1e-12);
}

TEST_CASE("run is deterministic and writes its files") {
  ExperimentConfig c = small_config();
  const auto dir = std::filesystem::temp_directory_path() / "kamred_harness_test";
  std::filesystem::remove_all(dir);
  c.output_dir = dir.string();
  const ExperimentReport a = run(c);
  const ExperimentReport b = run(c);
  CHECK(dump_report(a.json) == dump_report(b.json));
  CHECK(a.levels_csv == b.levels_csv);
  CHECK(a.flow_csv == b.flow_csv);

  std::ifstream in(dir / "report.json");
  std::stringstream ss;
  ss << in.rdbuf();
  CHECK(ss.str() == dump_report(a.json));
  for (const char* f : {"eigenvalues.csv", "levels.csv", "measure.csv", "flow.csv"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  CHECK(a.levels_csv.rfind("l,eps_l,norm_Pl,s_l", 0) == 0);
  CHECK(a.measure_csv.rfind("omega1,accepted\n", 0) == 0);
  const auto& k = a.json.at("kam");
  CHECK(k.at("levels").size() >= 1);
  CHECK(k.at("reducibility_residual").get<double>() < 1e-6);
  CHECK(a.json.at("threshold").at("branch") == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("stage errors carry the stage name") {
  ExperimentConfig c = small_config();
  c.perturbation.terms[0].x_sin = false;
  try {
    run(c);
    FAIL("even perturbation accepted");
  } catch (const StageError& e) {
    CHECK(e.stage() == "assembly");
    CHECK(e.code() == ErrorCode::A3Violation);
    const auto j = error_json(e);
    CHECK(j.at("error") == "a3-violation");
    CHECK(j.at("stage") == "assembly");
  }
  const auto j = error_json(Error(ErrorCode::Io, "x"));
  CHECK(j.at("error") == "io");
  CHECK(!j.contains("stage"));
}
