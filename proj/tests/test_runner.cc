#include <sqvi/problems.h>
#include <sqvi/runner.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "test_util.h"

using namespace sqvi;
namespace fs = std::filesystem;

namespace {

const char* kMinimal = R"({"problem": "translated_box", "solver": "ieg", "eta": 0.1,
  "alpha": 0.5, "b": 0.5, "schedule": "deterministic", "T": 100, "seed": 1})";

std::string Slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

fs::path Scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sqvi_test_" + name);
  fs::remove_all(p);
  return p;
}

std::vector<std::vector<std::string>> ReadCsv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST_CASE("minimal config parses with defaults") {
  const RunConfig c = ParseConfig(kMinimal, true);
  CHECK(c.problem == "translated_box");
  CHECK(c.solver.method == Method::kExtraGradient);
  CHECK(c.solver.eta == 0.1);
  CHECK(c.solver.max_outer == 100);
  CHECK(c.solver.schedule.kind == ScheduleKind::kDeterministic);
  CHECK(c.replicates == 1);
  CHECK_FALSE(c.bypass_validation);
  CHECK(c.warnings.empty());
  CHECK(c.problem_params.at("n").get<int>() == 20);
  const ProblemInstance p = BuildProblem(c);
  CHECK_NOTHROW(ValidateRun(c, p));
}

TEST_CASE("rho below 1 - q is rejected at the rho key") {
  const RunConfig c = ParseConfig(R"({"problem": "translated_box",
    "problem_params": {"n": 1, "shift_slope": 0, "matrix": [[1]], "offset": [0]},
    "solver": "ieg", "eta": 1.0, "alpha": 0.5, "b": 0.5,
    "schedule": "increasing", "rho": 0.3, "T": 10})");
  const ProblemInstance p = BuildProblem(c);
  try {
    ValidateRun(c, p);
    FAIL("expected ConfigError");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConfigError);
    const std::string msg = e.what();
    CHECK(msg.find("key 'rho'") != std::string::npos);
    CHECK(msg.find("rho must exceed 1-q = 0.5") != std::string::npos);
  }
}

TEST_CASE("field-level diagnostics") {
  auto code_and_key = [](const std::string& text, const std::string& key) {
    try {
      ParseConfig(text, true);
      FAIL("expected an error for " << key);
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find(key) != std::string::npos);
      return e.code();
    }
    return ErrorCode::kIoError;
  };
  CHECK(code_and_key(R"({"eta": -1})", "'eta'") == ErrorCode::kConfigError);
  CHECK(code_and_key(R"({"solver": "adam"})", "'solver'") == ErrorCode::kConfigError);
  CHECK(code_and_key(R"({"T": 0})", "'T'") == ErrorCode::kConfigError);
  CHECK(code_and_key(R"({"T": 2.5})", "'T'") == ErrorCode::kConfigError);
  CHECK(code_and_key(R"({"metrics": ["gap"]})", "'metrics'") == ErrorCode::kConfigError);
  CHECK(code_and_key(R"({"problem": "lasso"})", "'problem'") == ErrorCode::kConfigError);
  CHECK(code_and_key(R"({"problem_params": {"n": "x"}})", "problem_params.n") ==
        ErrorCode::kConfigError);
  CHECK(code_and_key(R"({"preset": "table9"})", "'preset'") == ErrorCode::kConfigError);
  CHECK(code_and_key(R"({"etta": 0.1})", "etta") == ErrorCode::kUnknownKey);
  CHECK(code_and_key(R"({"problem_params": {"nn": 3}})", "problem_params.nn") ==
        ErrorCode::kUnknownKey);
  CHECK(code_and_key("{not json", "invalid JSON") == ErrorCode::kConfigError);

  const RunConfig lax = ParseConfig(R"({"etta": 0.1})", false);
  REQUIRE(lax.warnings.size() == 1);
  CHECK(lax.warnings[0].find("etta") != std::string::npos);

  const RunConfig bad_eta = ParseConfig(R"({"eta": 50})");
  const ProblemInstance p = BuildProblem(bad_eta);
  CHECK_THROWS_CODE(ValidateRun(bad_eta, p), ErrorCode::kConfigError);
  const RunConfig bypass = ParseConfig(R"({"eta": 50, "bypass_validation": true})");
  CHECK_FALSE(ValidateRun(bypass, p).warnings.empty());
  const RunConfig bad_x0 = ParseConfig(R"({"x0": [1, 2]})");
  CHECK_THROWS_CODE(ValidateRun(bad_x0, p), ErrorCode::kConfigError);
  const RunConfig bad_metric = ParseConfig(R"({"metrics": ["lower_subopt"]})");
  CHECK_THROWS_CODE(ValidateRun(bad_metric, p), ErrorCode::kConfigError);
}

TEST_CASE("table1 presets") {
  const RunConfig s = ParseConfig(R"({"preset": "table1-synthetic"})", true);
  CHECK(s.problem == "regression_game");
  CHECK(s.solver.eta == 1e-2);
  CHECK(s.solver.alpha == 0.9);
  CHECK(s.solver.b == 1.2);
  CHECK(s.problem_params.at("sigma").get<double>() == 1e-2);
  CHECK(s.problem_params.at("players").get<int>() == 10);
  CHECK(s.problem_params.at("points").get<int>() == 250);
  CHECK(s.problem_params.at("features").get<int>() == 25);
  CHECK(s.solver.schedule.kind == ScheduleKind::kRegressionPreset);
  CHECK(s.bypass_validation);
  CHECK_FALSE(s.warnings.empty());

  const RunConfig t = ParseConfig(
      R"({"preset": "table1-triazines", "problem_params": {"path": "/data/triazines"}})");
  CHECK(t.solver.eta == 5e-2);
  CHECK(t.solver.alpha == 1e-1);
  CHECK(t.solver.b == 1e-1);
  CHECK(t.problem_params.at("sigma").get<double>() == 1.0);
  CHECK(t.problem_params.at("source") == "dataset");
  const RunConfig e = ParseConfig(
      R"({"preset": "table1-eunite2001", "problem_params": {"path": "e.txt"}, "T": 5})");
  CHECK(e.solver.eta == 3e-1);
  CHECK(e.solver.alpha == 5e-1);
  CHECK(e.solver.b == 5e-1);
  CHECK(e.solver.max_outer == 5);
  CHECK(e.problem_params.at("sigma").get<double>() == 1e-1);
  CHECK(e.problem_params.at("players").get<int>() == 4);
  CHECK_THROWS_CODE(ParseConfig(R"({"preset": "table1-eunite2001"})"), ErrorCode::kConfigError);
}

TEST_CASE("dataset paths resolve against the config file") {
  const fs::path dir = Scratch("paths");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "cfg.json");
    f << R"({"preset": "table1-eunite2001", "problem_params": {"path": "data/e.svm"}})";
  }
  const RunConfig c = ParseConfigFile((dir / "cfg.json").string());
  CHECK(fs::path(c.problem_params.at("path").get<std::string>()) ==
        (fs::absolute(dir) / "data" / "e.svm").lexically_normal());
  CHECK_THROWS_CODE(ParseConfigFile((dir / "missing.json").string()), ErrorCode::kIoError);
  fs::remove_all(dir);
}

TEST_CASE("deterministic run writes the fixed CSV schema") {
  const fs::path dir = Scratch("det");
  const RunConfig c = ParseConfig(kMinimal);
  const ExperimentResult r = RunExperiment(c, dir);
  CHECK(r.files.size() == 4);
  for (const char* f : {"trace_0.csv", "mean.csv", "manifest.json", "summary.json"}) {
    CHECK(fs::exists(dir / f));
  }
  const auto rows = ReadCsv(Slurp(dir / "trace_0.csv"));
  REQUIRE(rows.size() == 101);
  CHECK(Slurp(dir / "trace_0.csv").rfind(
            "k,N_k,t_k,cum_samples,cum_inner,dist,residual,lower_subopt,wall_ms\n", 0) == 0);
  double previous = 1e300;
  int increases = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 9);
    CHECK(rows[i][0] == std::to_string(i - 1));
    CHECK(rows[i][1] == "1");
    CHECK(rows[i][7].empty());
    CHECK(rows[i][8].empty());
    const double d = std::stod(rows[i][5]);
    if (d > previous) ++increases;
    previous = d;
  }
  CHECK(increases == 0);
  CHECK(std::stod(rows.back()[5]) < 1e-3 * std::stod(rows[1][5]));
  // 17 significant digits round-trip the stored doubles.
  CHECK(std::stod(rows[5][5]) == *r.traces[0].rows[4].dist);

  CHECK(r.manifest.at("library_version") == kLibraryVersion);
  CHECK(r.manifest.contains("derived"));
  CHECK(r.manifest.at("derived").at("eta_interval").is_array());
  CHECK(r.summary.at("rates").contains("dist"));
  CHECK(r.summary.at("complexity").at("dist").size() == c.epsilons.size());
  fs::remove_all(dir);
}

TEST_CASE("mean CSV is the average of the replicate CSVs") {
  const fs::path dir = Scratch("mean");
  RunConfig c = ParseConfig(R"({"problem_params": {"n": 6, "noise_level": 0.5},
    "schedule": "constant", "batch": 2, "T": 30, "replicates": 10, "threads": 3,
    "eta": 0.1, "metrics": ["dist", "residual"]})");
  const ExperimentResult r = RunExperiment(c, dir);
  std::vector<std::vector<std::vector<std::string>>> reps;
  for (int i = 0; i < 10; ++i) {
    reps.push_back(ReadCsv(Slurp(dir / ("trace_" + std::to_string(i) + ".csv"))));
  }
  const auto mean = ReadCsv(Slurp(dir / "mean.csv"));
  REQUIRE(mean.size() == 31);
  for (std::size_t row = 1; row < mean.size(); ++row) {
    for (int col : {5, 6}) {
      double s = 0.0;
      for (const auto& rep : reps) s += std::stod(rep[row][col]);
      CHECK(std::abs(std::stod(mean[row][col]) - s / 10.0) <= 1e-12);
    }
  }
  // Replicates differ; replicate 0 keeps the configured seed.
  CHECK(reps[0][30][5] != reps[1][30][5]);
  CHECK(ReplicateSeed(1, 0) == 1);
  CHECK(ReplicateSeed(1, 1) != ReplicateSeed(1, 2));
  CHECK(r.manifest.at("replicate_seeds").size() == 10);
  fs::remove_all(dir);
}

TEST_CASE("identical configs give byte-identical traces, threaded or not") {
  const fs::path a = Scratch("rep_a");
  const fs::path b = Scratch("rep_b");
  RunConfig c = ParseConfig(R"({"problem_params": {"n": 6, "noise_level": 0.5},
    "schedule": "constant", "batch": 2, "T": 25, "replicates": 4, "eta": 0.1})");
  RunExperiment(c, a);
  c.threads = 4;
  RunExperiment(c, b);
  for (const char* f : {"trace_0.csv", "trace_3.csv", "mean.csv", "summary.json"}) {
    CHECK(Slurp(a / f) == Slurp(b / f));
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("manifest round trip") {
  const fs::path a = Scratch("man_a");
  const fs::path b = Scratch("man_b");
  const RunConfig c = ParseConfig(R"({"problem": "coupled_sp", "solver": "ig",
    "eta": 0.5, "alpha": 0.5, "schedule": "regression", "batch": 3, "T": 15,
    "problem_params": {"noise_level": 0.2, "audit_triples": 20, "audit_budget": 2000},
    "metrics": ["residual"], "seed": 5, "x0": [-1, -1], "bypass_validation": true})");
  CHECK(c.bypass_validation);
  RunExperiment(c, a);
  const RunConfig back = ParseConfigFile((a / "manifest.json").string(), true);
  CHECK(ConfigToJson(back) == ConfigToJson(c));
  CHECK(back.bypass_validation);
  CHECK(back.solver.x0->isApprox(testing::V({-1, -1})));
  RunExperiment(back, b);
  CHECK(Slurp(a / "trace_0.csv") == Slurp(b / "trace_0.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("regression game through the runner") {
  const fs::path dir = Scratch("rg");
  const RunConfig c = ParseConfig(R"({"preset": "table1-synthetic", "T": 20,
    "problem_params": {"players": 3, "points": 30, "features": 8, "audit_triples": 20}})");
  const ExperimentResult r = RunExperiment(c, dir);
  const auto rows = ReadCsv(Slurp(dir / "trace_0.csv"));
  REQUIRE(rows.size() == 21);
  CHECK_FALSE(rows[1][6].empty());
  CHECK_FALSE(rows[1][7].empty());
  CHECK(rows[1][2] == "1");
  CHECK(r.manifest.at("problem").at("players") == 3);
  CHECK_FALSE(r.manifest.at("warnings").empty());
  fs::remove_all(dir);
}
