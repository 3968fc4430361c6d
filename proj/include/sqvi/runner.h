#ifndef SQVI_RUNNER_H_
#define SQVI_RUNNER_H_

#include <sqvi/problem.h>
#include <sqvi/solver.h>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace sqvi {

inline constexpr const char* kLibraryVersion = "0.1.0";

// A batch run: problem selector and parameters, solver settings, replicate
// count and output location. See README for keys and defaults.
struct RunConfig {
  std::string problem = "translated_box";
  nlohmann::json problem_params = nlohmann::json::object();  // normalized
  std::optional<std::string> preset;
  SolverConfig solver;
  int replicates = 1;
  int threads = 1;
  std::string out_dir = "out";
  std::vector<double> epsilons = {1e-1, 1e-2, 1e-3, 1e-4, 1e-6};
  // Iteration window for the fitted rates; fit_hi < 0 means the last row.
  int fit_lo = 0;
  int fit_hi = -1;

  // Admissibility failures become warnings; on by default for presets.
  bool bypass_validation = false;
  std::vector<std::string> warnings;
  // Relative dataset paths resolve against this directory.
  std::filesystem::path base_dir;
};

// Parses a JSON config, or a manifest written by RunExperiment (its embedded
// config is used). Throws ConfigError naming the key, or UnknownKey for
// unrecognized keys when strict; otherwise unknown keys become warnings.
RunConfig ParseConfig(const std::string& text, bool strict = false);
RunConfig ParseConfigFile(const std::string& path, bool strict = false);

// Every field written out explicitly; ParseConfig(ToJson(c).dump()) == c.
nlohmann::json ConfigToJson(const RunConfig& config);

ProblemInstance BuildProblem(const RunConfig& config);

// Admissibility against the instance's declared constants. Throws
// ConfigError (e.g. "rho must exceed 1-q") unless the config bypasses
// validation, in which case problems are appended to the warnings.
DerivedParameters ValidateRun(const RunConfig& config,
                              const ProblemInstance& problem);

// Replicate 0 uses the configured seed; replicate r > 0 a derived one.
std::uint64_t ReplicateSeed(std::uint64_t seed, int replicate);

std::string TraceCsv(const IterationTrace& trace);
// Elementwise mean over the rows present in every replicate.
std::string MeanCsv(const std::vector<IterationTrace>& traces);

struct ExperimentResult {
  std::vector<IterationTrace> traces;
  DerivedParameters derived;
  nlohmann::json manifest;
  nlohmann::json summary;
  std::vector<std::filesystem::path> files;
};

// Builds, validates, runs every replicate and writes trace_<r>.csv,
// mean.csv, manifest.json and summary.json under `out_dir` (created if
// needed). Each replicate trace is written as soon as it finishes.
ExperimentResult RunExperiment(const RunConfig& config,
                               const std::filesystem::path& out_dir);

}  // namespace sqvi

#endif  // SQVI_RUNNER_H_
