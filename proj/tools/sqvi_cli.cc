#include <sqvi/runner.h>
#include <sqvi/solver.h>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

namespace {

constexpr int kOk = 0;
constexpr int kConfigFailure = 1;
constexpr int kRuntimeFailure = 2;

int ExitCode(const sqvi::Error& e) {
  switch (e.code()) {
    case sqvi::ErrorCode::kConfigError:
    case sqvi::ErrorCode::kUnknownKey:
      return kConfigFailure;
    default:
      return kRuntimeFailure;
  }
}

void PrintWarnings(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

void PrintDerived(const sqvi::DerivedParameters& d) {
  std::printf("beta = %.17g\nq = %.17g\n", d.beta, d.q);
  if (d.interval) {
    std::printf("eta_interval = (%.17g, %.17g)\n", d.interval->lo,
                d.interval->hi);
  } else {
    std::printf("eta_interval = none\n");
  }
}

void PrintSummary(const nlohmann::json& summary) {
  for (const auto& [metric, fit] : summary.at("rates").items()) {
    if (fit.contains("error")) {
      std::printf("%-13s rate: %s\n", metric.c_str(),
                  fit.at("error").get<std::string>().c_str());
      continue;
    }
    std::printf("%-13s slope(log10)/iter = %.6g  factor = %.6g  r2 = %.4f\n",
                metric.c_str(), fit.at("slope_log10").get<double>(),
                fit.at("factor").get<double>(), fit.at("r2").get<double>());
  }
  for (const auto& [metric, value] : summary.at("final").items()) {
    if (metric == "k" || value.is_null()) continue;
    std::printf("final %-13s = %.6g\n", metric.c_str(), value.get<double>());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Inexact extra-gradient and gradient solvers for stochastic QVIs"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  bool summary = false;
  bool strict = false;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("config", config_path, "config or manifest path")->required();
  run->add_option("--out", out_dir, "output directory (overrides out_dir)");
  run->add_flag("--summary", summary, "print fitted rates");
  run->add_flag("--strict", strict, "reject unknown keys");

  auto* validate = app.add_subcommand("validate", "check a config");
  validate->add_option("config", config_path, "config path")->required();
  validate->add_flag("--strict", strict, "reject unknown keys");

  double lipschitz = 0.0, mu = 0.0, gamma = 0.0;
  std::optional<double> eta;
  double alpha = 0.5, b = 0.5;
  std::string method = "ieg";
  auto* derive = app.add_subcommand("derive", "print beta, q and the eta interval");
  derive->add_option("--L", lipschitz, "Lipschitz constant")->required();
  derive->add_option("--mu", mu, "quadratic growth modulus")->required();
  derive->add_option("--gamma", gamma, "contractivity of K")->required();
  derive->add_option("--eta", eta, "step size");
  derive->add_option("--alpha", alpha, "retraction weight")->capture_default_str();
  derive->add_option("--b", b, "extra-gradient weight")->capture_default_str();
  derive->add_option("--method", method, "ieg or ig")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigFailure;
  }

  if (*derive) {
    try {
      const sqvi::EtaInterval iv =
          sqvi::AdmissibleEtaInterval(lipschitz, mu, gamma);
      std::printf("eta_interval = (%.17g, %.17g)\n", iv.lo, iv.hi);
      if (eta) {
        const double beta = sqvi::DeriveBeta(lipschitz, mu, gamma, *eta);
        const double bb = sqvi::ParseMethod(method) == sqvi::Method::kGradient
                              ? 0.0
                              : b;
        std::printf("beta = %.17g\n", beta);
        std::printf("q = %.17g\n", sqvi::ContractionFactor(alpha, beta, bb));
        if (!iv.Contains(*eta)) {
          std::cerr << "warning: eta outside the admissible interval\n";
        }
      }
      return kOk;
    } catch (const sqvi::Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kConfigFailure;
    }
  }

  sqvi::RunConfig config;
  try {
    config = sqvi::ParseConfigFile(config_path, strict);
  } catch (const sqvi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kConfigFailure;
  }
  PrintWarnings(config.warnings);

  try {
    if (*validate) {
      const sqvi::ProblemInstance problem = sqvi::BuildProblem(config);
      const sqvi::DerivedParameters d = sqvi::ValidateRun(config, problem);
      PrintWarnings(d.warnings);
      PrintDerived(d);
      std::printf("config ok\n");
      return kOk;
    }

    const std::string dir = out_dir.empty() ? config.out_dir : out_dir;
    const sqvi::ExperimentResult result = sqvi::RunExperiment(config, dir);
    PrintWarnings(result.derived.warnings);
    for (const auto& t : result.traces) {
      if (t.status == sqvi::RunStatus::kNonfiniteIterate) {
        std::cerr << "error: " << t.message << "\n";
        return kRuntimeFailure;
      }
    }
    if (summary) {
      PrintDerived(result.derived);
      PrintSummary(result.summary);
    }
    std::printf("wrote %zu files to %s\n", result.files.size(), dir.c_str());
    return kOk;
  } catch (const sqvi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return *validate ? kConfigFailure : ExitCode(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}
