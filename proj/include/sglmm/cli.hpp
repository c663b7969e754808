#pragma once

#include "sglmm/diagnostics.hpp"
#include "sglmm/io.hpp"
#include "sglmm/model.hpp"
#include "sglmm/sampler.hpp"
#include "sglmm/scenario.hpp"
#include "sglmm/simulate.hpp"

#include <string>
#include <vector>

namespace sglmm::cli {

struct Paths {
  std::string donations;
  std::string districts;
  std::string merges;
  std::string drops;
  std::string covariates;
  std::string adjacency;
  std::string dataset;  ///< empty = <out>/dataset.json
  std::string selections;
  std::string out = "out";
};

struct PrepOptions {
  bool discard_dropped_points = false;
  std::optional<double> floor;
};

struct ModelChoice {
  std::string family = "gamma";
  bool spatial = true;
  int r = 7;
  Hyperparameters hyper;

  ModelSpec resolve(const ArealDataset& data) const;
};

struct ScenarioOptions {
  ScenarioSpec spec;
  bool power = false;
  PowerOptions power_options;
};

struct SimulateOptions {
  int n = 26;
  int J = 7;
  int k = 8;
  std::string graph = "random_planar";
  std::string family = "gamma";
  bool spatial = true;
  int r = 7;
  double sigma2 = 0.05;
  double theta = 4.0;
};

struct StrictOptions {
  DiagnosticThresholds thresholds;
  /// Largest tolerated fraction of |Geweke z| above the threshold.
  double max_geweke_fraction = 0.01;
};

/// Everything a command needs, parsed from one JSON file plus flag
/// overrides. `seed` drives every random stream of a run.
struct RunConfig {
  std::uint64_t seed = 1;
  Paths paths;
  PrepOptions prep;
  ModelChoice model;
  SamplerConfig sampler;
  ScenarioOptions scenario;
  SimulateOptions simulate;
  StrictOptions strict_options;
  bool strict = false;

  std::string dataset_path() const;
  std::string fit_dir(const std::string& model_name) const;
};

json to_json(const RunConfig& c);
RunConfig config_from_json(const json& j);
/// SHA-256 of the canonical JSON dump.
std::string config_digest(const RunConfig& c);

enum ExitCode { Ok = 0, Usage = 1, DataFailure = 2, NumericalFailure = 3, ConvergenceFailure = 4 };

/// Full command-line entry point; returns the process exit code.
int run(const std::vector<std::string>& args);

}  // namespace sglmm::cli
