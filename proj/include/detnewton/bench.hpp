#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "detnewton/config.hpp"
#include "detnewton/problems.hpp"
#include "detnewton/spectral.hpp"

namespace detnewton {
namespace bench {

/// Problem generator description (section [problem] of a config file).
struct ProblemConfig {
  std::string kind = "quadratic_spectrum";
  // quadratic_spectrum
  std::string spectrum = "list";  // sparse | exponential | polynomial | list
  int d = 2;
  DecayModel decay;
  Eigen::VectorXd eigenvalue_list;
  // quadratic_csv
  std::string matrix_csv;
  // data-backed problems
  std::string data = "gaussian";  // gaussian | mixture | csv
  int n = 100;
  int m = 8;
  double eta = 1.0;
  int clusters = 8;
  double separation = 1.0;
  ResponseModel response = ResponseModel::Linear;
  std::string data_csv;
  KernelSpec kernel = KernelSpec::squared_exponential(1.0);
  double lambda = 1e-3;  // ridge / KRR regularization
  double ridge = 0.0;    // logistic ridge
};

/// Deterministic problem construction; all randomness comes from streams
/// derived from `seed`.
Problem build_problem(const ProblemConfig& config, std::uint64_t seed);

/// Sampler description as written in the config; atoms and target sizes
/// are resolved against the concrete problem at run time.
struct SamplerConfig {
  std::string name;
  std::string kind = "dpp";  // dpp | leverage | tau_nice | tau_list |
                             // explicit | full
  std::optional<double> alpha;
  /// Exactly one of alpha/target_size may be set; target_size is resolved
  /// with alpha_for_expected_size against the problem metric's spectrum.
  std::optional<double> target_size;
  int draws = 0;
  int tau = 1;
  std::vector<std::vector<int>> atoms;  // explicit; empty list = empty set
  std::vector<double> probs;

  SamplerSpec resolve(int d, const Spectrum& metric_spectrum) const;
};

struct PredictConfig {
  std::string label;
  DecayModel model;
  int d = 0;
  std::vector<int> p_grid;
  EffortOptions options;
};

struct ExperimentConfig {
  ProblemConfig problem;
  std::vector<SamplerConfig> samplers;
  int iterations = 100;
  int repetitions = 1;
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  double epsilon = 1e-8;     // relative accuracy target
  double cost_offset = 0.0;  // c0 charged per iteration
  int threads = 0;           // 0 = hardware concurrency
  int sample_count = 100000; // draws for the sample command
  std::vector<PredictConfig> predicts;
};

ExperimentConfig parse_experiment(const ConfigFile& file);
ExperimentConfig load_experiment(const std::string& path);

/// Per-sampler summary of an optimize run. Rates are per-iteration gap
/// ratios; *_model columns come from the predicted sigma, the others
/// from the measured averaged gap curve. Wall-clock is reported only in
/// wallclock.csv, never here, so summary bytes are reproducible.
struct SummaryRow {
  std::string sampler;
  double alpha = 0.0;
  double target_size = 0.0;  // nan when alpha was given directly
  double expected_size = 0.0;
  double realized_mean_size = 0.0;
  double empirical_rate = 0.0;
  double predicted_rate = 0.0;  // 1 - sigma, nan when no prediction exists
  double iters_to_eps = 0.0;
  double effort_to_eps = 0.0;  // sum |S|^3 (+c0/iter) units
  bool reached = false;        // epsilon crossed within budget
  double iters_to_eps_model = 0.0;
  double effort_to_eps_model = 0.0;
  bool diverged = false;
};

struct OptimizeOutcome {
  std::vector<SummaryRow> rows;
};

/// Runs repetitions x samplers, writes traces/<sampler>_<rep>.csv,
/// traces/<sampler>_mean.csv, summary.csv and wallclock.csv under
/// config.out_dir. Returns the summary. Output bytes (except
/// wallclock.csv) are a pure function of config + seed.
OptimizeOutcome cmd_optimize(const ExperimentConfig& config, std::ostream& log);

/// Draws sample_count subsets per sampler and writes marginal frequency
/// and size histogram CSVs against their exact counterparts.
int cmd_sample(const ExperimentConfig& config, std::ostream& log);

/// Emits effort curves under curves/: for exponential and polynomial
/// models both the exact-rate curve (<label>.csv) and the step-count
/// bound curve (<label>_bound.csv); for sparse models the sigma table.
/// Logs the predicted optimal block size per model.
int cmd_predict(const ExperimentConfig& config, std::ostream& log);

struct VerifyResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

/// Enumeration-backed identity checks at small dimension, fixed seeds.
std::vector<VerifyResult> run_verification();

/// Prints one line per identity; returns the number of failures.
int cmd_verify(std::ostream& log);

}  // namespace bench
}  // namespace detnewton
