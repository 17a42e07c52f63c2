#include "detnewton/bench.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "detnewton/optimizer.hpp"
#include "detnewton/samplers.hpp"

namespace detnewton {
namespace bench {

namespace {

namespace fs = std::filesystem;

constexpr std::uint64_t kProblemStream = 1;
constexpr std::uint64_t kRunStreamBase = 2;
constexpr std::uint64_t kStreamStride = 1ULL << 20;

const double kNaN = std::numeric_limits<double>::quiet_NaN();

// Gap values below this fraction of the initial gap are treated as
// numerically dead when fitting rates.
constexpr double kGapFloorRel = 1e-12;

std::uint64_t run_stream(std::size_t sampler_idx, int rep) {
  return kRunStreamBase + sampler_idx * kStreamStride +
         static_cast<std::uint64_t>(rep);
}

void run_tasks(int n_tasks, int threads, const std::function<void(int)>& fn) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = std::min(threads, n_tasks);
  if (threads <= 1) {
    for (int t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= n_tasks) return;
        try {
          fn(t);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

Eigen::VectorXd parse_decreasing(const std::vector<double>& values,
                                 const char* where) {
  if (values.empty()) {
    throw ConfigError(std::string(where) + ": empty eigenvalue list");
  }
  Eigen::VectorXd out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out(i) = values[i];
  std::sort(out.data(), out.data() + out.size(), std::greater<double>());
  return out;
}

}  // namespace

Problem build_problem(const ProblemConfig& config, std::uint64_t seed) {
  RngStream rng(seed, kProblemStream);
  if (config.kind == "quadratic_spectrum" || config.kind == "quadratic_csv") {
    SymMatrix m;
    std::string name;
    if (config.kind == "quadratic_csv") {
      m = read_matrix_csv(config.matrix_csv);
      name = "quadratic_csv";
    } else if (config.spectrum == "list") {
      m = synth_spectrum_matrix(config.eigenvalue_list, rng);
      name = "quadratic_list";
    } else {
      m = synth_spectrum_matrix(decay_eigenvalues(config.decay, config.d),
                                rng);
      name = "quadratic_" + config.spectrum;
    }
    Eigen::VectorXd b(m.dim());
    for (int i = 0; i < m.dim(); ++i) b(i) = rng.next_gaussian();
    return quadratic_problem(m, b, name);
  }

  DataSet data;
  if (config.data == "csv") {
    data = read_dataset_csv(config.data_csv);
  } else if (config.data == "mixture") {
    data = gaussian_mixture_data(config.n, config.m, config.clusters,
                                 config.separation, rng, config.response);
  } else if (config.data == "gaussian") {
    data = gaussian_data(config.n, config.m, config.eta, rng, config.response);
  } else {
    throw ConfigError("unknown data generator '" + config.data + "'");
  }

  if (config.kind == "dual_krr") {
    return dual_krr_problem(config.kernel, data, config.lambda);
  }
  if (config.kind == "primal_ridge") {
    return primal_ridge_problem(data, config.lambda);
  }
  if (config.kind == "logistic") {
    for (int i = 0; i < data.n(); ++i) {
      data.responses(i) = data.responses(i) >= 0.0 ? 1.0 : -1.0;
    }
    return logistic_problem(data, config.ridge);
  }
  throw ConfigError("unknown problem kind '" + config.kind + "'");
}

SamplerSpec SamplerConfig::resolve(int d,
                                   const Spectrum& metric_spectrum) const {
  auto resolved_alpha = [&]() -> double {
    if (alpha) return *alpha;
    if (target_size) {
      return alpha_for_expected_size(metric_spectrum, *target_size);
    }
    throw ConfigError("sampler '" + name + "': needs alpha or target_size");
  };
  if (kind == "dpp") return SamplerSpec::dpp(resolved_alpha());
  if (kind == "leverage") {
    return SamplerSpec::ridge_leverage(resolved_alpha(), draws);
  }
  if (kind == "tau_nice") return SamplerSpec::tau_nice(tau);
  if (kind == "tau_list") return SamplerSpec::tau_list(tau);
  if (kind == "full") {
    return SamplerSpec::explicit_atoms({CoordSubset::full(d)}, {1.0});
  }
  if (kind == "explicit") {
    std::vector<CoordSubset> subsets;
    subsets.reserve(atoms.size());
    for (const auto& idx : atoms) subsets.emplace_back(d, idx);
    return SamplerSpec::explicit_atoms(std::move(subsets), probs);
  }
  throw ConfigError("sampler '" + name + "': unknown kind '" + kind + "'");
}

namespace {

ProblemConfig parse_problem(const ConfigSection& section) {
  ProblemConfig p;
  p.kind = section.get_string("kind").value_or("quadratic_spectrum");
  if (p.kind == "quadratic_spectrum") {
    p.spectrum = section.get_string("spectrum").value_or("list");
    p.d = section.get_int("d", 2);
    if (p.spectrum == "list") {
      p.eigenvalue_list = parse_decreasing(
          section.get_double_list("eigenvalues"), "problem.eigenvalues");
      p.d = static_cast<int>(p.eigenvalue_list.size());
    } else if (p.spectrum == "sparse") {
      p.decay = DecayModel::sparse(section.get_int("s", 1),
                                   section.get_double("mu", 1.0),
                                   section.require_double("lambda"));
    } else if (p.spectrum == "exponential") {
      p.decay = DecayModel::exponential(section.get_double("C", 1.0),
                                        section.require_double("gamma"),
                                        section.get_double("lambda", 0.0));
    } else if (p.spectrum == "polynomial") {
      p.decay = DecayModel::polynomial(section.get_double("C", 1.0),
                                       section.require_double("s"),
                                       section.get_double("lambda", 0.0));
    } else {
      throw ConfigError("unknown spectrum '" + p.spectrum + "'", section.line);
    }
  } else if (p.kind == "quadratic_csv") {
    p.matrix_csv = section.require_string("matrix");
  } else {
    p.data = section.get_string("data").value_or("gaussian");
    p.n = section.get_int("n", 100);
    p.m = section.get_int("m", 8);
    p.eta = section.get_double("eta", 1.0);
    p.clusters = section.get_int("clusters", 8);
    p.separation = section.get_double("separation", 1.0);
    p.data_csv = section.get_string("data_csv").value_or("");
    const std::string response =
        section.get_string("response").value_or("linear");
    if (response == "linear") {
      p.response = ResponseModel::Linear;
    } else if (response == "sine") {
      p.response = ResponseModel::Sine;
    } else {
      throw ConfigError("unknown response model '" + response + "'",
                        section.line);
    }
    if (p.kind == "dual_krr") {
      const std::string kernel = section.get_string("kernel").value_or("se");
      if (kernel == "linear") {
        p.kernel = KernelSpec::linear();
      } else if (kernel == "se") {
        p.kernel = KernelSpec::squared_exponential(
            section.get_double("lengthscale", 1.0));
      } else if (kernel == "matern12" || kernel == "matern32" ||
                 kernel == "matern52") {
        const double order = kernel == "matern12"   ? 0.5
                             : kernel == "matern32" ? 1.5
                                                    : 2.5;
        p.kernel = KernelSpec::matern(order, section.get_double("scale", 1.0),
                                      section.get_double("amplitude", 1.0));
      } else {
        throw ConfigError("unknown kernel '" + kernel + "'", section.line);
      }
      p.lambda = section.get_double("lambda", 1e-3);
    } else if (p.kind == "primal_ridge") {
      p.lambda = section.get_double("lambda", 1e-3);
    } else if (p.kind == "logistic") {
      p.ridge = section.get_double("ridge", 0.0);
    } else {
      throw ConfigError("unknown problem kind '" + p.kind + "'", section.line);
    }
  }
  section.finish();
  return p;
}

SamplerConfig parse_sampler(const ConfigSection& section, int index) {
  SamplerConfig s;
  s.name = section.arg.empty() ? "sampler" + std::to_string(index)
                               : section.arg;
  s.kind = section.get_string("kind").value_or("dpp");
  s.alpha = section.get_double_opt("alpha");
  s.target_size = section.get_double_opt("target_size");
  if (s.alpha && s.target_size) {
    throw ConfigError("sampler '" + s.name +
                          "': give alpha or target_size, not both",
                      section.line);
  }
  s.draws = section.get_int("draws", 0);
  s.tau = section.get_int("tau", 1);
  if (const auto atoms = section.get_string("atoms")) {
    std::stringstream ss(*atoms);
    std::string part;
    while (std::getline(ss, part, ';')) {
      std::vector<int> idx;
      std::stringstream ps(part);
      int v = 0;
      while (ps >> v) idx.push_back(v);
      s.atoms.push_back(std::move(idx));
    }
    s.probs = section.get_double_list("probs");
  }
  section.finish();
  return s;
}

PredictConfig parse_predict(const ConfigSection& section, int index) {
  PredictConfig p;
  const std::string model = section.require_string("model");
  if (model == "exponential") {
    p.model = DecayModel::exponential(section.get_double("C", 1.0),
                                      section.require_double("gamma"),
                                      section.require_double("lambda"));
  } else if (model == "polynomial") {
    p.model = DecayModel::polynomial(section.get_double("C", 1.0),
                                     section.require_double("s"),
                                     section.require_double("lambda"));
  } else if (model == "sparse") {
    p.model = DecayModel::sparse(section.get_int("s", 1),
                                 section.get_double("mu", 1.0),
                                 section.require_double("lambda"));
  } else {
    throw ConfigError("unknown decay model '" + model + "'", section.line);
  }
  p.label = section.get_string("label").value_or(
      index > 0 ? model + std::to_string(index) : model);
  p.d = section.get_int("d", 40);
  p.p_grid = section.get_int_list("p_grid");
  if (p.p_grid.empty()) {
    for (int v = 1; v <= p.d; ++v) p.p_grid.push_back(v);
  }
  p.options.eps0 = section.get_double("eps0", 1.0);
  p.options.eps = section.get_double("eps", 1e-8);
  p.options.cost_offset = section.get_double("cost_offset", 0.0);
  section.finish();
  return p;
}

}  // namespace

ExperimentConfig parse_experiment(const ConfigFile& file) {
  ExperimentConfig out;
  if (const ConfigSection* problem = file.find("problem")) {
    out.problem = parse_problem(*problem);
  }
  int index = 0;
  for (const ConfigSection* section : file.all("sampler")) {
    out.samplers.push_back(parse_sampler(*section, index++));
  }
  const ConfigSection& run = file.require("run");
  out.iterations = run.get_int("iterations", 100);
  out.repetitions = run.get_int("repetitions", 1);
  out.seed = run.require_u64("seed");
  out.out_dir = run.get_string("out").value_or("out");
  out.epsilon = run.get_double("epsilon", 1e-8);
  out.cost_offset = run.get_double("cost_offset", 0.0);
  out.threads = run.get_int("threads", 0);
  out.sample_count = run.get_int("samples", 100000);
  run.finish();
  index = 0;
  for (const ConfigSection* section : file.all("predict")) {
    out.predicts.push_back(parse_predict(*section, index++));
  }
  if (out.repetitions < 1) throw ConfigError("repetitions must be >= 1");
  if (out.iterations < 1) throw ConfigError("iterations must be >= 1");
  return out;
}

ExperimentConfig load_experiment(const std::string& path) {
  return parse_experiment(ConfigFile::parse_file(path));
}

namespace {

struct RunSlot {
  RunTrace trace;
  bool diverged = false;
  std::int64_t wall_ns = 0;
};

// Mean gap / cost over the non-diverged repetitions, per iteration.
struct MeanCurve {
  std::vector<double> gap;
  std::vector<double> cum_cost;
  double mean_block_size = 0.0;
};

MeanCurve average_runs(const std::vector<const RunSlot*>& runs,
                       int iterations) {
  MeanCurve out;
  out.gap.assign(iterations + 1, 0.0);
  out.cum_cost.assign(iterations + 1, 0.0);
  int used = 0;
  double block_sum = 0.0;
  std::int64_t block_count = 0;
  for (const RunSlot* slot : runs) {
    if (slot->diverged) continue;
    ++used;
    for (int k = 0; k <= iterations; ++k) {
      out.gap[k] += slot->trace.rows[k].gap;
      out.cum_cost[k] += slot->trace.rows[k].cum_cost;
    }
    for (int k = 1; k <= iterations; ++k) {
      block_sum += slot->trace.rows[k].block_size;
      ++block_count;
    }
  }
  if (used > 0) {
    for (int k = 0; k <= iterations; ++k) {
      out.gap[k] /= used;
      out.cum_cost[k] /= used;
    }
  }
  out.mean_block_size = block_count ? block_sum / block_count : 0.0;
  return out;
}

// Geometric-mean per-step rate over the tail half of the numerically
// valid prefix of the averaged curve (documented in the README).
double tail_rate(const MeanCurve& curve) {
  const double g0 = curve.gap.empty() ? 0.0 : curve.gap[0];
  if (!(g0 > 0.0)) return kNaN;
  const double floor = kGapFloorRel * g0;
  int last = 0;
  while (last + 1 < static_cast<int>(curve.gap.size()) &&
         std::isfinite(curve.gap[last + 1]) && curve.gap[last + 1] > floor) {
    ++last;
  }
  if (last < 2) return kNaN;
  const int half = last / 2;
  const double ratio = curve.gap[last] / curve.gap[half];
  if (!(ratio > 0.0)) return kNaN;
  return std::pow(ratio, 1.0 / (last - half));
}

struct EffortEstimate {
  double iters = 0.0;
  double effort = 0.0;
  bool reached = false;
};

EffortEstimate effort_to_accuracy(const MeanCurve& curve, double eps_rel,
                                  double rate) {
  EffortEstimate out;
  out.iters = kNaN;
  out.effort = kNaN;
  const double g0 = curve.gap.empty() ? 0.0 : curve.gap[0];
  if (!(g0 > 0.0)) return out;
  const double target = eps_rel * g0;
  for (std::size_t k = 0; k < curve.gap.size(); ++k) {
    if (curve.gap[k] <= target) {
      out.iters = static_cast<double>(k);
      out.effort = curve.cum_cost[k];
      out.reached = true;
      return out;
    }
  }
  // Extrapolate from the last numerically valid iterate at the measured
  // tail rate.
  const double floor = kGapFloorRel * g0;
  int last = 0;
  while (last + 1 < static_cast<int>(curve.gap.size()) &&
         std::isfinite(curve.gap[last + 1]) && curve.gap[last + 1] > floor) {
    ++last;
  }
  if (last < 1 || !(rate > 0.0) || !(rate < 1.0)) return out;
  const double extra = std::log(target / curve.gap[last]) / std::log(rate);
  const double step_cost = curve.cum_cost[last] / last;
  out.iters = last + extra;
  out.effort = curve.cum_cost[last] + extra * step_cost;
  return out;
}

void write_mean_curve(const MeanCurve& curve, const std::string& sampler,
                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path);
  out << "# mean gap curve across repetitions, sampler=" << sampler << "\n";
  out << "k,gap,cum_cost\n";
  for (std::size_t k = 0; k < curve.gap.size(); ++k) {
    out << k << "," << format_double(curve.gap[k]) << ","
        << format_double(curve.cum_cost[k]) << "\n";
  }
}

std::string bool_cell(bool v) { return v ? "1" : "0"; }

// Predicted sigma for the summary: closed form for DPP/leverage, exact
// enumeration when it is cheap, otherwise none.
std::optional<double> predicted_sigma(const SymMatrix& metric,
                                      const Spectrum& spectrum,
                                      const SamplerSpec& spec, double kappa) {
  if (!(kappa > 0.0)) return std::nullopt;
  const int d = metric.dim();
  try {
    switch (spec.kind) {
      case SamplerSpec::Kind::Dpp:
      case SamplerSpec::Kind::RidgeLeverage:
        if (spectrum.min_eigenvalue() > 0.0) {
          return sigma_closed_form(spectrum, spec.alpha, kappa);
        }
        return std::nullopt;
      case SamplerSpec::Kind::TauNice: {
        double count = 1.0;
        for (int i = 1; i <= spec.tau; ++i) {
          count *= static_cast<double>(d - spec.tau + i) / i;
        }
        if (d <= 24 && count <= 2e4) {
          return sigma_brute_force(metric, spec, kappa);
        }
        return std::nullopt;
      }
      case SamplerSpec::Kind::TauList:
        if (d <= 256) return sigma_brute_force(metric, spec, kappa);
        return std::nullopt;
      case SamplerSpec::Kind::Explicit:
        if (spec.atoms.size() <= 1024) {
          return sigma_brute_force(metric, spec, kappa);
        }
        return std::nullopt;
    }
  } catch (const Error&) {
    return std::nullopt;
  }
  return std::nullopt;
}

}  // namespace

OptimizeOutcome cmd_optimize(const ExperimentConfig& config,
                             std::ostream& log) {
  if (config.samplers.empty()) {
    throw ConfigError("optimize: no [sampler] sections");
  }
  const Problem problem = build_problem(config.problem, config.seed);
  const Spectrum metric_spectrum = sym_eig(problem.metric);
  const int d = problem.dim;

  std::vector<SamplerSpec> specs;
  specs.reserve(config.samplers.size());
  for (const SamplerConfig& s : config.samplers) {
    SamplerSpec spec = s.resolve(d, metric_spectrum);
    spec.validate(d);
    specs.push_back(std::move(spec));
  }

  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir / "traces");

  const int reps = config.repetitions;
  const int n_tasks = static_cast<int>(specs.size()) * reps;
  std::vector<RunSlot> slots(n_tasks);
  const Eigen::VectorXd x0 = Eigen::VectorXd::Zero(d);

  RunOptions run_opts;
  run_opts.iterations = config.iterations;
  run_opts.cost_offset = config.cost_offset;

  run_tasks(n_tasks, config.threads, [&](int task) {
    const std::size_t sampler_idx = static_cast<std::size_t>(task) / reps;
    const int rep = task % reps;
    const std::uint64_t stream = run_stream(sampler_idx, rep);
    RngStream rng(config.seed, stream);
    RunSlot& slot = slots[task];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      slot.trace = run_rnm(problem, specs[sampler_idx], x0, rng, run_opts);
    } catch (const Divergence&) {
      slot.diverged = true;
    }
    slot.wall_ns = std::chrono::duration_cast<std::chrono::nanoseconds>(
                       std::chrono::steady_clock::now() - t0)
                       .count();
    slot.trace.seed = config.seed;
    slot.trace.stream = stream;
  });

  OptimizeOutcome outcome;
  std::ofstream wall(out_dir / "wallclock.csv", std::ios::binary);
  wall << "# wall-clock per run (hardware dependent; excluded from all "
          "reproducibility checks)\nsampler,rep,ns\n";

  for (std::size_t i = 0; i < specs.size(); ++i) {
    const SamplerConfig& sc = config.samplers[i];
    std::vector<const RunSlot*> runs;
    bool any_diverged = false;
    for (int r = 0; r < reps; ++r) {
      const RunSlot& slot = slots[i * reps + r];
      runs.push_back(&slot);
      any_diverged = any_diverged || slot.diverged;
      if (!slot.diverged) {
        write_trace_csv(slot.trace,
                        (out_dir / "traces" /
                         (sc.name + "_" + std::to_string(r) + ".csv"))
                            .string(),
                        /*include_ns=*/false);
      }
      wall << sc.name << "," << r << "," << slot.wall_ns << "\n";
    }
    const MeanCurve curve = average_runs(runs, config.iterations);
    write_mean_curve(curve, sc.name,
                     (out_dir / "traces" / (sc.name + "_mean.csv")).string());

    PreparedSampler prepared(specs[i], problem.metric);
    SummaryRow row;
    row.sampler = sc.name;
    row.alpha = (specs[i].kind == SamplerSpec::Kind::Dpp ||
                 specs[i].kind == SamplerSpec::Kind::RidgeLeverage)
                    ? specs[i].alpha
                    : kNaN;
    row.target_size = sc.target_size.value_or(kNaN);
    row.expected_size = prepared.expected_size();
    row.realized_mean_size = curve.mean_block_size;
    row.empirical_rate = tail_rate(curve);
    row.diverged = any_diverged;

    const auto sigma =
        predicted_sigma(problem.metric, metric_spectrum, specs[i],
                        problem.kappa);
    row.predicted_rate = sigma ? 1.0 - *sigma : kNaN;
    if (sigma && *sigma > 0.0) {
      row.iters_to_eps_model =
          iterations_to_accuracy(*sigma, 1.0, config.epsilon);
      const double e3 = std::pow(row.expected_size, 3.0);
      row.effort_to_eps_model =
          (e3 + config.cost_offset) * row.iters_to_eps_model;
    } else {
      row.iters_to_eps_model = kNaN;
      row.effort_to_eps_model = kNaN;
    }

    const EffortEstimate est =
        effort_to_accuracy(curve, config.epsilon, row.empirical_rate);
    row.iters_to_eps = est.iters;
    row.effort_to_eps = est.effort;
    row.reached = est.reached;
    outcome.rows.push_back(row);

    log << "sampler " << sc.name << ": E|S|=" << format_double(row.expected_size)
        << " rate=" << format_double(row.empirical_rate)
        << " effort_to_eps=" << format_double(row.effort_to_eps)
        << (row.reached ? "" : " (extrapolated)")
        << (row.diverged ? " DIVERGED" : "") << "\n";
  }

  std::ofstream summary(out_dir / "summary.csv", std::ios::binary);
  summary << "# optimize summary; epsilon=" << format_double(config.epsilon)
          << " iterations=" << config.iterations
          << " repetitions=" << config.repetitions << " seed=" << config.seed
          << "\n";
  summary << "sampler,alpha,target_size,expected_size,realized_mean_size,"
             "empirical_rate,predicted_rate,iters_to_eps,effort_to_eps,"
             "reached,iters_to_eps_model,effort_to_eps_model,diverged\n";
  for (const SummaryRow& r : outcome.rows) {
    summary << r.sampler << "," << format_double(r.alpha) << ","
            << format_double(r.target_size) << ","
            << format_double(r.expected_size) << ","
            << format_double(r.realized_mean_size) << ","
            << format_double(r.empirical_rate) << ","
            << format_double(r.predicted_rate) << ","
            << format_double(r.iters_to_eps) << ","
            << format_double(r.effort_to_eps) << "," << bool_cell(r.reached)
            << "," << format_double(r.iters_to_eps_model) << ","
            << format_double(r.effort_to_eps_model) << ","
            << bool_cell(r.diverged) << "\n";
  }
  return outcome;
}

int cmd_sample(const ExperimentConfig& config, std::ostream& log) {
  if (config.samplers.empty()) {
    throw ConfigError("sample: no [sampler] sections");
  }
  const Problem problem = build_problem(config.problem, config.seed);
  const Spectrum metric_spectrum = sym_eig(problem.metric);
  const int d = problem.dim;
  const int n_draws = config.sample_count;

  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir);

  for (std::size_t i = 0; i < config.samplers.size(); ++i) {
    const SamplerConfig& sc = config.samplers[i];
    SamplerSpec spec = sc.resolve(d, metric_spectrum);
    spec.validate(d);
    PreparedSampler prepared(spec, problem.metric);
    RngStream rng(config.seed, run_stream(i, 0));

    std::vector<std::int64_t> hits(d, 0);
    std::vector<std::int64_t> size_histogram(d + 1, 0);
    double size_sum = 0.0;
    for (int t = 0; t < n_draws; ++t) {
      const CoordSubset s = prepared.draw(rng);
      for (int idx : s.indices()) ++hits[idx];
      ++size_histogram[s.size()];
      size_sum += s.size();
    }
    const Eigen::VectorXd exact = sampler_marginals(problem.metric, spec);

    std::ofstream marg(out_dir / ("sample_" + sc.name + "_marginals.csv"),
                       std::ios::binary);
    marg << "# sampler=" << spec.label() << " draws=" << n_draws << "\n";
    marg << "i,empirical,exact\n";
    for (int j = 0; j < d; ++j) {
      marg << j << ","
           << format_double(static_cast<double>(hits[j]) / n_draws) << ","
           << format_double(exact(j)) << "\n";
    }

    std::ofstream sizes(out_dir / ("sample_" + sc.name + "_sizes.csv"),
                        std::ios::binary);
    sizes << "# sampler=" << spec.label() << " draws=" << n_draws << "\n";
    sizes << "# empirical_mean_size="
          << format_double(size_sum / n_draws)
          << " expected_size=" << format_double(prepared.expected_size())
          << "\n";
    sizes << "size,count\n";
    for (int s = 0; s <= d; ++s) {
      if (size_histogram[s] > 0) {
        sizes << s << "," << size_histogram[s] << "\n";
      }
    }
    log << "sampler " << sc.name << ": mean size "
        << format_double(size_sum / n_draws) << " (exact "
        << format_double(prepared.expected_size()) << ")\n";
  }
  return 0;
}

int cmd_predict(const ExperimentConfig& config, std::ostream& log) {
  if (config.predicts.empty()) {
    throw ConfigError("predict: no [predict] sections");
  }
  const fs::path out_dir(config.out_dir);
  fs::create_directories(out_dir / "curves");

  for (const PredictConfig& pc : config.predicts) {
    if (pc.model.kind == DecayModel::Kind::Sparse) {
      const int d = pc.d;
      // Sparse models get a sigma table over k for both tail conventions
      // plus the model effort at the step-count bound.
      std::ofstream table(out_dir / "curves" / (pc.label + ".csv"),
                          std::ios::binary);
      table << "# model: " << pc.model.label() << " d=" << d
            << " (sigma at expected-size index k)\n";
      table << "k,sigma_include,sigma_exclude,T,effort\n";
      const double logfac = std::log(pc.options.eps0 / pc.options.eps);
      for (int k : pc.p_grid) {
        if (k < 1 || k > d - 1) continue;
        const double s_inc =
            sparse_spectrum_sigma(pc.model, d, k, TailConvention::IncludeK);
        const double s_exc =
            sparse_spectrum_sigma(pc.model, d, k, TailConvention::ExcludeK);
        const double t = logfac / s_inc;
        const double effort =
            (std::pow(k, 3.0) + pc.options.cost_offset) * t;
        table << k << "," << format_double(s_inc) << ","
              << format_double(s_exc) << "," << format_double(t) << ","
              << format_double(effort) << "\n";
      }
      log << "model " << pc.label << ": optimal block size of order s = "
          << pc.model.sparse_s << "\n";
      continue;
    }

    const double q = decay_q(pc.model);
    EffortOptions exact = pc.options;
    exact.step_bound = false;
    EffortOptions bound = pc.options;
    bound.step_bound = true;
    EffortCurve curve_exact, curve_bound;
    if (pc.model.kind == DecayModel::Kind::Exponential) {
      curve_exact = exp_decay_curve(pc.model, pc.d, q, pc.p_grid, exact);
      curve_bound = exp_decay_curve(pc.model, pc.d, q, pc.p_grid, bound);
    } else {
      curve_exact = poly_decay_curve(pc.model, pc.d, q, pc.p_grid, exact);
      curve_bound = poly_decay_curve(pc.model, pc.d, q, pc.p_grid, bound);
    }
    write_effort_csv(curve_exact,
                     (out_dir / "curves" / (pc.label + ".csv")).string());
    write_effort_csv(
        curve_bound,
        (out_dir / "curves" / (pc.label + "_bound.csv")).string());
    log << "model " << pc.label << ": q_raw=" << format_double(q)
        << " q_rounded=" << curve_bound.q_rounded
        << " predicted_optimal_block=" << curve_bound.argmin_p()
        << " (exact-rate curve argmin=" << curve_exact.argmin_p() << ")\n";
  }
  return 0;
}

namespace {

// Random p.d. matrix with eigenvalues in roughly [0.1, ~3], Haar basis.
SymMatrix random_pd(int d, RngStream& rng) {
  std::vector<double> eigs(d);
  for (int i = 0; i < d; ++i) eigs[i] = 0.1 + std::abs(rng.next_gaussian());
  std::sort(eigs.begin(), eigs.end(), std::greater<double>());
  Eigen::VectorXd v = Eigen::Map<Eigen::VectorXd>(eigs.data(), d);
  return synth_spectrum_matrix(v, rng);
}

Eigen::VectorXd random_decreasing_spectrum(int d, RngStream& rng) {
  std::vector<double> eigs(d);
  for (int i = 0; i < d; ++i) eigs[i] = std::exp(2.0 * rng.next_gaussian());
  std::sort(eigs.begin(), eigs.end(), std::greater<double>());
  return Eigen::Map<Eigen::VectorXd>(eigs.data(), d);
}

}  // namespace

std::vector<VerifyResult> run_verification() {
  std::vector<VerifyResult> out;
  const std::uint64_t seed = 0x5eed0001;

  {  // E[(M_S)^+] = (alpha I + M)^{-1} on 20 random p.d. matrices.
    RngStream rng(seed, 10);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int d = 1 + trial % 8;
      const SymMatrix m = random_pd(d, rng);
      for (double alpha : {0.1, 1.0, 10.0}) {
        const SymMatrix lhs = brute_force_expected_pinv(m, alpha);
        const Eigen::MatrixXd rhs =
            (alpha * Eigen::MatrixXd::Identity(d, d) + m.mat()).inverse();
        worst = std::max(worst, (lhs.mat() - rhs).norm());
      }
    }
    out.push_back({"expectation_formula_pd", worst, 1e-9, worst <= 1e-9});
  }

  {  // P.s.d. relaxation: E[(M_S)^+] <= (alpha I + M)^{-1}.
    RngStream rng(seed, 11);
    double worst = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
      const int d = 2 + trial % 5;
      const Spectrum full = sym_eig(random_pd(d, rng));
      Eigen::VectorXd eigs = full.eigenvalues;
      eigs(d - 1) = 0.0;  // rank deficient
      const SymMatrix m(full.eigenvectors * eigs.asDiagonal() *
                            full.eigenvectors.transpose(),
                        Definiteness::PositiveSemiDefinite);
      const double alpha = 0.7;
      const SymMatrix lhs = brute_force_expected_pinv(m, alpha);
      const Eigen::MatrixXd rhs =
          (alpha * Eigen::MatrixXd::Identity(d, d) + m.mat()).inverse();
      const double min_eig =
          sym_eig(SymMatrix(rhs - lhs.mat())).min_eigenvalue();
      worst = std::max(worst, -min_eig);
    }
    out.push_back({"expectation_formula_psd_order", worst, 1e-9,
                   worst <= 1e-9});
  }

  {  // Normalization: subset determinants sum to det(I + M/alpha).
    RngStream rng(seed, 12);
    double worst = 0.0;
    for (int trial = 0; trial < 6; ++trial) {
      const int d = 2 + trial;
      const SymMatrix m = random_pd(d, rng);
      for (double alpha : {0.5, 1.0, 3.0}) {
        const std::vector<double> probs = dpp_subset_probabilities(m, alpha);
        double total = 0.0;
        for (double p : probs) total += p;
        worst = std::max(worst, std::abs(total - 1.0));
      }
    }
    out.push_back({"normalization_lemma", worst, 1e-10, worst <= 1e-10});
  }

  {  // Tail-sum alpha keeps E|S| strictly below k, and the alpha
     // inversion is a right inverse.
    RngStream rng(seed, 13);
    double margin = std::numeric_limits<double>::infinity();
    double inv_residual = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const int d = 2 + trial * 3;
      const Eigen::VectorXd eigs = random_decreasing_spectrum(d, rng);
      Spectrum spec;
      spec.eigenvalues = eigs;
      spec.eigenvectors = Eigen::MatrixXd::Identity(d, d);
      for (int k = 1; k <= d; ++k) {
        double tail = 0.0;
        for (int i = k; i <= d; ++i) tail += eigs(i - 1);
        margin = std::min(margin, k - dpp_expected_size(spec, tail));
      }
      for (double k : {0.5, 1.0, d / 2.0}) {
        const double alpha = alpha_for_expected_size(spec, k);
        inv_residual = std::max(
            inv_residual, std::abs(dpp_expected_size(spec, alpha) - k));
      }
    }
    out.push_back({"subset_size_tail_bound", margin, 0.0, margin > 0.0});
    out.push_back({"alpha_inversion", inv_residual, 1e-9,
                   inv_residual <= 1e-9});
  }

  {  // Closed-form sigma equals enumerated sigma for DPP sampling.
    RngStream rng(seed, 14);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const int d = 1 + trial % 8;
      const SymMatrix m = random_pd(d, rng);
      const Spectrum spec = sym_eig(m);
      for (double alpha : {0.3, 1.0, 4.0}) {
        const double brute =
            sigma_brute_force(m, SamplerSpec::dpp(alpha), 1.0);
        const double closed = sigma_closed_form(spec, alpha, 1.0);
        worst = std::max(worst, std::abs(brute - closed));
      }
    }
    out.push_back({"sigma_closed_form", worst, 1e-9, worst <= 1e-9});
  }

  {  // Recurrence between consecutive sigma(k).
    RngStream rng(seed, 15);
    double worst = 0.0;
    for (int d : {2, 8, 31, 64}) {
      const auto rows = sigma_recurrence_check(
          random_decreasing_spectrum(d, rng));
      for (const auto& r : rows) worst = std::max(worst, r.residual);
    }
    out.push_back({"sigma_recurrence", worst, 1e-12, worst <= 1e-12});
  }

  {  // ESO vector: p o v = diag(M) always; the domination
     // E[M_S] <= Diag(p o v) holds once alpha is on the eigenvalue
     // scale (it provably fails as alpha -> 0 for non-diagonal M, where
     // E[M_S] -> M).
    RngStream rng(seed, 16);
    double identity_residual = 0.0;
    double domination = 0.0;
    for (int trial = 0; trial < 8; ++trial) {
      const int d = 2 + trial % 6;
      const SymMatrix m = random_pd(d, rng);
      for (double alpha : {1.0, 10.0}) {
        const Eigen::VectorXd p = ridge_leverage_scores(m, alpha);
        const Eigen::VectorXd v = eso_vector(m, alpha);
        const Eigen::VectorXd pv = p.cwiseProduct(v);
        identity_residual = std::max(
            identity_residual,
            (pv - m.mat().diagonal()).cwiseAbs().maxCoeff());
        const SymMatrix expected = brute_force_expected_Msub(m, alpha);
        const double min_eig =
            sym_eig(SymMatrix(Eigen::MatrixXd(pv.asDiagonal()) -
                              expected.mat()))
                .min_eigenvalue();
        domination = std::max(domination, -min_eig);
      }
    }
    out.push_back({"eso_identity", identity_residual, 1e-12,
                   identity_residual <= 1e-12});
    out.push_back({"eso_domination", domination, 1e-9, domination <= 1e-9});
  }

  {  // Degenerate-spectrum counter-example: eigenvalues (4,4,1,1),
     // alpha = 2 gives E|S| = 2 and sigma = 1/3, below the 1/2 of the
     // half/half {full, empty} sampler.
    RngStream rng(seed, 17);
    Eigen::VectorXd eigs(4);
    eigs << 4.0, 4.0, 1.0, 1.0;
    const SymMatrix m = synth_spectrum_matrix(eigs, rng);
    const Spectrum spec = sym_eig(m);
    const double size_err = std::abs(dpp_expected_size(spec, 2.0) - 2.0);
    const double sigma_dpp = sigma_brute_force(m, SamplerSpec::dpp(2.0), 1.0);
    const SamplerSpec half = SamplerSpec::explicit_atoms(
        {CoordSubset::full(4), CoordSubset::empty(4)}, {0.5, 0.5});
    const double sigma_half = sigma_brute_force(m, half, 1.0);
    const double residual = std::max(
        {size_err, std::abs(sigma_dpp - 1.0 / 3.0),
         std::abs(sigma_half - 0.5)});
    out.push_back({"counterexample_degenerate", residual, 1e-9,
                   residual <= 1e-9 && sigma_dpp < sigma_half});
  }

  {  // Moore-Penrose axioms of the placed pseudoinverse.
    RngStream rng(seed, 18);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      const int d = 2 + trial % 6;
      const SymMatrix m = random_pd(d, rng);
      const std::uint64_t mask =
          1 + rng.next_below((1ULL << d) - 1);  // non-empty
      const CoordSubset s = CoordSubset::from_mask(d, mask);
      const Eigen::MatrixXd p = placed_pinv(m, s).mat();
      Eigen::MatrixXd ms = Eigen::MatrixXd::Zero(d, d);
      for (int a : s.indices()) {
        for (int b : s.indices()) ms(a, b) = m(a, b);
      }
      worst = std::max(worst, (p * ms * p - p).norm());
      const Eigen::MatrixXd id_check =
          principal_submatrix(placed_pinv(m, s), s).mat() *
          principal_submatrix(m, s).mat();
      worst = std::max(
          worst,
          (id_check - Eigen::MatrixXd::Identity(s.size(), s.size())).norm());
    }
    out.push_back({"moore_penrose_axioms", worst, 1e-10, worst <= 1e-10});
  }

  {  // Negative control: an asymmetric matrix must be rejected.
    Eigen::MatrixXd bad(2, 2);
    bad << 2.0, 1.0, 1.0 + 1e-3, 2.0;
    bool threw = false;
    try {
      SymMatrix rejected(bad);
      (void)rejected;
    } catch (const ContractViolation&) {
      threw = true;
    }
    out.push_back({"symmetry_rejection", threw ? 0.0 : 1.0, 0.5, threw});
  }

  return out;
}

int cmd_verify(std::ostream& log) {
  const std::vector<VerifyResult> results = run_verification();
  int failures = 0;
  for (const VerifyResult& r : results) {
    log << (r.pass ? "[PASS] " : "[FAIL] ") << r.name
        << " residual=" << format_double(r.residual)
        << " tol=" << format_double(r.tolerance) << "\n";
    if (!r.pass) ++failures;
  }
  log << (failures == 0 ? "all identities hold\n"
                        : std::to_string(failures) + " identities failed\n");
  return failures;
}

}  // namespace bench
}  // namespace detnewton
