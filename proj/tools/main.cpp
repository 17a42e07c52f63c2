#include <CLI11.hpp>
#include <iostream>

#include "detnewton/bench.hpp"

namespace {

struct CommonArgs {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> reps;
  bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args, bool config_required) {
  auto* opt = cmd->add_option("--config", args.config_path, "config file");
  if (config_required) opt->required();
  cmd->add_option("--seed", args.seed, "override [run] seed");
  cmd->add_option("--out", args.out_dir, "override output directory");
  cmd->add_option("--reps", args.reps, "override repetitions");
  cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

detnewton::bench::ExperimentConfig load(const CommonArgs& args) {
  auto config = detnewton::bench::load_experiment(args.config_path);
  if (args.seed) config.seed = *args.seed;
  if (args.out_dir) config.out_dir = *args.out_dir;
  if (args.reps) config.repetitions = *args.reps;
  return config;
}

class NullBuffer : public std::streambuf {
 public:
  int overflow(int c) override { return c; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "detnewton: randomized block-Newton benchmark with determinantal "
      "block sampling"};
  app.require_subcommand(1);

  CommonArgs sample_args, optimize_args, predict_args, verify_args;
  CLI::App* sample = app.add_subcommand(
      "sample", "draw subsets and report marginals / size statistics");
  add_common(sample, sample_args, true);
  CLI::App* optimize = app.add_subcommand(
      "optimize", "run seeded convergence sweeps and write traces");
  add_common(optimize, optimize_args, true);
  CLI::App* predict = app.add_subcommand(
      "predict", "emit decay-model effort curves and the predicted "
                 "optimal block size");
  add_common(predict, predict_args, true);
  CLI::App* verify = app.add_subcommand(
      "verify", "run the enumeration-backed identity checks");
  add_common(verify, verify_args, false);

  CLI11_PARSE(app, argc, argv);

  NullBuffer null_buffer;
  std::ostream null_stream(&null_buffer);

  try {
    if (sample->parsed()) {
      std::ostream& log = sample_args.quiet ? null_stream : std::cout;
      return detnewton::bench::cmd_sample(load(sample_args), log);
    }
    if (optimize->parsed()) {
      std::ostream& log = optimize_args.quiet ? null_stream : std::cout;
      detnewton::bench::cmd_optimize(load(optimize_args), log);
      return 0;
    }
    if (predict->parsed()) {
      std::ostream& log = predict_args.quiet ? null_stream : std::cout;
      return detnewton::bench::cmd_predict(load(predict_args), log);
    }
    if (verify->parsed()) {
      std::ostream& log = verify_args.quiet ? null_stream : std::cout;
      return detnewton::bench::cmd_verify(log) == 0 ? 0 : 1;
    }
  } catch (const detnewton::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
