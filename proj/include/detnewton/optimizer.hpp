#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "detnewton/linalg.hpp"
#include "detnewton/rng.hpp"
#include "detnewton/samplers.hpp"

namespace detnewton {

/// A smooth convex objective together with the matrix that witnesses its
/// quadratic upper bound: f(x+h) <= f(x) + <grad f(x), h> + (1/2) h' M h.
/// kappa in (0,1] is the strong-convexity constant relative to M (1 for
/// quadratics). Immutable after construction; callbacks must be safe for
/// concurrent read-only use.
struct Problem {
  int dim = 0;
  std::string name;
  std::function<double(const Eigen::VectorXd&)> objective;
  /// Full gradient. Instrumentation only: never charged to the cost model.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> gradient;
  /// Entries S of the gradient, as a packed |S|-vector. This is the only
  /// gradient access the optimizer step makes.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const CoordSubset&)>
      partial_gradient;
  SymMatrix metric;
  double kappa = 1.0;
  std::optional<double> optimum_value;
  /// Hessian oracle for the variable-metric variant; empty if unsupported.
  std::function<SymMatrix(const Eigen::VectorXd&)> hessian;
  std::optional<double> rel_smoothness;

  double gap(double objective_value) const {
    return optimum_value ? objective_value - *optimum_value : objective_value;
  }
};

enum class RnmVariant { FixedMetric, VariableMetric };

struct TraceRow {
  int k = 0;               // completed iterations
  double gap = 0.0;        // f(x_k) - f* when f* is known, else f(x_k)
  int block_size = 0;      // |S_k| used to reach x_k (0 at k = 0)
  double cum_cost = 0.0;   // sum of |S_j|^3 (+ c0 per iteration)
  std::int64_t ns = 0;     // cumulative wall-clock, instrumentation only
};

/// Per-iteration record of one optimization run plus its metadata.
struct RunTrace {
  std::vector<TraceRow> rows;
  std::string sampler_label;
  std::string problem_name;
  int dim = 0;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  int null_direction_warnings = 0;  // rank-deficient M_SS encountered

  double final_gap() const { return rows.empty() ? 0.0 : rows.back().gap; }
};

struct RunOptions {
  int iterations = 100;
  RnmVariant variant = RnmVariant::FixedMetric;
  double cost_offset = 0.0;  // fixed per-iteration cost c0 added to |S|^3
};

/// One block-Newton step: x_S <- x_S - (M_SS)^+ grad_S f(x). Coordinates
/// outside S are untouched; only grad entries in S are read. S = {} is a
/// null step. rank_deficient (optional) is set when M_SS has eigenvalues
/// at or below the pseudoinverse cutoff, in which case the step uses the
/// pseudoinverse direction.
Eigen::VectorXd rnm_step(const Problem& p, const Eigen::VectorXd& x,
                         const CoordSubset& s, bool* rank_deficient = nullptr);

/// Variable-metric step x_S <- x_S - (1/L) (H(x)_SS)^+ grad_S f(x) with
/// L the relative-smoothness constant. Requires p.hessian and
/// p.rel_smoothness.
Eigen::VectorXd rnm_relative_step(const Problem& p, const Eigen::VectorXd& x,
                                  const CoordSubset& s,
                                  bool* rank_deficient = nullptr);

/// Runs the randomized Newton loop with freshly sampled blocks, recording
/// a trace. Deterministic given (seed, stream) in `rng`'s construction.
/// Throws Divergence if the gap becomes non-finite or exceeds 1e12 times
/// the initial gap.
RunTrace run_rnm(const Problem& p, const SamplerSpec& sampler,
                 const Eigen::VectorXd& x0, RngStream& rng,
                 const RunOptions& opts);

/// Theorem rate constant for DPP sampling: kappa * lambda_d/(lambda_d+alpha).
/// Throws NotStronglyConvex when lambda_d <= 0.
double sigma_closed_form(const Spectrum& spec, double alpha, double kappa);

/// kappa * lambda_min(M^{1/2} E[(M_S)^+] M^{1/2}) with the expectation
/// enumerated exactly over the sampler's atoms.
double sigma_brute_force(const SymMatrix& m, const SamplerSpec& sampler,
                         double kappa);

/// lambda_max analogue of sigma_brute_force (parallel-aggregation
/// diagnostic).
double theta_brute_force(const SymMatrix& m, const SamplerSpec& sampler);

/// Parallel-aggregation constant under DPP sampling:
/// lambda_1/(lambda_1+alpha).
double theta_dpp(const Spectrum& spec, double alpha);

/// Guaranteed objective gap after k steps for convex (not strongly
/// convex) f: 2 D / (sigma k), D the level-set diameter in M geometry.
double sublinear_gap_bound(double sigma, double diameter, int k);

/// RunTrace CSV: '#' metadata header, then rows k,gap,block_size,cum_cost
/// (plus the ns wall-clock column unless include_ns is false; benchmark
/// outputs keep wall-clock in a separate file so data files are
/// byte-reproducible).
void write_trace_csv(const RunTrace& trace, const std::string& path,
                     bool include_ns = true);

}  // namespace detnewton
