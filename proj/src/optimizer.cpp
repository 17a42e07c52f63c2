#include "detnewton/optimizer.hpp"

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <fstream>

namespace detnewton {

namespace {

// Solves B z = g for a symmetric p.s.d. block via eigendecomposition with
// the placed_pinv cutoff. Flags rank deficiency.
Eigen::VectorXd block_pinv_solve(const SymMatrix& block,
                                 const Eigen::VectorXd& g,
                                 bool* rank_deficient) {
  const Spectrum s = sym_eig(block);
  const double lmax = s.dim() ? s.eigenvalues.cwiseAbs().maxCoeff() : 0.0;
  const double cutoff = kPinvRelCutoff * lmax;
  bool deficient = false;
  Eigen::VectorXd coeffs = s.eigenvectors.transpose() * g;
  for (int i = 0; i < s.dim(); ++i) {
    if (std::abs(s.eigenvalues(i)) > cutoff && lmax > 0.0) {
      coeffs(i) /= s.eigenvalues(i);
    } else {
      coeffs(i) = 0.0;
      deficient = true;
    }
  }
  if (rank_deficient) *rank_deficient = deficient;
  return s.eigenvectors * coeffs;
}

Eigen::VectorXd step_on_block(const SymMatrix& metric, const Problem& p,
                              const Eigen::VectorXd& x, const CoordSubset& s,
                              double scale, bool* rank_deficient) {
  if (rank_deficient) *rank_deficient = false;
  if (s.is_empty()) return x;
  if (static_cast<int>(x.size()) != p.dim || s.dim() != p.dim) {
    throw ContractViolation("rnm_step: dimension mismatch");
  }
  const Eigen::VectorXd g = p.partial_gradient(x, s);
  if (g.size() != s.size()) {
    throw ContractViolation("rnm_step: partial_gradient returned " +
                            std::to_string(g.size()) + " entries for |S| = " +
                            std::to_string(s.size()));
  }
  const Eigen::VectorXd delta =
      block_pinv_solve(principal_submatrix(metric, s), g, rank_deficient);
  Eigen::VectorXd out = x;
  for (int a = 0; a < s.size(); ++a) out(s[a]) -= scale * delta(a);
  return out;
}

}  // namespace

Eigen::VectorXd rnm_step(const Problem& p, const Eigen::VectorXd& x,
                         const CoordSubset& s, bool* rank_deficient) {
  return step_on_block(p.metric, p, x, s, 1.0, rank_deficient);
}

Eigen::VectorXd rnm_relative_step(const Problem& p, const Eigen::VectorXd& x,
                                  const CoordSubset& s, bool* rank_deficient) {
  if (!p.hessian || !p.rel_smoothness) {
    throw UnsupportedVariant(
        "rnm_relative_step: problem has no Hessian oracle or relative "
        "smoothness constant");
  }
  return step_on_block(p.hessian(x), p, x, s, 1.0 / *p.rel_smoothness,
                       rank_deficient);
}

RunTrace run_rnm(const Problem& p, const SamplerSpec& sampler,
                 const Eigen::VectorXd& x0, RngStream& rng,
                 const RunOptions& opts) {
  if (opts.iterations < 1) {
    throw ContractViolation("run_rnm: iterations must be >= 1");
  }
  if (static_cast<int>(x0.size()) != p.dim) {
    throw ContractViolation("run_rnm: x0 dimension mismatch");
  }
  const bool variable = opts.variant == RnmVariant::VariableMetric;
  if (variable && (!p.hessian || !p.rel_smoothness)) {
    throw UnsupportedVariant("run_rnm: variable-metric variant needs a "
                             "Hessian oracle and rel_smoothness");
  }

  // Fixed metric: one eigendecomposition shared by every draw.
  std::optional<PreparedSampler> fixed;
  if (!variable) fixed.emplace(sampler, p.metric);

  RunTrace trace;
  trace.sampler_label = sampler.label();
  trace.problem_name = p.name;
  trace.dim = p.dim;
  trace.rows.reserve(opts.iterations + 1);

  const auto t0 = std::chrono::steady_clock::now();
  auto now_ns = [&t0]() {
    return std::chrono::duration_cast<std::chrono::nanoseconds>(
               std::chrono::steady_clock::now() - t0)
        .count();
  };

  Eigen::VectorXd x = x0;
  double gap = p.gap(p.objective(x));
  const double initial_gap = gap;
  double cum_cost = 0.0;
  trace.rows.push_back({0, gap, 0, 0.0, now_ns()});

  for (int k = 1; k <= opts.iterations; ++k) {
    CoordSubset s = CoordSubset::empty(p.dim);
    bool rank_deficient = false;
    if (variable) {
      const SymMatrix h = p.hessian(x);
      PreparedSampler per_step(sampler, h);
      s = per_step.draw(rng);
      x = step_on_block(h, p, x, s, 1.0 / *p.rel_smoothness, &rank_deficient);
    } else {
      s = fixed->draw(rng);
      x = rnm_step(p, x, s, &rank_deficient);
    }
    if (rank_deficient) ++trace.null_direction_warnings;

    gap = p.gap(p.objective(x));
    cum_cost += static_cast<double>(s.size()) * s.size() * s.size() +
                opts.cost_offset;
    trace.rows.push_back({k, gap, s.size(), cum_cost, now_ns()});

    if (!std::isfinite(gap) ||
        (initial_gap > 0.0 && gap > 1e12 * initial_gap)) {
      throw Divergence("run_rnm: objective gap diverged at iteration " +
                           std::to_string(k),
                       k);
    }
  }
  return trace;
}

double sigma_closed_form(const Spectrum& spec, double alpha, double kappa) {
  if (!(kappa > 0.0) || kappa > 1.0) {
    throw ContractViolation("sigma_closed_form: kappa outside (0,1]");
  }
  if (!(alpha > 0.0)) {
    throw ContractViolation("sigma_closed_form: alpha must be positive");
  }
  const double lam_d = spec.min_eigenvalue();
  if (!(lam_d > 0.0)) {
    throw NotStronglyConvex("sigma_closed_form: smallest eigenvalue " +
                            std::to_string(lam_d) + " is not positive");
  }
  return kappa * lam_d / (lam_d + alpha);
}

namespace {

SymMatrix whitened_expected_pinv(const SymMatrix& m,
                                 const SamplerSpec& sampler) {
  const SymMatrix root = sqrt_psd(m);
  const SymMatrix expectation = expected_placed_pinv(m, sampler);
  return SymMatrix(root.mat() * expectation.mat() * root.mat());
}

}  // namespace

double sigma_brute_force(const SymMatrix& m, const SamplerSpec& sampler,
                         double kappa) {
  return kappa * sym_eig(whitened_expected_pinv(m, sampler)).min_eigenvalue();
}

double theta_brute_force(const SymMatrix& m, const SamplerSpec& sampler) {
  return sym_eig(whitened_expected_pinv(m, sampler)).max_eigenvalue();
}

double theta_dpp(const Spectrum& spec, double alpha) {
  const double lam_1 = spec.max_eigenvalue();
  if (!(lam_1 > 0.0)) {
    throw ContractViolation("theta_dpp: largest eigenvalue must be positive");
  }
  return lam_1 / (lam_1 + alpha);
}

double sublinear_gap_bound(double sigma, double diameter, int k) {
  if (!(sigma > 0.0) || sigma > 1.0) {
    throw ContractViolation("sublinear_gap_bound: sigma outside (0,1]");
  }
  if (diameter < 0.0) {
    throw ContractViolation("sublinear_gap_bound: negative diameter");
  }
  if (k < 1) throw ContractViolation("sublinear_gap_bound: k must be >= 1");
  return 2.0 * diameter / (sigma * static_cast<double>(k));
}

void write_trace_csv(const RunTrace& trace, const std::string& path,
                     bool include_ns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_trace_csv: cannot open " + path);
  out << "# problem=" << trace.problem_name << "\n";
  out << "# sampler=" << trace.sampler_label << "\n";
  out << "# d=" << trace.dim << " seed=" << trace.seed
      << " stream=" << trace.stream << "\n";
  if (trace.null_direction_warnings > 0) {
    out << "# null_direction_warnings=" << trace.null_direction_warnings
        << "\n";
  }
  out << (include_ns ? "k,gap,block_size,cum_cost,ns\n"
                     : "k,gap,block_size,cum_cost\n");
  for (const TraceRow& r : trace.rows) {
    out << r.k << "," << format_double(r.gap) << "," << r.block_size << ","
        << format_double(r.cum_cost);
    if (include_ns) out << "," << r.ns;
    out << "\n";
  }
}

}  // namespace detnewton
