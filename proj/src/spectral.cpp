#include "detnewton/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "detnewton/samplers.hpp"

namespace detnewton {

namespace {

double expected_size_for(const Eigen::VectorXd& eigenvalues, double alpha) {
  double acc = 0.0;
  for (int i = 0; i < eigenvalues.size(); ++i) {
    acc += eigenvalues(i) / (eigenvalues(i) + alpha);
  }
  return acc;
}

void require_decreasing_positive(const Eigen::VectorXd& eigenvalues,
                                 const char* where) {
  if (eigenvalues.size() == 0) {
    throw ContractViolation(std::string(where) + ": empty spectrum");
  }
  for (int i = 0; i < eigenvalues.size(); ++i) {
    if (i > 0 && eigenvalues(i) > eigenvalues(i - 1)) {
      throw ContractViolation(std::string(where) +
                              ": eigenvalues must be decreasing");
    }
  }
}

}  // namespace

double tail_alpha(const Eigen::VectorXd& eigenvalues, int k,
                  TailConvention convention) {
  const int d = static_cast<int>(eigenvalues.size());
  const int first = convention == TailConvention::IncludeK ? k : k + 1;
  if (first < 1 || first > d + 1) {
    throw ContractViolation("tail_alpha: k out of range");
  }
  double acc = 0.0;
  for (int i = first; i <= d; ++i) acc += eigenvalues(i - 1);
  return acc;
}

std::vector<SigmaRecurrenceRow> sigma_recurrence_check(
    const Eigen::VectorXd& eigenvalues) {
  require_decreasing_positive(eigenvalues, "sigma_recurrence_check");
  const int d = static_cast<int>(eigenvalues.size());
  const double lam_d = eigenvalues(d - 1);
  if (!(lam_d > 0.0)) {
    throw NotStronglyConvex(
        "sigma_recurrence_check: smallest eigenvalue not positive");
  }
  std::vector<SigmaRecurrenceRow> rows(d);
  // Tail sums back to front keep alpha(k) exact at every k.
  double tail = 0.0;
  for (int k = d; k >= 1; --k) {
    tail += eigenvalues(k - 1);
    rows[k - 1] = {k, lam_d / (lam_d + tail), 0.0};
  }
  for (int k = 1; k < d; ++k) {
    const double next = rows[k].sigma;
    const double predicted =
        next / (1.0 + (eigenvalues(k - 1) / lam_d) * next);
    rows[k - 1].residual = std::abs(rows[k - 1].sigma - predicted);
  }
  return rows;
}

double speedup_factor(const Eigen::VectorXd& eigenvalues, int tau) {
  require_decreasing_positive(eigenvalues, "speedup_factor");
  const int d = static_cast<int>(eigenvalues.size());
  if (tau < 1 || tau > d) {
    throw ContractViolation("speedup_factor: tau outside [1,d]");
  }
  const double lam_d = eigenvalues(d - 1);
  if (!(lam_d > 0.0)) {
    throw NotStronglyConvex("speedup_factor: smallest eigenvalue not positive");
  }
  double acc = 1.0;
  for (int j = 1; j <= tau - 1; ++j) acc += eigenvalues(j - 1) / lam_d;
  return acc;
}

double iterations_to_accuracy(double sigma, double eps0, double eps) {
  if (!(eps0 > 0.0) || !(eps > 0.0) || eps > eps0) {
    throw ContractViolation(
        "iterations_to_accuracy: need 0 < eps <= eps0");
  }
  if (!(sigma > 0.0)) {
    throw ContractViolation("iterations_to_accuracy: sigma must be positive");
  }
  if (sigma >= 1.0) return 1.0;  // one exact Newton step
  if (eps == eps0) return 0.0;
  const double denom = std::log1p(-sigma);
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return (std::log(eps) - std::log(eps0)) / denom;
}

DecayModel DecayModel::exponential(double C, double gamma, double lambda) {
  DecayModel m;
  m.kind = Kind::Exponential;
  m.C = C;
  m.gamma = gamma;
  m.lambda = lambda;
  m.validate();
  return m;
}

DecayModel DecayModel::polynomial(double C, double s, double lambda) {
  DecayModel m;
  m.kind = Kind::Polynomial;
  m.C = C;
  m.s = s;
  m.lambda = lambda;
  m.validate();
  return m;
}

DecayModel DecayModel::sparse(int s, double mu, double lambda) {
  DecayModel m;
  m.kind = Kind::Sparse;
  m.sparse_s = s;
  m.mu = mu;
  m.lambda = lambda;
  m.validate();
  return m;
}

void DecayModel::validate() const {
  switch (kind) {
    case Kind::Exponential:
      if (!(C > 0.0) || !(gamma > 0.0) || !(gamma < 1.0) || lambda < 0.0) {
        throw ContractViolation("DecayModel(exponential): need C > 0, "
                                "gamma in (0,1), lambda >= 0");
      }
      break;
    case Kind::Polynomial:
      if (!(C > 0.0) || !(s > 1.0) || lambda < 0.0) {
        throw ContractViolation("DecayModel(polynomial): need C > 0, s > 1, "
                                "lambda >= 0");
      }
      break;
    case Kind::Sparse:
      if (sparse_s < 1 || !(mu > 0.0) || !(lambda > 0.0) || lambda >= mu) {
        throw ContractViolation("DecayModel(sparse): need s >= 1, "
                                "0 < lambda < mu");
      }
      break;
  }
}

std::string DecayModel::label() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Exponential:
      out << "exponential C=" << C << " gamma=" << gamma
          << " lambda=" << lambda;
      break;
    case Kind::Polynomial:
      out << "polynomial C=" << C << " s=" << s << " lambda=" << lambda;
      break;
    case Kind::Sparse:
      out << "sparse s=" << sparse_s << " mu=" << mu << " lambda=" << lambda;
      break;
  }
  return out.str();
}

Eigen::VectorXd decay_eigenvalues(const DecayModel& model, int d) {
  model.validate();
  if (d < 1) throw ContractViolation("decay_eigenvalues: d must be >= 1");
  Eigen::VectorXd out(d);
  switch (model.kind) {
    case DecayModel::Kind::Exponential:
      for (int i = 1; i <= d; ++i) {
        out(i - 1) = model.C * std::pow(model.gamma, i) + model.C * model.lambda;
      }
      break;
    case DecayModel::Kind::Polynomial:
      for (int i = 1; i <= d; ++i) {
        out(i - 1) = model.C * std::pow(i, -model.s) + model.C * model.lambda;
      }
      break;
    case DecayModel::Kind::Sparse:
      if (model.sparse_s > d) {
        throw ContractViolation("decay_eigenvalues: sparse s > d");
      }
      for (int i = 0; i < d; ++i) {
        out(i) = i < model.sparse_s ? model.mu : model.lambda;
      }
      break;
  }
  return out;
}

double decay_q(const DecayModel& model) {
  switch (model.kind) {
    case DecayModel::Kind::Exponential:
      if (!(model.lambda > 0.0)) {
        throw ContractViolation("decay_q: exponential model needs lambda > 0");
      }
      return std::log(model.lambda) / std::log(model.gamma);
    case DecayModel::Kind::Polynomial:
      if (!(model.lambda > 0.0)) {
        throw ContractViolation("decay_q: polynomial model needs lambda > 0");
      }
      return std::pow(model.lambda, -1.0 / model.s);
    case DecayModel::Kind::Sparse:
      return model.sparse_s;
  }
  throw Error("decay_q: unreachable");
}

double exp_size_bound_tail(double gamma, int d, int p, double q) {
  double acc = 0.0;
  const double reg = std::pow(gamma, q - p);
  for (int i = 1; i <= d - p; ++i) {
    const double t = std::pow(gamma, i) + reg;
    acc += t / (t + 1.0);
  }
  return acc;
}

namespace {

void check_grid(const std::vector<int>& p_grid, int d) {
  if (p_grid.empty()) throw ContractViolation("effort curve: empty p_grid");
  for (std::size_t a = 0; a < p_grid.size(); ++a) {
    if (p_grid[a] < 1 || p_grid[a] > d) {
      throw ContractViolation("effort curve: p = " +
                              std::to_string(p_grid[a]) + " outside [1," +
                              std::to_string(d) + "]");
    }
    if (a > 0 && p_grid[a] <= p_grid[a - 1]) {
      throw ContractViolation("effort curve: p_grid must be strictly "
                              "increasing");
    }
  }
}

double step_count(double sigma, const EffortOptions& o) {
  if (o.step_bound) {
    return std::log(o.eps0 / o.eps) / sigma;
  }
  return iterations_to_accuracy(sigma, o.eps0, o.eps);
}

}  // namespace

int EffortCurve::argmin_p() const {
  int best = rows.empty() ? 0 : rows[0].p;
  double best_effort = rows.empty()
                           ? 0.0
                           : std::numeric_limits<double>::infinity();
  for (const EffortRow& r : rows) {
    if (r.effort < best_effort) {
      best_effort = r.effort;
      best = r.p;
    }
  }
  return best;
}

EffortCurve exp_decay_curve(const DecayModel& model, int d, double q,
                            const std::vector<int>& p_grid,
                            const EffortOptions& options) {
  if (model.kind != DecayModel::Kind::Exponential) {
    throw ContractViolation("exp_decay_curve: model is not exponential");
  }
  check_grid(p_grid, d);
  const Eigen::VectorXd eig = decay_eigenvalues(model, d);
  const double lam_d = eig(d - 1);

  EffortCurve curve;
  curve.model_label = model.label();
  curve.d = d;
  curve.q_raw = q;
  curve.options = options;
  int q_rounded = p_grid.front();
  for (int p : p_grid) {
    if (std::abs(p - q) < std::abs(q_rounded - q)) q_rounded = p;
  }
  curve.q_rounded = q_rounded;

  for (int p : p_grid) {
    EffortRow row;
    row.p = p;
    row.alpha = model.C * std::pow(model.gamma, p);
    row.expected_size = expected_size_for(eig, row.alpha);
    row.size_bound = p + exp_size_bound_tail(model.gamma, d, p, q);
    row.sigma = lam_d / (lam_d + row.alpha);
    row.iterations = step_count(row.sigma, options);
    const double e3 = row.expected_size * row.expected_size *
                      row.expected_size;
    row.effort = (e3 + options.cost_offset) * row.iterations;
    curve.rows.push_back(row);
  }
  return curve;
}

EffortCurve poly_decay_curve(const DecayModel& model, int d, double q,
                             const std::vector<int>& p_grid,
                             const EffortOptions& options) {
  if (model.kind != DecayModel::Kind::Polynomial) {
    throw ContractViolation("poly_decay_curve: model is not polynomial");
  }
  check_grid(p_grid, d);
  const Eigen::VectorXd eig = decay_eigenvalues(model, d);
  const double lam_d = eig(d - 1);

  EffortCurve curve;
  curve.model_label = model.label();
  curve.d = d;
  curve.q_raw = q;
  curve.options = options;
  int q_rounded = p_grid.front();
  for (int p : p_grid) {
    if (std::abs(p - q) < std::abs(q_rounded - q)) q_rounded = p;
  }
  curve.q_rounded = q_rounded;

  const double ds = std::pow(d, model.s);
  const double qs = std::pow(q, model.s);
  for (int p : p_grid) {
    EffortRow row;
    row.p = p;
    row.alpha = model.C * std::pow(p, -model.s);
    row.expected_size = expected_size_for(eig, row.alpha);
    row.size_bound = row.expected_size;
    row.sigma = lam_d / (lam_d + row.alpha);
    row.iterations = step_count(row.sigma, options);
    const double e3 = row.expected_size * row.expected_size *
                      row.expected_size;
    row.effort = (e3 + options.cost_offset) * row.iterations;
    row.asymptotic_effort = std::pow(p, 3.0) * ds * qs /
                            (std::pow(p, model.s) * (qs + ds));
    curve.rows.push_back(row);
  }
  return curve;
}

double sparse_spectrum_sigma(const DecayModel& model, int d, int k,
                             TailConvention convention) {
  if (model.kind != DecayModel::Kind::Sparse) {
    throw ContractViolation("sparse_spectrum_sigma: model is not sparse");
  }
  if (k < 0 || k > d - 1) {
    throw ContractViolation("sparse_spectrum_sigma: k outside [0, d-1]");
  }
  if (convention == TailConvention::IncludeK && k < 1) {
    throw ContractViolation(
        "sparse_spectrum_sigma: IncludeK tail needs k >= 1");
  }
  const Eigen::VectorXd eig = decay_eigenvalues(model, d);
  const double alpha = tail_alpha(eig, k, convention);
  const double lam_d = eig(d - 1);
  return lam_d / (lam_d + alpha);
}

double se_kernel_gamma(double eta, double l) {
  if (!(eta > 0.0) || !(l > 0.0)) {
    throw ContractViolation("se_kernel_gamma: eta and l must be positive");
  }
  const double a = l * l + 2.0 * eta * eta;
  return 2.0 * eta * eta / (a + std::sqrt(a));
}

Eigen::VectorXd eso_vector(const SymMatrix& m, double alpha) {
  const Eigen::VectorXd p = ridge_leverage_scores(m, alpha);
  Eigen::VectorXd v(m.dim());
  for (int i = 0; i < m.dim(); ++i) {
    if (!(p(i) > 0.0)) {
      throw ContractViolation("eso_vector: zero marginal at coordinate " +
                              std::to_string(i) +
                              " (matrix not positive definite?)");
    }
    v(i) = m(i, i) / p(i);
  }
  return v;
}

void write_effort_csv(const EffortCurve& curve, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_effort_csv: cannot open " + path);
  out << "# model: " << curve.model_label << "\n";
  out << "# d=" << curve.d << " q_raw=" << format_double(curve.q_raw)
      << " q_rounded=" << curve.q_rounded << "\n";
  out << "# eps0=" << format_double(curve.options.eps0)
      << " eps=" << format_double(curve.options.eps)
      << " cost_offset=" << format_double(curve.options.cost_offset)
      << " iterations=" << (curve.options.step_bound ? "bound" : "exact")
      << "\n";
  out << "p,alpha,expected_size,sigma,T,effort\n";
  for (const EffortRow& r : curve.rows) {
    out << r.p << "," << format_double(r.alpha) << ","
        << format_double(r.expected_size) << "," << format_double(r.sigma)
        << "," << format_double(r.iterations) << ","
        << format_double(r.effort) << "\n";
  }
}

}  // namespace detnewton
