#include "detnewton/problems.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

namespace detnewton {

namespace {

// log(1+exp(t)) without overflow.
double log1p_exp(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

void require_finite(const DataSet& data, const char* where) {
  if (data.n() < 1) {
    throw ContractViolation(std::string(where) + ": need n >= 1");
  }
  if (!data.points.allFinite() || !data.responses.allFinite()) {
    throw ContractViolation(std::string(where) + ": non-finite data");
  }
  if (data.responses.size() != data.points.rows()) {
    throw ContractViolation(std::string(where) +
                            ": responses/points length mismatch");
  }
}

}  // namespace

KernelSpec KernelSpec::linear() {
  KernelSpec k;
  k.kind = Kind::Linear;
  return k;
}

KernelSpec KernelSpec::squared_exponential(double lengthscale) {
  if (!(lengthscale > 0.0)) {
    throw ContractViolation("KernelSpec: lengthscale must be positive");
  }
  KernelSpec k;
  k.kind = Kind::SquaredExponential;
  k.lengthscale = lengthscale;
  return k;
}

KernelSpec KernelSpec::matern(double order, double scale, double amplitude) {
  if (order != 0.5 && order != 1.5 && order != 2.5) {
    throw ContractViolation("KernelSpec: Matern order must be 0.5, 1.5 or 2.5");
  }
  if (!(scale > 0.0) || !(amplitude > 0.0)) {
    throw ContractViolation("KernelSpec: Matern scale/amplitude must be "
                            "positive");
  }
  KernelSpec k;
  k.kind = Kind::Matern;
  k.matern_order = order;
  k.scale = scale;
  k.amplitude = amplitude;
  return k;
}

SymMatrix gram_matrix(const KernelSpec& kernel, const DataSet& data) {
  require_finite(data, "gram_matrix");
  const int n = data.n();
  Eigen::MatrixXd k(n, n);
  switch (kernel.kind) {
    case KernelSpec::Kind::Linear:
      k = data.points * data.points.transpose();
      break;
    case KernelSpec::Kind::SquaredExponential: {
      const double denom = 2.0 * kernel.lengthscale * kernel.lengthscale;
      for (int i = 0; i < n; ++i) {
        k(i, i) = 1.0;
        for (int j = i + 1; j < n; ++j) {
          const double r2 =
              (data.points.row(i) - data.points.row(j)).squaredNorm();
          k(i, j) = k(j, i) = std::exp(-r2 / denom);
        }
      }
      break;
    }
    case KernelSpec::Kind::Matern: {
      const double rho = kernel.scale;
      const double c2 = kernel.amplitude;
      for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
          const double r = (data.points.row(i) - data.points.row(j)).norm();
          double v = 0.0;
          if (kernel.matern_order == 0.5) {
            v = c2 * std::exp(-r / rho);
          } else if (kernel.matern_order == 1.5) {
            const double a = std::sqrt(3.0) * r / rho;
            v = c2 * (1.0 + a) * std::exp(-a);
          } else {
            const double a = std::sqrt(5.0) * r / rho;
            v = c2 * (1.0 + a + 5.0 * r * r / (3.0 * rho * rho)) *
                std::exp(-a);
          }
          k(i, j) = k(j, i) = v;
        }
      }
      break;
    }
  }
  return SymMatrix(std::move(k), Definiteness::PositiveSemiDefinite);
}

Problem dual_krr_problem(const KernelSpec& kernel, const DataSet& data,
                         double lambda) {
  if (!(lambda > 0.0)) {
    throw ContractViolation("dual_krr_problem: lambda must be positive");
  }
  const int n = data.n();
  auto k = std::make_shared<Eigen::MatrixXd>(gram_matrix(kernel, data).mat());
  auto y = std::make_shared<Eigen::VectorXd>(data.responses);
  const double inv_n = 1.0 / n;

  Eigen::MatrixXd metric_mat =
      *k * inv_n + lambda * Eigen::MatrixXd::Identity(n, n);
  SymMatrix metric(metric_mat, Definiteness::PositiveDefinite);

  // Dense solve for the optimum so traces can report true gaps; this is
  // construction-time work, outside the optimizer's cost model.
  const Eigen::VectorXd a_star = metric.mat().ldlt().solve(-lambda * *y);

  Problem p;
  p.dim = n;
  p.name = "dual_krr";
  p.metric = std::move(metric);
  p.kappa = 1.0;
  p.objective = [k, y, lambda, inv_n](const Eigen::VectorXd& a) {
    const double quad = 0.5 * inv_n * a.dot(*k * a);
    const double reg =
        0.5 * lambda * (a.squaredNorm() + 2.0 * a.dot(*y));
    return quad + reg;
  };
  p.gradient = [k, y, lambda, inv_n](const Eigen::VectorXd& a) {
    return (inv_n * (*k * a) + lambda * (a + *y)).eval();
  };
  p.partial_gradient = [k, y, lambda, inv_n](const Eigen::VectorXd& a,
                                             const CoordSubset& s) {
    Eigen::VectorXd out(s.size());
    for (int t = 0; t < s.size(); ++t) {
      const int i = s[t];
      out(t) = inv_n * k->row(i).dot(a) + lambda * (a(i) + (*y)(i));
    }
    return out;
  };
  Problem probe = p;
  p.optimum_value = probe.objective(a_star);
  return p;
}

Problem primal_ridge_problem(const DataSet& data, double lambda) {
  if (!(lambda > 0.0)) {
    throw ContractViolation("primal_ridge_problem: lambda must be positive");
  }
  require_finite(data, "primal_ridge_problem");
  const int m = data.m();
  auto a = std::make_shared<Eigen::MatrixXd>(data.points);
  auto y = std::make_shared<Eigen::VectorXd>(data.responses);

  Eigen::MatrixXd metric_mat =
      a->transpose() * *a + lambda * Eigen::MatrixXd::Identity(m, m);
  SymMatrix metric(metric_mat, Definiteness::PositiveDefinite);
  const Eigen::VectorXd x_star =
      metric.mat().ldlt().solve(a->transpose() * *y);

  Problem p;
  p.dim = m;
  p.name = "primal_ridge";
  p.metric = std::move(metric);
  p.kappa = 1.0;
  p.objective = [a, y, lambda](const Eigen::VectorXd& x) {
    return 0.5 * (*a * x - *y).squaredNorm() + 0.5 * lambda * x.squaredNorm();
  };
  p.gradient = [a, y, lambda](const Eigen::VectorXd& x) {
    return (a->transpose() * (*a * x - *y) + lambda * x).eval();
  };
  p.partial_gradient = [a, y, lambda](const Eigen::VectorXd& x,
                                      const CoordSubset& s) {
    const Eigen::VectorXd residual = *a * x - *y;
    Eigen::VectorXd out(s.size());
    for (int t = 0; t < s.size(); ++t) {
      const int i = s[t];
      out(t) = a->col(i).dot(residual) + lambda * x(i);
    }
    return out;
  };
  Problem probe = p;
  p.optimum_value = probe.objective(x_star);
  return p;
}

Problem logistic_problem(const DataSet& data, double ridge,
                         std::optional<double> kappa,
                         double rel_smoothness) {
  require_finite(data, "logistic_problem");
  for (int i = 0; i < data.n(); ++i) {
    const double yi = data.responses(i);
    if (yi != 1.0 && yi != -1.0) {
      throw ContractViolation("logistic_problem: responses must be +1/-1");
    }
  }
  if (ridge < 0.0) {
    throw ContractViolation("logistic_problem: ridge must be >= 0");
  }
  const int m = data.m();
  auto a = std::make_shared<Eigen::MatrixXd>(data.points);
  auto y = std::make_shared<Eigen::VectorXd>(data.responses);

  Eigen::MatrixXd metric_mat = 0.25 * a->transpose() * *a;
  if (ridge > 0.0) {
    metric_mat += ridge * Eigen::MatrixXd::Identity(m, m);
  }
  SymMatrix metric(metric_mat, ridge > 0.0
                                   ? Definiteness::PositiveDefinite
                                   : Definiteness::PositiveSemiDefinite);

  Problem p;
  p.dim = m;
  p.name = ridge > 0.0 ? "logistic_ridge" : "logistic";
  if (kappa) {
    p.kappa = *kappa;
  } else if (ridge > 0.0) {
    // H(x) >= ridge I >= (ridge/lambda_max(M)) M everywhere.
    p.kappa = ridge / sym_eig(metric).max_eigenvalue();
  } else {
    p.kappa = 0.0;  // convex but not strongly convex
  }
  p.metric = std::move(metric);
  p.objective = [a, y, ridge](const Eigen::VectorXd& x) {
    double acc = 0.0;
    const Eigen::VectorXd margins = *a * x;
    for (int i = 0; i < y->size(); ++i) {
      acc += log1p_exp(-(*y)(i)*margins(i));
    }
    return acc + 0.5 * ridge * x.squaredNorm();
  };
  p.gradient = [a, y, ridge](const Eigen::VectorXd& x) {
    const Eigen::VectorXd margins = *a * x;
    Eigen::VectorXd weights(y->size());
    for (int i = 0; i < y->size(); ++i) {
      weights(i) = -(*y)(i)*sigmoid(-(*y)(i)*margins(i));
    }
    return (a->transpose() * weights + ridge * x).eval();
  };
  p.partial_gradient = [a, y, ridge](const Eigen::VectorXd& x,
                                     const CoordSubset& s) {
    const Eigen::VectorXd margins = *a * x;
    Eigen::VectorXd weights(y->size());
    for (int i = 0; i < y->size(); ++i) {
      weights(i) = -(*y)(i)*sigmoid(-(*y)(i)*margins(i));
    }
    Eigen::VectorXd out(s.size());
    for (int t = 0; t < s.size(); ++t) {
      out(t) = a->col(s[t]).dot(weights) + ridge * x(s[t]);
    }
    return out;
  };
  p.hessian = [a, y, ridge, m](const Eigen::VectorXd& x) {
    const Eigen::VectorXd margins = *a * x;
    Eigen::VectorXd w(y->size());
    for (int i = 0; i < y->size(); ++i) {
      const double s = sigmoid(-(*y)(i)*margins(i));
      w(i) = s * (1.0 - s);
    }
    Eigen::MatrixXd h = a->transpose() * w.asDiagonal() * *a;
    if (ridge > 0.0) h += ridge * Eigen::MatrixXd::Identity(m, m);
    return SymMatrix(std::move(h), Definiteness::PositiveSemiDefinite);
  };
  p.rel_smoothness = rel_smoothness;
  return p;
}

Problem quadratic_problem(const SymMatrix& m, const Eigen::VectorXd& b,
                          const std::string& name) {
  if (m.dim() != b.size()) {
    throw ContractViolation("quadratic_problem: dimension mismatch");
  }
  auto mat = std::make_shared<Eigen::MatrixXd>(m.mat());
  auto rhs = std::make_shared<Eigen::VectorXd>(b);
  const Eigen::VectorXd x_star = mat->ldlt().solve(b);

  Problem p;
  p.dim = m.dim();
  p.name = name;
  p.metric = m;
  p.kappa = 1.0;
  p.objective = [mat, rhs](const Eigen::VectorXd& x) {
    return 0.5 * x.dot(*mat * x) - rhs->dot(x);
  };
  p.gradient = [mat, rhs](const Eigen::VectorXd& x) {
    return (*mat * x - *rhs).eval();
  };
  p.partial_gradient = [mat, rhs](const Eigen::VectorXd& x,
                                  const CoordSubset& s) {
    Eigen::VectorXd out(s.size());
    for (int t = 0; t < s.size(); ++t) {
      out(t) = mat->row(s[t]).dot(x) - (*rhs)(s[t]);
    }
    return out;
  };
  p.hessian = [m_copy = m](const Eigen::VectorXd&) { return m_copy; };
  p.rel_smoothness = 1.0;
  Problem probe = p;
  p.optimum_value = probe.objective(x_star);
  return p;
}

SymMatrix synth_spectrum_matrix(const Eigen::VectorXd& lambdas,
                                RngStream& rng) {
  const int d = static_cast<int>(lambdas.size());
  if (d < 1) throw ContractViolation("synth_spectrum_matrix: empty spectrum");
  for (int i = 0; i < d; ++i) {
    if (!(lambdas(i) > 0.0) || !std::isfinite(lambdas(i))) {
      throw ContractViolation("synth_spectrum_matrix: eigenvalues must be "
                              "positive and finite");
    }
    if (i > 0 && lambdas(i) > lambdas(i - 1)) {
      throw ContractViolation("synth_spectrum_matrix: eigenvalues must be "
                              "decreasing");
    }
  }
  // Haar-random orthogonal Q: QR of a Gaussian matrix with the sign of
  // diag(R) folded into Q.
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) g(i, j) = rng.next_gaussian();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < d; ++j) {
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  }
  Eigen::MatrixXd m = q * lambdas.asDiagonal() * q.transpose();
  m = 0.5 * (m + m.transpose()).eval();
  return SymMatrix(std::move(m), Definiteness::PositiveDefinite);
}

namespace {

Eigen::VectorXd make_responses(const Eigen::MatrixXd& points,
                               ResponseModel response, RngStream& rng) {
  const int n = static_cast<int>(points.rows());
  const int m = static_cast<int>(points.cols());
  Eigen::VectorXd y(n);
  if (response == ResponseModel::Linear) {
    Eigen::VectorXd w(m);
    for (int j = 0; j < m; ++j) w(j) = rng.next_gaussian();
    for (int i = 0; i < n; ++i) {
      y(i) = points.row(i).dot(w) + rng.next_gaussian();
    }
  } else {
    for (int i = 0; i < n; ++i) {
      y(i) = std::sin(points(i, 0)) + rng.next_gaussian();
    }
  }
  return y;
}

}  // namespace

DataSet gaussian_data(int n, int m, double eta, RngStream& rng,
                      ResponseModel response) {
  if (n < 1 || m < 1) throw ContractViolation("gaussian_data: need n,m >= 1");
  if (!(eta > 0.0)) throw ContractViolation("gaussian_data: eta must be > 0");
  Eigen::MatrixXd points(n, m);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) points(i, j) = eta * rng.next_gaussian();
  }
  DataSet out;
  out.responses = make_responses(points, response, rng);
  out.points = std::move(points);
  return out;
}

DataSet gaussian_mixture_data(int n, int m, int clusters, double separation,
                              RngStream& rng, ResponseModel response,
                              std::vector<int>* assignments,
                              Eigen::MatrixXd* centers) {
  if (clusters < 1 || n < clusters) {
    throw ContractViolation("gaussian_mixture_data: need n >= clusters >= 1");
  }
  if (separation < 0.0) {
    throw ContractViolation("gaussian_mixture_data: separation must be >= 0");
  }
  Eigen::MatrixXd c(clusters, m);
  for (int k = 0; k < clusters; ++k) {
    for (int j = 0; j < m; ++j) c(k, j) = separation * rng.next_gaussian();
  }
  Eigen::MatrixXd points(n, m);
  std::vector<int> assign(n);
  for (int i = 0; i < n; ++i) {
    const int z = static_cast<int>(rng.next_below(clusters));
    assign[i] = z;
    for (int j = 0; j < m; ++j) points(i, j) = c(z, j) + rng.next_gaussian();
  }
  DataSet out;
  out.responses = make_responses(points, response, rng);
  out.points = std::move(points);
  if (assignments) *assignments = std::move(assign);
  if (centers) *centers = std::move(c);
  return out;
}

double smoothness_violation(const Problem& p, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& h) {
  const double lhs = p.objective(x + h);
  const double rhs = p.objective(x) + p.gradient(x).dot(h) +
                     0.5 * h.dot(p.metric.mat() * h);
  return lhs - rhs;
}

double strong_convexity_violation(const Problem& p, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& h) {
  const double lhs = p.objective(x) + p.gradient(x).dot(h) +
                     0.5 * p.kappa * h.dot(p.metric.mat() * h);
  return lhs - p.objective(x + h);
}

void write_dataset_csv(const DataSet& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_dataset_csv: cannot open " + path);
  out << "# dataset n=" << data.n() << " m=" << data.m()
      << " (last column is the response)\n";
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.m(); ++j) {
      out << format_double(data.points(i, j)) << ",";
    }
    out << format_double(data.responses(i)) << "\n";
  }
}

DataSet read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_dataset_csv: cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      row.push_back(std::strtod(cell.c_str(), nullptr));
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw Error("read_dataset_csv: no data rows in " + path);
  const int n = static_cast<int>(rows.size());
  const int m = static_cast<int>(rows[0].size()) - 1;
  if (m < 1) throw Error("read_dataset_csv: need at least 2 columns");
  DataSet out;
  out.points.resize(n, m);
  out.responses.resize(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(rows[i].size()) != m + 1) {
      throw Error("read_dataset_csv: ragged row " + std::to_string(i));
    }
    for (int j = 0; j < m; ++j) out.points(i, j) = rows[i][j];
    out.responses(i) = rows[i][m];
  }
  return out;
}

}  // namespace detnewton
