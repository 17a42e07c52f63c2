#pragma once

#include <optional>
#include <string>
#include <vector>

#include "detnewton/optimizer.hpp"

namespace detnewton {

/// Kernel families with closed-form evaluations. Matern is restricted to
/// the half-integer orders 1/2, 3/2, 5/2:
///   order 1/2:  C2 exp(-r/rho)
///   order 3/2:  C2 (1 + sqrt(3) r/rho) exp(-sqrt(3) r/rho)
///   order 5/2:  C2 (1 + sqrt(5) r/rho + 5 r^2/(3 rho^2)) exp(-sqrt(5) r/rho)
/// with rho the scale and C2 the amplitude.
struct KernelSpec {
  enum class Kind { Linear, SquaredExponential, Matern };
  Kind kind = Kind::SquaredExponential;
  double lengthscale = 1.0;   // SquaredExponential
  double matern_order = 1.5;  // Matern: 0.5, 1.5 or 2.5
  double scale = 1.0;         // Matern rho
  double amplitude = 1.0;     // Matern C2

  static KernelSpec linear();
  static KernelSpec squared_exponential(double lengthscale);
  static KernelSpec matern(double order, double scale, double amplitude = 1.0);
};

struct DataSet {
  Eigen::MatrixXd points;     // n x m
  Eigen::VectorXd responses;  // n

  int n() const { return static_cast<int>(points.rows()); }
  int m() const { return static_cast<int>(points.cols()); }
};

enum class ResponseModel { Linear, Sine };

/// K_ij = k(a_i, a_j). Symmetric, p.s.d. up to round-off.
SymMatrix gram_matrix(const KernelSpec& kernel, const DataSet& data);

/// Dual kernel ridge regression,
///   g(a) = (1/2n) a'Ka + (lambda/2) sum_i (a_i^2 + 2 a_i y_i),
/// with metric M = K/n + lambda I and kappa = 1. The optimum (solution of
/// M a* = -lambda y) is solved densely once so traces can report true gaps.
Problem dual_krr_problem(const KernelSpec& kernel, const DataSet& data,
                         double lambda);

/// Primal ridge regression f(x) = (1/2)|Ax-y|^2 + (lambda/2)|x|^2 with
/// metric A'A + lambda I (un-averaged loss, so the metric is exactly the
/// offset covariance).
Problem primal_ridge_problem(const DataSet& data, double lambda);

/// Logistic regression f(x) = sum_i log(1+exp(-y_i a_i'x)) with metric
/// (1/4) A'A, plus an optional ridge term that makes the metric p.d.
/// (flagged in the problem name). kappa defaults to ridge/lambda_max(M)
/// when a ridge is present, 0 otherwise. Supplies a Hessian oracle.
Problem logistic_problem(const DataSet& data, double ridge = 0.0,
                         std::optional<double> kappa = std::nullopt,
                         double rel_smoothness = 1.0);

/// Quadratic f(x) = (1/2) x'Mx - b'x; metric M, kappa 1, optimum solved
/// densely at construction.
Problem quadratic_problem(const SymMatrix& m, const Eigen::VectorXd& b,
                          const std::string& name = "quadratic");

/// M = Q diag(lambdas) Q' for a Haar-random orthogonal Q. lambdas must be
/// positive and decreasing.
SymMatrix synth_spectrum_matrix(const Eigen::VectorXd& lambdas,
                                RngStream& rng);

/// n i.i.d. points from N(0, eta^2 I_m). Responses: a hidden w ~ N(0,I)
/// linear response plus unit noise (Linear) or sin of the first
/// coordinate plus unit noise (Sine).
DataSet gaussian_data(int n, int m, double eta, RngStream& rng,
                      ResponseModel response = ResponseModel::Linear);

/// Gaussian mixture: `clusters` centers drawn from N(0, separation^2 I),
/// equal weights, unit within-cluster variance. Optional out-params
/// expose the assignments and centers for diagnostics.
DataSet gaussian_mixture_data(int n, int m, int clusters, double separation,
                              RngStream& rng,
                              ResponseModel response = ResponseModel::Sine,
                              std::vector<int>* assignments = nullptr,
                              Eigen::MatrixXd* centers = nullptr);

/// f(x+h) - (f(x) + <grad,h> + (1/2) h'Mh); positive means the quadratic
/// upper bound is violated.
double smoothness_violation(const Problem& p, const Eigen::VectorXd& x,
                            const Eigen::VectorXd& h);

/// f(x) + <grad,h> + (kappa/2) h'Mh - f(x+h); positive means the strong
/// convexity lower bound is violated.
double strong_convexity_violation(const Problem& p, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& h);

/// DataSet CSV: n rows of m+1 values, last column the response.
void write_dataset_csv(const DataSet& data, const std::string& path);
DataSet read_dataset_csv(const std::string& path);

}  // namespace detnewton
