#pragma once

#include <string>
#include <vector>

#include "detnewton/linalg.hpp"

namespace detnewton {

/// Which eigenvalues enter the tail sum alpha(k) for 1-based k:
/// IncludeK sums lambda_k..lambda_d, ExcludeK sums lambda_{k+1}..lambda_d.
/// The two appear interchangeably in size-k rate folklore; every routine
/// here takes the convention explicitly where it matters.
enum class TailConvention { IncludeK, ExcludeK };

/// alpha(k) = tail sum of the spectrum under the given convention.
double tail_alpha(const Eigen::VectorXd& eigenvalues, int k,
                  TailConvention convention);

struct SigmaRecurrenceRow {
  int k = 0;
  double sigma = 0.0;
  double residual = 0.0;  // |sigma(k) - sigma(k+1)/(1+(l_k/l_d) sigma(k+1))|
};

/// sigma(k) = lambda_d/(lambda_d + alpha(k)) with alpha(k) the IncludeK
/// tail, for k = 1..d, together with the recurrence residual at each k.
/// Throws NotStronglyConvex when lambda_d <= 0.
std::vector<SigmaRecurrenceRow> sigma_recurrence_check(
    const Eigen::VectorXd& eigenvalues);

/// The decay-weighted speedup factor 1 + sum_{j=1}^{tau-1} lambda_j /
/// lambda_d. Equals tau for a flat spectrum. Note: on random spectra this
/// factor upper-bounds sigma(tau)/sigma(1) under both tail conventions
/// (see the property tests); it is reported as the model's speedup scale,
/// not asserted as a lower bound.
double speedup_factor(const Eigen::VectorXd& eigenvalues, int tau);

/// Steps needed to contract an initial gap eps0 down to eps at
/// per-step factor (1 - sigma): (log eps - log eps0)/log(1-sigma).
/// Returns 1 for sigma >= 1 (one exact Newton step) and +inf when sigma
/// underflows the log.
double iterations_to_accuracy(double sigma, double eps0, double eps);

/// Spectral decay families with closed-form rate behavior.
///   Exponential: lambda_i = C gamma^i + C lambda
///   Polynomial:  lambda_i = C i^{-s} + C lambda
///   Sparse:      s copies of mu, then d-s copies of lambda
struct DecayModel {
  enum class Kind { Exponential, Polynomial, Sparse };
  Kind kind = Kind::Exponential;
  double C = 1.0;
  double gamma = 0.5;    // Exponential
  double lambda = 0.0;   // all: regularization floor
  double s = 2.0;        // Polynomial exponent (> 1)
  int sparse_s = 1;      // Sparse: number of large eigenvalues
  double mu = 1.0;       // Sparse: large eigenvalue

  static DecayModel exponential(double C, double gamma, double lambda);
  static DecayModel polynomial(double C, double s, double lambda);
  static DecayModel sparse(int s, double mu, double lambda);

  void validate() const;
  std::string label() const;
};

/// The d model eigenvalues, decreasing.
Eigen::VectorXd decay_eigenvalues(const DecayModel& model, int d);

/// Attenuation point q: log(lambda)/log(gamma) for exponential decay,
/// lambda^{-1/s} for polynomial, s for sparse.
double decay_q(const DecayModel& model);

/// R_d(p,q) = sum_{i=1}^{d-p} (g^i + g^{q-p})/(g^i + g^{q-p} + 1); the
/// tail part of the expected-size bound E|S| <= p + R_d(p,q) for
/// exponential decay with lambda <= gamma^q.
double exp_size_bound_tail(double gamma, int d, int p, double q);

struct EffortOptions {
  double eps0 = 1.0;
  double eps = 1e-8;
  double cost_offset = 0.0;  // fixed per-iteration cost added to E|S|^3
  /// false: exact step count (log eps ratio / log(1-sigma)).
  /// true:  the step-count bound log(eps0/eps)/sigma, which is what the
  ///        decay-model effort analysis uses.
  bool step_bound = false;
};

struct EffortRow {
  int p = 0;
  double alpha = 0.0;
  double expected_size = 0.0;
  double size_bound = 0.0;  // p + R_d(p,q) for exponential, = exact otherwise
  double sigma = 0.0;
  double iterations = 0.0;
  double effort = 0.0;              // (E|S|^3 + c0) * iterations
  double asymptotic_effort = 0.0;   // polynomial only: p^3 d^s q^s/(p^s(q^s+d^s))
};

struct EffortCurve {
  std::string model_label;
  int d = 0;
  double q_raw = 0.0;
  int q_rounded = 0;
  EffortOptions options;
  std::vector<EffortRow> rows;

  /// p of the row with minimal effort.
  int argmin_p() const;
};

/// Effort grid for exponential decay: alpha(p) = C gamma^p per grid point.
/// p_grid must be strictly increasing, within [1,d].
EffortCurve exp_decay_curve(const DecayModel& model, int d, double q,
                            const std::vector<int>& p_grid,
                            const EffortOptions& options);

/// Effort grid for polynomial decay: alpha(p) = C p^{-s}.
EffortCurve poly_decay_curve(const DecayModel& model, int d, double q,
                             const std::vector<int>& p_grid,
                             const EffortOptions& options);

/// sigma at expected-size index k for the sparse two-level spectrum,
/// computed from first principles as lambda_d/(lambda_d + tail alpha).
/// k in [0, d-1]; IncludeK additionally requires k >= 1.
double sparse_spectrum_sigma(const DecayModel& model, int d, int k,
                             TailConvention convention);

/// Eigenvalue decay base gamma of the squared-exponential kernel for
/// N(0, eta^2) inputs: 2 eta^2 / (l^2 + 2 eta^2 + sqrt(l^2 + 2 eta^2)).
double se_kernel_gamma(double eta, double l);

/// ESO vector v with E[M_S] <= Diag(p o v) under DPP(M/alpha):
/// v_i = M_ii / p_i with p the alpha-ridge leverage scores, so that
/// p_i v_i = M_ii identically.
Eigen::VectorXd eso_vector(const SymMatrix& m, double alpha);

/// Effort curve CSV: columns p,alpha,expected_size,sigma,T,effort with
/// '#' metadata headers.
void write_effort_csv(const EffortCurve& curve, const std::string& path);

}  // namespace detnewton
