#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "detnewton/linalg.hpp"
#include "detnewton/rng.hpp"

namespace detnewton {

/// Description of a coordinate-block sampling distribution.
///
///   Dpp           S ~ DPP(M/alpha), P(S) proportional to det((M/alpha)_SS)
///   RidgeLeverage independent inclusion with the alpha-ridge leverage
///                 scores as marginals (draws == 0), or `draws` i.i.d.
///                 score-proportional index draws, deduplicated (draws > 0)
///   TauNice       uniform over all size-tau subsets
///   TauList       uniform over the d-tau+1 consecutive windows of size tau
///   Explicit      finite atom list with probabilities
struct SamplerSpec {
  enum class Kind { Dpp, RidgeLeverage, TauNice, TauList, Explicit };

  Kind kind = Kind::Dpp;
  double alpha = 1.0;                // Dpp, RidgeLeverage
  int draws = 0;                     // RidgeLeverage: 0 = independent inclusion
  int tau = 1;                       // TauNice, TauList
  std::vector<CoordSubset> atoms;    // Explicit
  std::vector<double> probs;         // Explicit

  static SamplerSpec dpp(double alpha);
  static SamplerSpec ridge_leverage(double alpha, int draws = 0);
  static SamplerSpec tau_nice(int tau);
  static SamplerSpec tau_list(int tau);
  static SamplerSpec explicit_atoms(std::vector<CoordSubset> atoms,
                                    std::vector<double> probs);

  /// Validates parameter ranges and, where checkable, properness
  /// (P(i in S) > 0 for all i) against ambient dimension d.
  void validate(int d) const;

  std::string label() const;
};

// --- DPP summary statistics -------------------------------------------

/// log det(I + M/alpha) via the spectrum: sum_i log(1 + lambda_i/alpha).
double dpp_normalization_logdet(const Spectrum& spec, double alpha);
double dpp_normalization_logdet(const SymMatrix& m, double alpha);

/// E|S| under DPP(M/alpha): sum_i lambda_i / (lambda_i + alpha).
double dpp_expected_size(const Spectrum& spec, double alpha);

/// Inverts dpp_expected_size: the alpha with E|S| = k, |error| <= 1e-9.
/// Bisection on log(alpha); expected size is strictly decreasing in alpha.
double alpha_for_expected_size(const Spectrum& spec, double k);

/// alpha-ridge leverage scores: diag(M (alpha I + M)^{-1}), computed
/// exactly from the spectrum. Also the DPP(M/alpha) inclusion marginals.
Eigen::VectorXd ridge_leverage_scores(const Spectrum& spec, double alpha);
Eigen::VectorXd ridge_leverage_scores(const SymMatrix& m, double alpha);

// --- samplers ----------------------------------------------------------

/// Exact DPP(M/alpha) sample via the eigendecomposition algorithm:
/// mark eigenpair i with probability lambda_i/(lambda_i+alpha), then run
/// the projection-DPP elimination on the marked eigenvectors.
CoordSubset dpp_sample(const Spectrum& spec, double alpha, RngStream& rng);

/// Independent inclusion of each coordinate with its alpha-ridge
/// leverage score as probability (DPP marginals, no correlations).
CoordSubset leverage_sample(const Eigen::VectorXd& scores, RngStream& rng);
CoordSubset leverage_sample(const SymMatrix& m, double alpha, RngStream& rng);

/// Uniformly random size-tau subset (partial Fisher-Yates).
CoordSubset tau_nice_sample(int d, int tau, RngStream& rng);

/// Uniform over the consecutive windows {j,...,j+tau-1}.
CoordSubset tau_list_sample(int d, int tau, RngStream& rng);

// --- brute-force oracles (power-set enumeration, d <= 20) --------------

inline constexpr int kMaxEnumerationDim = 20;

/// DPP(M/alpha) subset probabilities for all 2^d subsets, indexed by
/// bitmask. Oracle building block.
std::vector<double> dpp_subset_probabilities(const SymMatrix& m, double alpha);

/// E[(M_S)^+] under DPP(M/alpha) by full enumeration.
SymMatrix brute_force_expected_pinv(const SymMatrix& m, double alpha);

/// E[M_S] under DPP(M/alpha) by full enumeration.
SymMatrix brute_force_expected_Msub(const SymMatrix& m, double alpha);

/// E[(M_S)^+] under an arbitrary SamplerSpec by enumeration over its
/// atoms (DPP/RidgeLeverage: 2^d masks; TauNice: all C(d,tau) subsets,
/// guarded at 1e6; TauList: windows; Explicit: listed atoms).
SymMatrix expected_placed_pinv(const SymMatrix& m, const SamplerSpec& spec);

/// Marginal inclusion probabilities of an arbitrary SamplerSpec,
/// computed exactly (enumeration where needed).
Eigen::VectorXd sampler_marginals(const SymMatrix& m, const SamplerSpec& spec);

/// Exact E|S| of a SamplerSpec on metric M.
double sampler_expected_size(const SymMatrix& m, const SamplerSpec& spec);

/// A sampler bound to a fixed metric: the spectrum / leverage scores are
/// computed once and reused across draws.
class PreparedSampler {
 public:
  PreparedSampler(SamplerSpec spec, const SymMatrix& metric);

  CoordSubset draw(RngStream& rng) const;
  const SamplerSpec& spec() const { return spec_; }
  int dim() const { return dim_; }
  /// Exact expected block size.
  double expected_size() const { return expected_size_; }
  /// Closed-form sigma where one exists (DPP and RidgeLeverage via the
  /// DPP rate at the same alpha); nullopt otherwise.
  std::optional<double> closed_form_sigma(double kappa) const;

 private:
  SamplerSpec spec_;
  int dim_ = 0;
  Spectrum spectrum_;           // Dpp
  Eigen::VectorXd scores_;      // RidgeLeverage
  double expected_size_ = 0.0;
};

}  // namespace detnewton
