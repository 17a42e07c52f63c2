#include "detnewton/samplers.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace detnewton {

namespace {

// Tolerance for "this eigenvalue is negative beyond round-off".
double psd_tolerance(const Spectrum& spec) {
  return 1e-10 * std::max(1.0, std::abs(spec.max_eigenvalue()));
}

void require_psd_spectrum(const Spectrum& spec, const char* where) {
  if (spec.dim() > 0 && spec.min_eigenvalue() < -psd_tolerance(spec)) {
    throw NotPsd(std::string(where) + ": matrix has eigenvalue " +
                 std::to_string(spec.min_eigenvalue()) +
                 " below -tolerance");
  }
}

void require_positive_alpha(double alpha, const char* where) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ContractViolation(std::string(where) + ": alpha must be positive");
  }
}

double binomial_approx(int n, int k) {
  double c = 1.0;
  for (int i = 1; i <= k; ++i) c *= static_cast<double>(n - k + i) / i;
  return c;
}

}  // namespace

SamplerSpec SamplerSpec::dpp(double alpha) {
  SamplerSpec s;
  s.kind = Kind::Dpp;
  s.alpha = alpha;
  return s;
}

SamplerSpec SamplerSpec::ridge_leverage(double alpha, int draws) {
  SamplerSpec s;
  s.kind = Kind::RidgeLeverage;
  s.alpha = alpha;
  s.draws = draws;
  return s;
}

SamplerSpec SamplerSpec::tau_nice(int tau) {
  SamplerSpec s;
  s.kind = Kind::TauNice;
  s.tau = tau;
  return s;
}

SamplerSpec SamplerSpec::tau_list(int tau) {
  SamplerSpec s;
  s.kind = Kind::TauList;
  s.tau = tau;
  return s;
}

SamplerSpec SamplerSpec::explicit_atoms(std::vector<CoordSubset> atoms,
                                        std::vector<double> probs) {
  SamplerSpec s;
  s.kind = Kind::Explicit;
  s.atoms = std::move(atoms);
  s.probs = std::move(probs);
  return s;
}

void SamplerSpec::validate(int d) const {
  switch (kind) {
    case Kind::Dpp:
      require_positive_alpha(alpha, "SamplerSpec(dpp)");
      break;
    case Kind::RidgeLeverage:
      require_positive_alpha(alpha, "SamplerSpec(ridge_leverage)");
      if (draws < 0) {
        throw ContractViolation("SamplerSpec(ridge_leverage): draws < 0");
      }
      break;
    case Kind::TauNice:
    case Kind::TauList:
      if (tau < 1 || tau > d) {
        throw ContractViolation("SamplerSpec: tau " + std::to_string(tau) +
                                " outside [1," + std::to_string(d) + "]");
      }
      break;
    case Kind::Explicit: {
      if (atoms.size() != probs.size() || atoms.empty()) {
        throw ContractViolation("SamplerSpec(explicit): need matching "
                                "non-empty atoms/probs");
      }
      double total = 0.0;
      for (std::size_t a = 0; a < atoms.size(); ++a) {
        if (atoms[a].dim() != d) {
          throw ContractViolation("SamplerSpec(explicit): atom ambient "
                                  "dimension mismatch");
        }
        if (probs[a] < 0.0) {
          throw ContractViolation("SamplerSpec(explicit): negative prob");
        }
        for (std::size_t b = a + 1; b < atoms.size(); ++b) {
          if (atoms[a] == atoms[b]) {
            throw ContractViolation("SamplerSpec(explicit): duplicate atom");
          }
        }
        total += probs[a];
      }
      if (std::abs(total - 1.0) > 1e-12) {
        throw ContractViolation("SamplerSpec(explicit): probs sum to " +
                                std::to_string(total));
      }
      // Properness: every coordinate must have positive marginal.
      for (int i = 0; i < d; ++i) {
        double p = 0.0;
        for (std::size_t a = 0; a < atoms.size(); ++a) {
          if (std::binary_search(atoms[a].indices().begin(),
                                 atoms[a].indices().end(), i)) {
            p += probs[a];
          }
        }
        if (!(p > 0.0)) {
          throw ContractViolation("SamplerSpec(explicit): coordinate " +
                                  std::to_string(i) +
                                  " has zero marginal (improper sampling)");
        }
      }
      break;
    }
  }
}

std::string SamplerSpec::label() const {
  std::ostringstream out;
  switch (kind) {
    case Kind::Dpp:
      out << "dpp_a" << alpha;
      break;
    case Kind::RidgeLeverage:
      out << "lev_a" << alpha;
      if (draws > 0) out << "_n" << draws;
      break;
    case Kind::TauNice:
      out << "nice_" << tau;
      break;
    case Kind::TauList:
      out << "list_" << tau;
      break;
    case Kind::Explicit:
      out << "explicit_" << atoms.size();
      break;
  }
  return out.str();
}

double dpp_normalization_logdet(const Spectrum& spec, double alpha) {
  require_positive_alpha(alpha, "dpp_normalization_logdet");
  require_psd_spectrum(spec, "dpp_normalization_logdet");
  double acc = 0.0;
  for (int i = 0; i < spec.dim(); ++i) {
    acc += std::log1p(std::max(0.0, spec.eigenvalues(i)) / alpha);
  }
  return acc;
}

double dpp_normalization_logdet(const SymMatrix& m, double alpha) {
  return dpp_normalization_logdet(sym_eig(m), alpha);
}

double dpp_expected_size(const Spectrum& spec, double alpha) {
  require_positive_alpha(alpha, "dpp_expected_size");
  double acc = 0.0;
  for (int i = 0; i < spec.dim(); ++i) {
    const double l = std::max(0.0, spec.eigenvalues(i));
    acc += l / (l + alpha);
  }
  return acc;
}

double alpha_for_expected_size(const Spectrum& spec, double k) {
  const int d = spec.dim();
  double lmax = 0.0, lmin_pos = 0.0;
  int rank = 0;
  for (int i = 0; i < d; ++i) {
    const double l = spec.eigenvalues(i);
    if (l > 0.0) {
      ++rank;
      lmax = std::max(lmax, l);
      lmin_pos = (lmin_pos == 0.0) ? l : std::min(lmin_pos, l);
    }
  }
  if (!(k > 0.0) || k >= rank) {
    throw InfeasibleSize("alpha_for_expected_size: k = " + std::to_string(k) +
                         " outside (0, rank=" + std::to_string(rank) + ")");
  }
  // E|S| is strictly decreasing in alpha; bisect on log(alpha) over a
  // bracket wide enough for any spectrum scale.
  double lo = std::log(lmin_pos * k / (d - k)) - 60.0;
  double hi = std::log(lmax * d / k) + 60.0;
  double alpha = std::exp(0.5 * (lo + hi));
  for (int it = 0; it < 200; ++it) {
    alpha = std::exp(0.5 * (lo + hi));
    const double e = dpp_expected_size(spec, alpha);
    if (std::abs(e - k) <= 1e-9) return alpha;
    if (e > k) {
      lo = std::log(alpha);  // too many: increase alpha
    } else {
      hi = std::log(alpha);
    }
  }
  const double residual = std::abs(dpp_expected_size(spec, alpha) - k);
  throw NumericalFailure(
      "alpha_for_expected_size: bisection did not reach tolerance", residual);
}

Eigen::VectorXd ridge_leverage_scores(const Spectrum& spec, double alpha) {
  require_positive_alpha(alpha, "ridge_leverage_scores");
  require_psd_spectrum(spec, "ridge_leverage_scores");
  const int d = spec.dim();
  Eigen::VectorXd weights(d);
  for (int j = 0; j < d; ++j) {
    const double l = std::max(0.0, spec.eigenvalues(j));
    weights(j) = l / (l + alpha);
  }
  // score_i = sum_j V_ij^2 * lambda_j/(lambda_j+alpha)
  return spec.eigenvectors.cwiseAbs2() * weights;
}

Eigen::VectorXd ridge_leverage_scores(const SymMatrix& m, double alpha) {
  return ridge_leverage_scores(sym_eig(m), alpha);
}

CoordSubset dpp_sample(const Spectrum& spec, double alpha, RngStream& rng) {
  require_positive_alpha(alpha, "dpp_sample");
  require_psd_spectrum(spec, "dpp_sample");
  const int d = spec.dim();

  for (int attempt = 0; attempt < 10; ++attempt) {
    // Phase 1: mark eigenpairs independently.
    std::vector<int> marked;
    for (int i = 0; i < d; ++i) {
      const double l = std::max(0.0, spec.eigenvalues(i));
      if (rng.next_bernoulli(l / (l + alpha))) marked.push_back(i);
    }
    const int m = static_cast<int>(marked.size());
    if (m == 0) return CoordSubset::empty(d);

    Eigen::MatrixXd v(d, m);
    for (int c = 0; c < m; ++c) v.col(c) = spec.eigenvectors.col(marked[c]);

    // Phase 2: projection-DPP elimination.
    std::vector<int> selected;
    bool breakdown = false;
    while (v.cols() > 0) {
      const Eigen::VectorXd row_sq = v.cwiseAbs2().rowwise().sum();
      const double total = row_sq.sum();
      if (total <= 1e-12) {
        breakdown = true;
        break;
      }
      double u = rng.next_double() * total;
      int j = d - 1;
      for (int i = 0; i < d; ++i) {
        u -= row_sq(i);
        if (u <= 0.0) {
          j = i;
          break;
        }
      }
      selected.push_back(j);
      if (v.cols() == 1) break;

      // Eliminate coordinate j: pivot on the column with the largest
      // j-th entry, zero the j-th row of the others, drop the pivot,
      // then restore orthonormality with a thin QR.
      int pivot = 0;
      v.row(j).cwiseAbs().maxCoeff(&pivot);
      if (std::abs(v(j, pivot)) <= 1e-12) {
        breakdown = true;
        break;
      }
      const Eigen::VectorXd pivot_col = v.col(pivot);
      const double pivot_entry = v(j, pivot);
      Eigen::MatrixXd next(d, v.cols() - 1);
      int c_out = 0;
      for (int c = 0; c < v.cols(); ++c) {
        if (c == pivot) continue;
        next.col(c_out) = v.col(c) - (v(j, c) / pivot_entry) * pivot_col;
        next(j, c_out) = 0.0;
        ++c_out;
      }
      Eigen::HouseholderQR<Eigen::MatrixXd> qr(next);
      v = qr.householderQ() * Eigen::MatrixXd::Identity(d, next.cols());
      v.row(j).setZero();
    }
    if (!breakdown) return CoordSubset(d, std::move(selected));
  }
  throw NumericalFailure(
      "dpp_sample: projection elimination broke down 10 times", 0.0);
}

CoordSubset leverage_sample(const Eigen::VectorXd& scores, RngStream& rng) {
  std::vector<int> idx;
  for (int i = 0; i < scores.size(); ++i) {
    if (rng.next_bernoulli(scores(i))) idx.push_back(i);
  }
  return CoordSubset(static_cast<int>(scores.size()), std::move(idx));
}

CoordSubset leverage_sample(const SymMatrix& m, double alpha, RngStream& rng) {
  return leverage_sample(ridge_leverage_scores(m, alpha), rng);
}

CoordSubset tau_nice_sample(int d, int tau, RngStream& rng) {
  if (tau < 1 || tau > d) {
    throw ContractViolation("tau_nice_sample: tau outside [1,d]");
  }
  std::vector<int> pool(d);
  for (int i = 0; i < d; ++i) pool[i] = i;
  for (int t = 0; t < tau; ++t) {
    const int r = t + static_cast<int>(rng.next_below(d - t));
    std::swap(pool[t], pool[r]);
  }
  pool.resize(tau);
  return CoordSubset(d, std::move(pool));
}

CoordSubset tau_list_sample(int d, int tau, RngStream& rng) {
  if (tau < 1 || tau > d) {
    throw ContractViolation("tau_list_sample: tau outside [1,d]");
  }
  const int start = static_cast<int>(rng.next_below(d - tau + 1));
  std::vector<int> idx(tau);
  for (int t = 0; t < tau; ++t) idx[t] = start + t;
  return CoordSubset(d, std::move(idx));
}

std::vector<double> dpp_subset_probabilities(const SymMatrix& m, double alpha) {
  const int d = m.dim();
  if (d > kMaxEnumerationDim) {
    throw EnumerationTooLarge("dpp_subset_probabilities: d = " +
                              std::to_string(d) + " > " +
                              std::to_string(kMaxEnumerationDim));
  }
  const double log_z = dpp_normalization_logdet(m, alpha);
  const std::uint64_t n = 1ULL << d;
  std::vector<double> probs(n);
  for (std::uint64_t mask = 0; mask < n; ++mask) {
    const CoordSubset s = CoordSubset::from_mask(d, mask);
    double log_det;
    if (s.size() == 0) {
      log_det = 0.0;
    } else {
      const Eigen::MatrixXd sub =
          principal_submatrix(m, s).mat() / alpha;
      const double det = sub.determinant();
      if (det <= 0.0) {
        probs[mask] = 0.0;  // p.s.d. round-off
        continue;
      }
      log_det = std::log(det);
    }
    probs[mask] = std::exp(log_det - log_z);
  }
  return probs;
}

SymMatrix brute_force_expected_pinv(const SymMatrix& m, double alpha) {
  const int d = m.dim();
  const std::vector<double> probs = dpp_subset_probabilities(m, alpha);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (std::uint64_t mask = 0; mask < probs.size(); ++mask) {
    if (probs[mask] == 0.0) continue;
    acc += probs[mask] * placed_pinv(m, CoordSubset::from_mask(d, mask)).mat();
  }
  return SymMatrix(std::move(acc));
}

SymMatrix brute_force_expected_Msub(const SymMatrix& m, double alpha) {
  const int d = m.dim();
  const std::vector<double> probs = dpp_subset_probabilities(m, alpha);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(d, d);
  for (std::uint64_t mask = 0; mask < probs.size(); ++mask) {
    if (probs[mask] == 0.0) continue;
    const CoordSubset s = CoordSubset::from_mask(d, mask);
    for (int a = 0; a < s.size(); ++a) {
      for (int b = 0; b < s.size(); ++b) {
        acc(s[a], s[b]) += probs[mask] * m(s[a], s[b]);
      }
    }
  }
  return SymMatrix(std::move(acc));
}

namespace {

// Enumerates (subset, probability) pairs of a sampler and feeds them to
// a callback. Shared by the expectation and marginal oracles.
template <typename F>
void for_each_atom(const SymMatrix& m, const SamplerSpec& spec, F&& fn) {
  const int d = m.dim();
  spec.validate(d);
  switch (spec.kind) {
    case SamplerSpec::Kind::Dpp: {
      const std::vector<double> probs = dpp_subset_probabilities(m, spec.alpha);
      for (std::uint64_t mask = 0; mask < probs.size(); ++mask) {
        if (probs[mask] > 0.0) fn(CoordSubset::from_mask(d, mask), probs[mask]);
      }
      return;
    }
    case SamplerSpec::Kind::RidgeLeverage: {
      if (spec.draws > 0) {
        throw UnsupportedVariant(
            "enumeration of i.i.d.-draw leverage sampling is not supported");
      }
      if (d > kMaxEnumerationDim) {
        throw EnumerationTooLarge("leverage enumeration: d too large");
      }
      const Eigen::VectorXd p = ridge_leverage_scores(m, spec.alpha);
      const std::uint64_t n = 1ULL << d;
      for (std::uint64_t mask = 0; mask < n; ++mask) {
        double prob = 1.0;
        for (int i = 0; i < d; ++i) {
          prob *= (mask & (1ULL << i)) ? p(i) : 1.0 - p(i);
        }
        if (prob > 0.0) fn(CoordSubset::from_mask(d, mask), prob);
      }
      return;
    }
    case SamplerSpec::Kind::TauNice: {
      const double count = binomial_approx(d, spec.tau);
      if (count > 1e6) {
        throw EnumerationTooLarge("tau-nice enumeration: C(d,tau) > 1e6");
      }
      const double prob = 1.0 / count;
      // Odometer over all size-tau combinations in lexicographic order.
      std::vector<int> comb(spec.tau);
      for (int t = 0; t < spec.tau; ++t) comb[t] = t;
      for (;;) {
        fn(CoordSubset(d, comb), prob);
        int t = spec.tau - 1;
        while (t >= 0 && comb[t] == d - spec.tau + t) --t;
        if (t < 0) break;
        ++comb[t];
        for (int r = t + 1; r < spec.tau; ++r) comb[r] = comb[r - 1] + 1;
      }
      return;
    }
    case SamplerSpec::Kind::TauList: {
      const int windows = d - spec.tau + 1;
      for (int start = 0; start < windows; ++start) {
        std::vector<int> idx(spec.tau);
        for (int t = 0; t < spec.tau; ++t) idx[t] = start + t;
        fn(CoordSubset(d, std::move(idx)), 1.0 / windows);
      }
      return;
    }
    case SamplerSpec::Kind::Explicit: {
      for (std::size_t a = 0; a < spec.atoms.size(); ++a) {
        if (spec.probs[a] > 0.0) fn(spec.atoms[a], spec.probs[a]);
      }
      return;
    }
  }
}

}  // namespace

SymMatrix expected_placed_pinv(const SymMatrix& m, const SamplerSpec& spec) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(m.dim(), m.dim());
  for_each_atom(m, spec, [&](const CoordSubset& s, double prob) {
    acc += prob * placed_pinv(m, s).mat();
  });
  return SymMatrix(std::move(acc));
}

Eigen::VectorXd sampler_marginals(const SymMatrix& m, const SamplerSpec& spec) {
  const int d = m.dim();
  spec.validate(d);
  switch (spec.kind) {
    case SamplerSpec::Kind::Dpp:
      return ridge_leverage_scores(m, spec.alpha);
    case SamplerSpec::Kind::RidgeLeverage: {
      const Eigen::VectorXd p = ridge_leverage_scores(m, spec.alpha);
      if (spec.draws == 0) return p;
      const double total = p.sum();
      Eigen::VectorXd out(d);
      for (int i = 0; i < d; ++i) {
        out(i) = 1.0 - std::pow(1.0 - p(i) / total, spec.draws);
      }
      return out;
    }
    case SamplerSpec::Kind::TauNice:
      return Eigen::VectorXd::Constant(d, static_cast<double>(spec.tau) / d);
    case SamplerSpec::Kind::TauList: {
      const int windows = d - spec.tau + 1;
      Eigen::VectorXd out(d);
      for (int i = 0; i < d; ++i) {
        const int first = std::max(0, i - spec.tau + 1);
        const int last = std::min(i, d - spec.tau);
        out(i) = static_cast<double>(last - first + 1) / windows;
      }
      return out;
    }
    case SamplerSpec::Kind::Explicit: {
      Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
      for (std::size_t a = 0; a < spec.atoms.size(); ++a) {
        for (int i : spec.atoms[a].indices()) out(i) += spec.probs[a];
      }
      return out;
    }
  }
  throw Error("sampler_marginals: unreachable");
}

double sampler_expected_size(const SymMatrix& m, const SamplerSpec& spec) {
  return sampler_marginals(m, spec).sum();
}

PreparedSampler::PreparedSampler(SamplerSpec spec, const SymMatrix& metric)
    : spec_(std::move(spec)), dim_(metric.dim()) {
  spec_.validate(dim_);
  switch (spec_.kind) {
    case SamplerSpec::Kind::Dpp:
      spectrum_ = sym_eig(metric);
      require_psd_spectrum(spectrum_, "PreparedSampler(dpp)");
      expected_size_ = dpp_expected_size(spectrum_, spec_.alpha);
      break;
    case SamplerSpec::Kind::RidgeLeverage:
      spectrum_ = sym_eig(metric);
      scores_ = ridge_leverage_scores(spectrum_, spec_.alpha);
      if (spec_.draws == 0) {
        expected_size_ = scores_.sum();
      } else {
        const double total = scores_.sum();
        expected_size_ = 0.0;
        for (int i = 0; i < dim_; ++i) {
          expected_size_ +=
              1.0 - std::pow(1.0 - scores_(i) / total, spec_.draws);
        }
      }
      break;
    case SamplerSpec::Kind::TauNice:
    case SamplerSpec::Kind::TauList:
      expected_size_ = spec_.tau;
      break;
    case SamplerSpec::Kind::Explicit: {
      expected_size_ = 0.0;
      for (std::size_t a = 0; a < spec_.atoms.size(); ++a) {
        expected_size_ += spec_.probs[a] * spec_.atoms[a].size();
      }
      break;
    }
  }
}

CoordSubset PreparedSampler::draw(RngStream& rng) const {
  switch (spec_.kind) {
    case SamplerSpec::Kind::Dpp:
      return dpp_sample(spectrum_, spec_.alpha, rng);
    case SamplerSpec::Kind::RidgeLeverage: {
      if (spec_.draws == 0) return leverage_sample(scores_, rng);
      // i.i.d. score-proportional draws, deduplicated.
      const double total = scores_.sum();
      std::vector<int> idx;
      for (int t = 0; t < spec_.draws; ++t) {
        double u = rng.next_double() * total;
        int j = dim_ - 1;
        for (int i = 0; i < dim_; ++i) {
          u -= scores_(i);
          if (u <= 0.0) {
            j = i;
            break;
          }
        }
        if (std::find(idx.begin(), idx.end(), j) == idx.end()) idx.push_back(j);
      }
      return CoordSubset(dim_, std::move(idx));
    }
    case SamplerSpec::Kind::TauNice:
      return tau_nice_sample(dim_, spec_.tau, rng);
    case SamplerSpec::Kind::TauList:
      return tau_list_sample(dim_, spec_.tau, rng);
    case SamplerSpec::Kind::Explicit: {
      double u = rng.next_double();
      for (std::size_t a = 0; a < spec_.atoms.size(); ++a) {
        u -= spec_.probs[a];
        if (u <= 0.0) return spec_.atoms[a];
      }
      return spec_.atoms.back();
    }
  }
  throw Error("PreparedSampler::draw: unreachable");
}

std::optional<double> PreparedSampler::closed_form_sigma(double kappa) const {
  if (spec_.kind != SamplerSpec::Kind::Dpp &&
      spec_.kind != SamplerSpec::Kind::RidgeLeverage) {
    return std::nullopt;
  }
  const double lam_min = spectrum_.min_eigenvalue();
  if (!(lam_min > 0.0)) return std::nullopt;
  return kappa * lam_min / (lam_min + spec_.alpha);
}

}  // namespace detnewton
