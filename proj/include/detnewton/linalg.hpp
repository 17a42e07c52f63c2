#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "detnewton/errors.hpp"

namespace detnewton {

/// Positive-(semi)definiteness evidence attached to a SymMatrix by the
/// code that built it. Unknown means no claim is made.
enum class Definiteness { Unknown, PositiveSemiDefinite, PositiveDefinite };

/// Dense real symmetric matrix. Construction validates near-symmetry
/// (|m_ij - m_ji| <= 1e-12 * (1 + max|m|)) and then symmetrizes exactly,
/// so entries(i,j) == entries(j,i) holds bit-for-bit afterwards.
/// Immutable; safe to share across threads.
class SymMatrix {
 public:
  SymMatrix() : m_(0, 0) {}
  explicit SymMatrix(Eigen::MatrixXd m,
                     Definiteness evidence = Definiteness::Unknown);

  static SymMatrix Zero(int dim);
  static SymMatrix Identity(int dim);
  static SymMatrix FromDiagonal(const Eigen::VectorXd& diag);

  int dim() const { return static_cast<int>(m_.rows()); }
  const Eigen::MatrixXd& mat() const { return m_; }
  double operator()(int i, int j) const { return m_(i, j); }
  Definiteness evidence() const { return evidence_; }

 private:
  Eigen::MatrixXd m_;
  Definiteness evidence_ = Definiteness::Unknown;
};

/// Eigendecomposition of a SymMatrix: eigenvalues in decreasing order,
/// eigenvectors as the matching orthonormal columns.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;

  int dim() const { return static_cast<int>(eigenvalues.size()); }
  double max_eigenvalue() const { return eigenvalues.size() ? eigenvalues(0) : 0.0; }
  double min_eigenvalue() const {
    return eigenvalues.size() ? eigenvalues(eigenvalues.size() - 1) : 0.0;
  }
};

/// Sorted duplicate-free subset of {0..dim-1}. The empty set is legal.
class CoordSubset {
 public:
  CoordSubset(int dim, std::vector<int> indices);

  static CoordSubset empty(int dim) { return CoordSubset(dim, {}); }
  static CoordSubset full(int dim);
  /// Subset from a bitmask over the low `dim` bits (dim <= 63).
  static CoordSubset from_mask(int dim, std::uint64_t mask);

  int dim() const { return dim_; }
  int size() const { return static_cast<int>(indices_.size()); }
  bool is_empty() const { return indices_.empty(); }
  const std::vector<int>& indices() const { return indices_; }
  int operator[](int a) const { return indices_[a]; }

  bool operator==(const CoordSubset& o) const {
    return dim_ == o.dim_ && indices_ == o.indices_;
  }

 private:
  int dim_;
  std::vector<int> indices_;
};

/// M_SS: the |S| x |S| principal submatrix of M.
SymMatrix principal_submatrix(const SymMatrix& m, const CoordSubset& s);

/// (M_S)^+: Moore-Penrose pseudoinverse of M_SS placed back at rows and
/// columns S of a d x d matrix, zeros elsewhere. Eigenvalues of M_SS
/// with |lambda| <= 1e-12 * max|lambda| are treated as zero.
SymMatrix placed_pinv(const SymMatrix& m, const CoordSubset& s);

/// Pseudoinverse cutoff used by placed_pinv, exposed for reuse.
inline constexpr double kPinvRelCutoff = 1e-12;

/// Full eigendecomposition, eigenvalues sorted decreasing.
Spectrum sym_eig(const SymMatrix& m);

/// True iff A <= B in the p.s.d. order up to tol: lambda_min(B - A) >= -tol.
bool psd_order_leq(const SymMatrix& a, const SymMatrix& b, double tol);

/// Reassemble V diag(lambda) V^T from a Spectrum.
SymMatrix reconstruct(const Spectrum& s);

/// M^{1/2} for a p.s.d. matrix (negative round-off eigenvalues clamped to 0).
SymMatrix sqrt_psd(const SymMatrix& m);

/// Matrix exchange format: one CSV row per matrix row, '#' comment lines.
void write_matrix_csv(const SymMatrix& m, const std::string& path,
                      const std::vector<std::string>& header_comments = {});
SymMatrix read_matrix_csv(const std::string& path);

/// Shortest decimal form that round-trips to the same double. Used by
/// every CSV writer so outputs are byte-stable.
std::string format_double(double x);

}  // namespace detnewton
