#include "detnewton/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace detnewton {

SymMatrix::SymMatrix(Eigen::MatrixXd m, Definiteness evidence)
    : m_(std::move(m)), evidence_(evidence) {
  if (m_.rows() != m_.cols()) {
    throw ContractViolation("SymMatrix: matrix must be square, got " +
                            std::to_string(m_.rows()) + "x" +
                            std::to_string(m_.cols()));
  }
  if (m_.size() > 0 && !m_.allFinite()) {
    throw ContractViolation("SymMatrix: entries must be finite");
  }
  const double scale = 1.0 + (m_.size() ? m_.cwiseAbs().maxCoeff() : 0.0);
  const double asym = m_.size() ? (m_ - m_.transpose()).cwiseAbs().maxCoeff() : 0.0;
  if (asym > 1e-12 * scale) {
    throw ContractViolation("SymMatrix: asymmetry " + std::to_string(asym) +
                            " exceeds tolerance");
  }
  m_ = ((m_ + m_.transpose()) * 0.5).eval();
}

SymMatrix SymMatrix::Zero(int dim) {
  return SymMatrix(Eigen::MatrixXd::Zero(dim, dim),
                   Definiteness::PositiveSemiDefinite);
}

SymMatrix SymMatrix::Identity(int dim) {
  return SymMatrix(Eigen::MatrixXd::Identity(dim, dim),
                   Definiteness::PositiveDefinite);
}

SymMatrix SymMatrix::FromDiagonal(const Eigen::VectorXd& diag) {
  Definiteness ev = Definiteness::Unknown;
  if (diag.size() == 0 || diag.minCoeff() > 0.0) {
    ev = Definiteness::PositiveDefinite;
  } else if (diag.minCoeff() >= 0.0) {
    ev = Definiteness::PositiveSemiDefinite;
  }
  return SymMatrix(Eigen::MatrixXd(diag.asDiagonal()), ev);
}

CoordSubset::CoordSubset(int dim, std::vector<int> indices)
    : dim_(dim), indices_(std::move(indices)) {
  if (dim_ < 0) throw ContractViolation("CoordSubset: negative dimension");
  std::sort(indices_.begin(), indices_.end());
  for (std::size_t a = 0; a < indices_.size(); ++a) {
    if (indices_[a] < 0 || indices_[a] >= dim_) {
      throw ContractViolation("CoordSubset: index " +
                              std::to_string(indices_[a]) +
                              " out of range [0," + std::to_string(dim_) + ")");
    }
    if (a > 0 && indices_[a] == indices_[a - 1]) {
      throw ContractViolation("CoordSubset: duplicate index " +
                              std::to_string(indices_[a]));
    }
  }
}

CoordSubset CoordSubset::full(int dim) {
  std::vector<int> idx(dim);
  for (int i = 0; i < dim; ++i) idx[i] = i;
  return CoordSubset(dim, std::move(idx));
}

CoordSubset CoordSubset::from_mask(int dim, std::uint64_t mask) {
  std::vector<int> idx;
  for (int i = 0; i < dim; ++i) {
    if (mask & (1ULL << i)) idx.push_back(i);
  }
  return CoordSubset(dim, std::move(idx));
}

SymMatrix principal_submatrix(const SymMatrix& m, const CoordSubset& s) {
  if (s.dim() != m.dim()) {
    throw ContractViolation("principal_submatrix: subset ambient dim " +
                            std::to_string(s.dim()) + " != matrix dim " +
                            std::to_string(m.dim()));
  }
  const int k = s.size();
  Eigen::MatrixXd out(k, k);
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) out(a, b) = m(s[a], s[b]);
  }
  return SymMatrix(std::move(out), m.evidence());
}

SymMatrix placed_pinv(const SymMatrix& m, const CoordSubset& s) {
  if (s.dim() != m.dim()) {
    throw ContractViolation("placed_pinv: subset ambient dim mismatch");
  }
  const int d = m.dim();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(d, d);
  const int k = s.size();
  if (k > 0) {
    const Spectrum sub = sym_eig(principal_submatrix(m, s));
    const double cutoff =
        kPinvRelCutoff * sub.eigenvalues.cwiseAbs().maxCoeff();
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) {
      if (std::abs(sub.eigenvalues(i)) > cutoff) {
        inv(i) = 1.0 / sub.eigenvalues(i);
      }
    }
    const Eigen::MatrixXd small =
        sub.eigenvectors * inv.asDiagonal() * sub.eigenvectors.transpose();
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) out(s[a], s[b]) = small(a, b);
    }
  }
  return SymMatrix(std::move(out));
}

Spectrum sym_eig(const SymMatrix& m) {
  const int d = m.dim();
  Spectrum out;
  if (d == 0) {
    out.eigenvalues = Eigen::VectorXd(0);
    out.eigenvectors = Eigen::MatrixXd(0, 0);
    return out;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.mat());
  if (solver.info() != Eigen::Success) {
    const double residual = m.mat().norm();
    throw NumericalFailure("sym_eig: eigen-solver did not converge", residual);
  }
  // Eigen returns increasing order; flip to decreasing.
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  return out;
}

bool psd_order_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
  if (a.dim() != b.dim()) {
    throw ContractViolation("psd_order_leq: dimension mismatch");
  }
  const SymMatrix diff(b.mat() - a.mat());
  return sym_eig(diff).min_eigenvalue() >= -tol;
}

SymMatrix reconstruct(const Spectrum& s) {
  return SymMatrix(s.eigenvectors * s.eigenvalues.asDiagonal() *
                   s.eigenvectors.transpose());
}

SymMatrix sqrt_psd(const SymMatrix& m) {
  const Spectrum s = sym_eig(m);
  Eigen::VectorXd root = s.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  return SymMatrix(s.eigenvectors * root.asDiagonal() *
                       s.eigenvectors.transpose(),
                   Definiteness::PositiveSemiDefinite);
}

std::string format_double(double x) {
  char buf[40];
  // Shortest form that round-trips: try increasing precision.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, x);
    if (std::strtod(buf, nullptr) == x) return buf;
  }
  return buf;
}

void write_matrix_csv(const SymMatrix& m, const std::string& path,
                      const std::vector<std::string>& header_comments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("write_matrix_csv: cannot open " + path);
  out << "# symmetric matrix, dim=" << m.dim() << ", 0-based indices\n";
  for (const auto& c : header_comments) out << "# " << c << "\n";
  for (int i = 0; i < m.dim(); ++i) {
    for (int j = 0; j < m.dim(); ++j) {
      if (j) out << ",";
      out << format_double(m(i, j));
    }
    out << "\n";
  }
}

SymMatrix read_matrix_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("read_matrix_csv: cannot open " + path);
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
  const int d = static_cast<int>(rows.size());
  Eigen::MatrixXd m(d, d);
  for (int i = 0; i < d; ++i) {
    if (static_cast<int>(rows[i].size()) != d) {
      throw Error("read_matrix_csv: ragged row " + std::to_string(i) +
                  " in " + path);
    }
    for (int j = 0; j < d; ++j) m(i, j) = rows[i][j];
  }
  return SymMatrix(std::move(m));
}

}  // namespace detnewton
