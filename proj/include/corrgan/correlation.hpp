#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace corrgan {

using Index = Eigen::Index;
using Permutation = std::vector<Index>;

/// Default tolerances: double-precision eigensolver noise scale.
struct Tolerances {
  double psd_tol = 1e-8;
  double diag_tol = 1e-8;
};

/// Square matrix with finite entries and no further structure.
///
/// Houses generator output before repair: diagonal off by a few thousandths,
/// slight asymmetry, small negative eigenvalues are all representable here.
class RawMatrix {
 public:
  RawMatrix() = default;
  /// Throws StructuralError if `values` is not square, empty or has non-finite entries.
  explicit RawMatrix(Eigen::MatrixXd values);

  Index n() const noexcept { return values_.rows(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double operator()(Index i, Index j) const { return values_(i, j); }

  bool operator==(const RawMatrix& other) const { return values_ == other.values_; }

 private:
  Eigen::MatrixXd values_;
};

/// Exact correlation matrix: symmetric, unit diagonal, PSD within tolerance,
/// off-diagonal entries in [-1, 1].
///
/// Only the upper triangle of the input is read; the lower triangle is
/// mirrored from it, so an instance is symmetric by construction.
class CorrelationMatrix {
 public:
  /// Validating constructor. The diagonal must be within diag_tol of 1 and
  /// is then set to exactly 1; off-diagonal entries within diag_tol outside
  /// [-1, 1] are clipped. Throws DomainError naming the offending quantity.
  static CorrelationMatrix from_values(const Eigen::MatrixXd& values, const Tolerances& tol = {});

  /// No checks beyond shape. For transforms that provably preserve the
  /// invariants (permutation, eigenvalue clipping with rescaling).
  static CorrelationMatrix assume_valid(Eigen::MatrixXd symmetric_unit_diagonal);

  static CorrelationMatrix identity(Index n);

  Index n() const noexcept { return values_.rows(); }
  const Eigen::MatrixXd& values() const noexcept { return values_; }
  double operator()(Index i, Index j) const { return values_(i, j); }
  RawMatrix to_raw() const { return RawMatrix(values_); }

  bool operator==(const CorrelationMatrix& other) const { return values_ == other.values_; }

 private:
  explicit CorrelationMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {}
  Eigen::MatrixXd values_;
};

/// Upper-triangular coefficients (C12, ..., C1n, C23, ..., C(n-1)n).
class ElliptopeVector {
 public:
  /// Throws ShapeError unless the length is n(n-1)/2 for some n >= 2.
  explicit ElliptopeVector(Eigen::VectorXd coeffs);

  Index n() const noexcept { return n_; }
  const Eigen::VectorXd& coeffs() const noexcept { return coeffs_; }
  bool operator==(const ElliptopeVector& other) const { return coeffs_ == other.coeffs_; }

 private:
  Index n_ = 0;
  Eigen::VectorXd coeffs_;
};

struct ValidationReport {
  bool is_valid = false;
  double max_diag_deviation = 0.0;
  double max_asymmetry = 0.0;
  double min_eigenvalue = 0.0;
  Index out_of_range_count = 0;
};

ValidationReport validate(const RawMatrix& m, double psd_tol = 1e-8, double diag_tol = 1e-8);
inline ValidationReport validate(const CorrelationMatrix& m, double psd_tol = 1e-8,
                                 double diag_tol = 1e-8) {
  return validate(m.to_raw(), psd_tol, diag_tol);
}

CorrelationMatrix from_upper_vector(const ElliptopeVector& v, double psd_tol = 1e-8);
ElliptopeVector to_upper_vector(const CorrelationMatrix& m);

/// result(i, j) = m(perm[i], perm[j]). Throws StructuralError if perm is not a bijection.
CorrelationMatrix permute(const CorrelationMatrix& m, std::span<const Index> perm);

/// Throws StructuralError if perm is not a bijection on {0..n-1}.
void check_permutation(std::span<const Index> perm, Index n);
Permutation inverse_permutation(std::span<const Index> perm);

/// Eigenvalues of (A + A^T) / 2 in ascending order.
Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a);

/// Number of assets n for a triangular length n(n-1)/2, or -1.
Index side_from_upper_length(Index length) noexcept;

}  // namespace corrgan
