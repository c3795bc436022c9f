#include "corrgan/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "corrgan/errors.hpp"

namespace corrgan {
namespace {

Eigen::MatrixXd mirror_upper(const Eigen::MatrixXd& values) {
  Eigen::MatrixXd out = values.triangularView<Eigen::Upper>();
  out.triangularView<Eigen::StrictlyLower>() = out.transpose().triangularView<Eigen::StrictlyLower>();
  return out;
}

}  // namespace

RawMatrix::RawMatrix(Eigen::MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() != values_.cols() || values_.rows() == 0) {
    std::ostringstream msg;
    msg << "matrix must be square and non-empty, got " << values_.rows() << "x" << values_.cols();
    throw StructuralError(msg.str());
  }
  if (!values_.allFinite()) throw StructuralError("matrix has non-finite entries");
}

CorrelationMatrix CorrelationMatrix::from_values(const Eigen::MatrixXd& values, const Tolerances& tol) {
  if (values.rows() != values.cols() || values.rows() == 0) {
    throw StructuralError("correlation matrix must be square and non-empty");
  }
  if (!values.allFinite()) throw StructuralError("correlation matrix has non-finite entries");

  Eigen::MatrixXd m = mirror_upper(values);
  const Index n = m.rows();
  for (Index i = 0; i < n; ++i) {
    if (std::abs(m(i, i) - 1.0) > tol.diag_tol) {
      std::ostringstream msg;
      msg << "diagonal entry " << i << " is " << m(i, i) << ", not 1";
      throw DomainError(msg.str());
    }
    m(i, i) = 1.0;
  }
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < j; ++i) {
      const double v = m(i, j);
      if (std::abs(v) > 1.0 + tol.diag_tol) {
        std::ostringstream msg;
        msg << "entry (" << i << "," << j << ") = " << v << " outside [-1, 1]";
        throw DomainError(msg.str());
      }
      m(i, j) = m(j, i) = std::clamp(v, -1.0, 1.0);
    }
  }
  const double min_eig = symmetric_eigenvalues(m)(0);
  if (min_eig < -tol.psd_tol) {
    std::ostringstream msg;
    msg << "matrix is not positive semidefinite: min eigenvalue " << min_eig;
    throw DomainError(msg.str());
  }
  return CorrelationMatrix(std::move(m));
}

CorrelationMatrix CorrelationMatrix::assume_valid(Eigen::MatrixXd values) {
  if (values.rows() != values.cols() || values.rows() == 0) {
    throw StructuralError("correlation matrix must be square and non-empty");
  }
  return CorrelationMatrix(std::move(values));
}

CorrelationMatrix CorrelationMatrix::identity(Index n) {
  if (n < 1) throw StructuralError("identity: n must be positive");
  return CorrelationMatrix(Eigen::MatrixXd::Identity(n, n));
}

Index side_from_upper_length(Index length) noexcept {
  if (length < 1) return -1;
  // n(n-1)/2 = L  =>  n = (1 + sqrt(1 + 8L)) / 2
  const auto n = static_cast<Index>(std::llround((1.0 + std::sqrt(1.0 + 8.0 * static_cast<double>(length))) / 2.0));
  return n * (n - 1) / 2 == length ? n : -1;
}

ElliptopeVector::ElliptopeVector(Eigen::VectorXd coeffs) : coeffs_(std::move(coeffs)) {
  n_ = side_from_upper_length(coeffs_.size());
  if (n_ < 2) {
    std::ostringstream msg;
    msg << "elliptope vector length " << coeffs_.size() << " is not n(n-1)/2 for any n >= 2";
    throw ShapeError(msg.str());
  }
}

Eigen::VectorXd symmetric_eigenvalues(const Eigen::MatrixXd& a) {
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed to converge");
  return solver.eigenvalues();
}

ValidationReport validate(const RawMatrix& m, double psd_tol, double diag_tol) {
  const Eigen::MatrixXd& a = m.values();
  ValidationReport report;
  report.max_diag_deviation = (a.diagonal().array() - 1.0).abs().maxCoeff();
  report.max_asymmetry = (a - a.transpose()).cwiseAbs().maxCoeff();
  report.min_eigenvalue = symmetric_eigenvalues(a)(0);
  report.out_of_range_count = (a.array().abs() > 1.0 + diag_tol).count();
  report.is_valid = report.max_asymmetry == 0.0 && report.max_diag_deviation <= diag_tol &&
                    report.min_eigenvalue >= -psd_tol && report.out_of_range_count == 0;
  return report;
}

CorrelationMatrix from_upper_vector(const ElliptopeVector& v, double psd_tol) {
  const Index n = v.n();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) m(i, j) = m(j, i) = v.coeffs()(k++);
  }
  return CorrelationMatrix::from_values(m, Tolerances{psd_tol, 1e-8});
}

ElliptopeVector to_upper_vector(const CorrelationMatrix& m) {
  const Index n = m.n();
  Eigen::VectorXd coeffs(n * (n - 1) / 2);
  Index k = 0;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) coeffs(k++) = m(i, j);
  }
  return ElliptopeVector(std::move(coeffs));
}

void check_permutation(std::span<const Index> perm, Index n) {
  if (static_cast<Index>(perm.size()) != n) {
    std::ostringstream msg;
    msg << "permutation has " << perm.size() << " entries, expected " << n;
    throw StructuralError(msg.str());
  }
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (const Index p : perm) {
    if (p < 0 || p >= n || seen[static_cast<std::size_t>(p)]) {
      throw StructuralError("permutation is not a bijection on {0..n-1}");
    }
    seen[static_cast<std::size_t>(p)] = true;
  }
}

Permutation inverse_permutation(std::span<const Index> perm) {
  check_permutation(perm, static_cast<Index>(perm.size()));
  Permutation inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[static_cast<std::size_t>(perm[i])] = static_cast<Index>(i);
  return inv;
}

CorrelationMatrix permute(const CorrelationMatrix& m, std::span<const Index> perm) {
  const Index n = m.n();
  check_permutation(perm, n);
  Eigen::MatrixXd out(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) out(i, j) = m(perm[i], perm[j]);
  }
  return CorrelationMatrix::assume_valid(std::move(out));
}

}  // namespace corrgan
