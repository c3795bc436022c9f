#pragma once

#include <vector>

#include "corrgan/correlation.hpp"
#include "corrgan/errors.hpp"

namespace corrgan::repair {

struct RepairConfig {
  /// Convergence threshold on the Frobenius distance between successive iterates.
  double tol = 1e-7;
  int max_iter = 200;
  /// Eigenvalues below this level are raised to it in the PSD projection.
  double psd_floor = 0.0;

  void validate() const;
};

/// (A + A^T) / 2, the Frobenius-nearest symmetric matrix.
RawMatrix symmetrize(const RawMatrix& m);

/// Frobenius-nearest matrix with eigenvalues >= floor. Input must be symmetric.
RawMatrix project_psd(const RawMatrix& m, double floor = 0.0);

/// Copy with the diagonal set to 1.
RawMatrix project_unit_diagonal(const RawMatrix& m);

struct RepairResult {
  CorrelationMatrix matrix;
  int iterations = 0;
  /// Frobenius distance between the last two iterates.
  double residual = 0.0;
  /// Frobenius distance from the symmetrized input to the projected iterate,
  /// one entry per iteration.
  std::vector<double> distance_trace;
  /// Largest step-to-step increase in distance_trace (0 when non-increasing).
  /// The corrected scheme does not guarantee monotone distances, so this is
  /// reported rather than asserted.
  double max_distance_increase = 0.0;
};

/// Thrown when max_iter is reached; carries the last iterate.
class NonConvergenceError : public NumericalError {
 public:
  NonConvergenceError(const std::string& what, RawMatrix last, double residual)
      : NumericalError(what), last_(std::move(last)), residual_(residual) {}
  const RawMatrix& last_iterate() const noexcept { return last_; }
  double residual() const noexcept { return residual_; }

 private:
  RawMatrix last_;
  double residual_;
};

/// Nearest correlation matrix in the Frobenius norm by alternating
/// projections onto the PSD cone and the unit-diagonal set, with the
/// correction term carried across PSD steps.
///
/// After convergence the iterate is cleaned: eigenvalues are clipped at zero,
/// the matrix is rescaled to unit diagonal (a congruence, so PSD is kept) and
/// the diagonal is set to exactly 1.
RepairResult nearest_correlation(const RawMatrix& m, const RepairConfig& cfg = {});

}  // namespace corrgan::repair
