#include "corrgan/nearest_correlation.hpp"

#include <algorithm>
#include <sstream>

#include "corrgan/returns.hpp"

namespace corrgan::repair {

void RepairConfig::validate() const {
  if (!(tol > 0.0)) throw ConfigError("repair: tol must be > 0");
  if (max_iter < 1) throw ConfigError("repair: max_iter must be >= 1");
}

RawMatrix symmetrize(const RawMatrix& m) {
  return RawMatrix(0.5 * (m.values() + m.values().transpose()));
}

namespace {

Eigen::MatrixXd psd_part(const Eigen::MatrixXd& a, double floor) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(a);
  if (solver.info() != Eigen::Success) throw NumericalError("PSD projection: eigensolver failed");
  if (solver.eigenvalues()(0) >= floor) return a;
  const Eigen::VectorXd clipped = solver.eigenvalues().cwiseMax(floor);
  Eigen::MatrixXd out = solver.eigenvectors() * clipped.asDiagonal() * solver.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

RawMatrix project_psd(const RawMatrix& m, double floor) { return RawMatrix(psd_part(m.values(), floor)); }

RawMatrix project_unit_diagonal(const RawMatrix& m) {
  Eigen::MatrixXd out = m.values();
  out.diagonal().setOnes();
  return RawMatrix(std::move(out));
}

RepairResult nearest_correlation(const RawMatrix& m, const RepairConfig& cfg) {
  cfg.validate();
  const Eigen::MatrixXd a = symmetrize(m).values();
  const Index n = a.rows();

  Eigen::MatrixXd y = a;
  Eigen::MatrixXd correction = Eigen::MatrixXd::Zero(n, n);
  RepairResult result{CorrelationMatrix::identity(n), 0, 0.0, {}};

  for (int k = 1; k <= cfg.max_iter; ++k) {
    const Eigen::MatrixXd r = y - correction;
    const Eigen::MatrixXd x = psd_part(r, cfg.psd_floor);
    correction = x - r;
    Eigen::MatrixXd y_next = x;
    y_next.diagonal().setOnes();

    result.residual = (y_next - y).norm();
    result.iterations = k;
    result.distance_trace.push_back((y_next - a).norm());
    if (k > 1) {
      const auto& t = result.distance_trace;
      result.max_distance_increase = std::max(result.max_distance_increase, t[t.size() - 1] - t[t.size() - 2]);
    }
    y = std::move(y_next);
    if (result.residual < cfg.tol) {
      if (symmetric_eigenvalues(y)(0) < 0.0) y = clip_to_psd_correlation(y);
      result.matrix = CorrelationMatrix::from_values(y);
      return result;
    }
  }
  std::ostringstream msg;
  msg << "nearest correlation did not converge in " << cfg.max_iter << " iterations (residual "
      << result.residual << ")";
  throw NonConvergenceError(msg.str(), RawMatrix(y), result.residual);
}

}  // namespace corrgan::repair
