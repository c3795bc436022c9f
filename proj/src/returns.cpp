#include "corrgan/returns.hpp"

#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "corrgan/errors.hpp"

namespace corrgan {

bool is_iso_date(const std::string& s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (const std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u}) {
    if (s[i] < '0' || s[i] > '9') return false;
  }
  const int y = std::stoi(s.substr(0, 4));
  const unsigned m = static_cast<unsigned>(std::stoi(s.substr(5, 2)));
  const unsigned d = static_cast<unsigned>(std::stoi(s.substr(8, 2)));
  return std::chrono::year_month_day{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}}.ok();
}

ReturnsPanel::ReturnsPanel(std::vector<std::string> tickers, std::vector<std::string> dates,
                           Eigen::MatrixXd returns, ReturnKind kind)
    : tickers_(std::move(tickers)), dates_(std::move(dates)), returns_(std::move(returns)), kind_(kind) {
  if (returns_.rows() < 2) throw DegenerateDataError("returns panel needs at least 2 rows");
  if (returns_.cols() < 2) throw DegenerateDataError("returns panel needs at least 2 assets");
  if (static_cast<Index>(tickers_.size()) != returns_.cols()) {
    throw ShapeError("ticker count does not match column count");
  }
  if (static_cast<Index>(dates_.size()) != returns_.rows()) {
    throw ShapeError("date count does not match row count");
  }
  if (!returns_.allFinite()) throw StructuralError("returns panel has non-finite entries");
  std::set<std::string> seen;
  for (const auto& t : tickers_) {
    if (!seen.insert(t).second) throw StructuralError("duplicate ticker: " + t);
  }
  for (std::size_t i = 0; i < dates_.size(); ++i) {
    if (!is_iso_date(dates_[i])) throw StructuralError("invalid ISO-8601 date: " + dates_[i]);
    if (i > 0 && !(dates_[i - 1] < dates_[i])) {
      throw StructuralError("dates not strictly increasing at " + dates_[i]);
    }
  }
}

ReturnsPanel ReturnsPanel::rows(Index first, Index count) const {
  if (first < 0 || count < 0 || first + count > days()) throw ShapeError("row slice out of range");
  std::vector<std::string> d(dates_.begin() + first, dates_.begin() + first + count);
  return ReturnsPanel(tickers_, std::move(d), returns_.middleRows(first, count), kind_);
}

ReturnsPanel ReturnsPanel::columns(std::span<const Index> which) const {
  std::vector<std::string> t;
  Eigen::MatrixXd r(days(), static_cast<Index>(which.size()));
  for (std::size_t k = 0; k < which.size(); ++k) {
    const Index c = which[k];
    if (c < 0 || c >= assets()) throw ShapeError("column index out of range");
    t.push_back(tickers_[static_cast<std::size_t>(c)]);
    r.col(static_cast<Index>(k)) = returns_.col(c);
  }
  return ReturnsPanel(std::move(t), dates_, std::move(r), kind_);
}

Eigen::MatrixXd clip_to_psd_correlation(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (m + m.transpose()));
  if (solver.info() != Eigen::Success) throw NumericalError("symmetric eigensolver failed to converge");
  const Eigen::VectorXd clipped = solver.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = solver.eigenvectors() * clipped.asDiagonal() * solver.eigenvectors().transpose();
  const Eigen::VectorXd scale = out.diagonal().cwiseSqrt().cwiseInverse();
  out = scale.asDiagonal() * out * scale.asDiagonal();
  out = 0.5 * (out + out.transpose()).eval();
  out.diagonal().setOnes();
  return out;
}

CorrelationMatrix estimate_correlation(const ReturnsPanel& panel, double psd_tol) {
  const Eigen::MatrixXd& x = panel.returns();
  for (Index j = 0; j < x.cols(); ++j) {
    if (x.col(j).minCoeff() == x.col(j).maxCoeff()) {
      throw DegenerateDataError("zero-variance column: " + panel.tickers()[static_cast<std::size_t>(j)]);
    }
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  // Every entry comes from the same Gram matrix, so identical columns give exactly 1.
  const Eigen::MatrixXd gram = centered.transpose() * centered;
  const Index n = gram.rows();
  Eigen::MatrixXd c(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) c(i, j) = gram(i, j) / std::sqrt(gram(i, i) * gram(j, j));
  }
  c = 0.5 * (c + c.transpose()).eval();
  c = c.cwiseMax(-1.0).cwiseMin(1.0);
  c.diagonal().setOnes();

  const double min_eig = symmetric_eigenvalues(c)(0);
  if (min_eig < 0.0) {
    if (min_eig <= -psd_tol) {
      std::ostringstream msg;
      msg << "estimated correlation has eigenvalue " << min_eig << " below -psd_tol";
      throw NumericalError(msg.str());
    }
    c = clip_to_psd_correlation(c);
  }
  return CorrelationMatrix::from_values(c, Tolerances{psd_tol, 1e-8});
}

}  // namespace corrgan
