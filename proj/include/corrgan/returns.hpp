#pragma once

#include <string>
#include <vector>

#include "corrgan/correlation.hpp"

namespace corrgan {

enum class ReturnKind { unspecified, simple, log };

/// T x n panel of daily returns. Invariants are checked at construction:
/// T >= 2, n >= 2, finite values, strictly increasing ISO-8601 dates,
/// one column per ticker.
class ReturnsPanel {
 public:
  ReturnsPanel(std::vector<std::string> tickers, std::vector<std::string> dates,
               Eigen::MatrixXd returns, ReturnKind kind = ReturnKind::unspecified);

  Index days() const noexcept { return returns_.rows(); }
  Index assets() const noexcept { return returns_.cols(); }
  const std::vector<std::string>& tickers() const noexcept { return tickers_; }
  const std::vector<std::string>& dates() const noexcept { return dates_; }
  const Eigen::MatrixXd& returns() const noexcept { return returns_; }
  ReturnKind kind() const noexcept { return kind_; }

  /// Rows [first, first + count).
  ReturnsPanel rows(Index first, Index count) const;
  /// Columns in the given order.
  ReturnsPanel columns(std::span<const Index> which) const;

 private:
  std::vector<std::string> tickers_;
  std::vector<std::string> dates_;
  Eigen::MatrixXd returns_;
  ReturnKind kind_;
};

/// True for a syntactically valid calendar date YYYY-MM-DD.
bool is_iso_date(const std::string& s);

/// Pearson correlation of the panel's columns. Unit diagonal and symmetry are
/// exact; eigenvalues in (-psd_tol, 0) from rounding are clipped to zero.
/// Throws DegenerateDataError naming the first zero-variance ticker.
CorrelationMatrix estimate_correlation(const ReturnsPanel& panel, double psd_tol = 1e-8);

/// Clips eigenvalues below zero and rescales to unit diagonal. The input must
/// be symmetric with unit diagonal.
Eigen::MatrixXd clip_to_psd_correlation(const Eigen::MatrixXd& m);

}  // namespace corrgan
