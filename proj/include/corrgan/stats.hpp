#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace corrgan::stats {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

/// Equal-width bins on [lo, hi]; values outside are clamped into the edge bins.
struct Histogram {
  double lo = -1.0;
  double hi = 1.0;
  std::vector<std::size_t> counts;
  std::size_t total = 0;

  double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  double bin_center(std::size_t k) const { return lo + (static_cast<double>(k) + 0.5) * bin_width(); }
  /// Normalized so the histogram integrates to one.
  std::vector<double> density() const;
};

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Two-sample Kolmogorov-Smirnov test (asymptotic p-value).
KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

/// Kolmogorov survival function Q(lambda) = 2 sum_k (-1)^(k-1) exp(-2 k^2 lambda^2).
double kolmogorov_survival(double lambda);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

/// Chi-square test of homogeneity for two count vectors over the same bins.
/// Bins empty in both samples are skipped.
ChiSquareResult chi_square_homogeneity(std::span<const std::size_t> a, std::span<const std::size_t> b);

/// Pearson correlation; nullopt when either input has zero variance.
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

}  // namespace corrgan::stats
