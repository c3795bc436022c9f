#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corrgan/correlation.hpp"
#include "corrgan/matrix_io.hpp"
#include "corrgan/stats.hpp"

namespace corrgan::facts {

// --- Distribution of pairwise correlations -------------------------------

struct PairwiseStats {
  double mean = 0.0;
  double std = 0.0;
  std::size_t count = 0;
  stats::Histogram histogram;      // 50 bins on [-1, 1]
  std::vector<double> log_density;  // natural log of the density, -inf on empty bins
};

/// Pooled over the strictly upper-triangular entries of every matrix.
PairwiseStats pairwise_stats(std::span<const CorrelationMatrix> set);

// --- Spectrum -------------------------------------------------------------

struct MarchenkoPasturParams {
  double q = 0.0;
  double sigma2 = 1.0;
  double lambda_minus = 0.0;
  double lambda_plus = 0.0;

  /// Bulk edges (1 -+ sqrt(q))^2 * sigma2. Throws ConfigError unless q > 0 and sigma2 > 0.
  static MarchenkoPasturParams make(double q, double sigma2 = 1.0);
};

/// sqrt((l+ - l)(l - l-)) / (2 pi q sigma2 l) inside the bulk, 0 outside.
double marchenko_pastur_density(const MarchenkoPasturParams& p, double lambda);

struct SpectrumSummary {
  Eigen::VectorXd eigenvalues;        // descending
  Eigen::VectorXd first_eigenvector;  // unit norm, entries sum >= 0
  double lambda1_share = 0.0;         // lambda_1 / n
  std::optional<MarchenkoPasturParams> bulk;
  Index outlier_count = 0;            // eigenvalues above bulk->lambda_plus
};

/// With q = n / T given, the bulk uses sigma2 = 1 - lambda_1 / n (market mode
/// removed) and outliers are counted against its upper edge.
SpectrumSummary eigen_spectrum(const CorrelationMatrix& m, std::optional<double> q = std::nullopt);

// --- Perron-Frobenius -------------------------------------------------------

struct PerronFrobeniusResult {
  bool positive = false;
  double min_entry = 0.0;
  /// lambda_1 - lambda_2 < 1e-10: the dominant eigenvector is not unique.
  bool degenerate = false;
};

/// Entries must exceed kPerronTolerance to count as positive (eigensolver noise).
constexpr double kPerronTolerance = 1e-12;
PerronFrobeniusResult perron_frobenius_check(const CorrelationMatrix& m);

// --- Minimum spanning tree ---------------------------------------------------

struct MstEdge {
  Index i = 0;
  Index j = 0;
  double distance = 0.0;
};

struct PowerLawFit {
  bool degenerate = true;
  double exponent = 0.0;   // alpha in P(k) ~ k^-alpha
  double slope = 0.0;      // slope of log CCDF against log(k - 1/2)
  double r_squared = 0.0;  // weighted
  Index k_min = 0;
  Index k_max = 0;
  std::size_t points = 0;
};

struct MstSummary {
  std::vector<MstEdge> edges;
  std::vector<Index> degrees;
  std::vector<std::size_t> degree_histogram;  // index = degree
  double total_weight = 0.0;
  PowerLawFit fit;
};

/// Kruskal on d = sqrt(2(1 - rho)); equal weights are taken in lexicographic (i, j) order.
MstSummary mst(const CorrelationMatrix& m);

/// Weighted least-squares slope of log CCDF(k) against log(k - 1/2) over
/// distinct degrees k >= 2, each point weighted by the number of degrees
/// >= k; exponent = 1 - slope. Needs at least 3 distinct degree values.
PowerLawFit power_law_fit(std::span<const Index> degrees);

// --- Hierarchy ------------------------------------------------------------

struct HierarchyScore {
  bool defined = false;
  double score = 0.0;
};

/// Cophenetic correlation between correlation distances and single-linkage
/// cophenetic distances; undefined when either has zero variance.
HierarchyScore hierarchy_score(const CorrelationMatrix& m);

// --- Comparative report -----------------------------------------------------

struct Thresholds {
  double mean_diff = 0.05;
  double std_diff = 0.05;
  double lambda1_ks = 0.2;
  double pf_rate_diff = 0.05;
  double hierarchy_ks = 0.2;
  /// Symmetric chi-square distance between degree distributions.
  double degree_chi2 = 0.05;
  /// Sample length behind the reference estimates, for the bulk edge.
  Index window_days = 252;
};

/// Per-set statistics. Raw per-matrix samples are kept so that two-sample
/// statistics can be recomputed.
struct SetStatistics {
  std::size_t count = 0;
  PairwiseStats pairwise;
  std::vector<double> lambda1;
  std::vector<double> outliers;
  std::vector<double> eigenvalues;  // pooled
  double pf_pass_rate = 0.0;
  std::size_t pf_degenerate = 0;
  std::vector<double> hierarchy;    // defined scores only
  std::size_t hierarchy_undefined = 0;
  std::vector<std::size_t> degree_histogram;
  PowerLawFit degree_fit;
  Index max_degree = 0;
};

SetStatistics set_statistics(std::span<const CorrelationMatrix> set, Index window_days);

/// Two-sample comparisons derived from a pair of SetStatistics.
struct Comparison {
  double mean_diff = 0.0;
  double std_diff = 0.0;
  double lambda1_ks = 0.0;
  double pf_rate_diff = 0.0;
  double hierarchy_ks = 0.0;
  double degree_chi2 = 0.0;
  double reference_tail_mass = 0.0;  // share of degrees above the reference 95th percentile
  double candidate_tail_mass = 0.0;
  Index tail_degree = 0;
};

Comparison compare(const SetStatistics& reference, const SetStatistics& candidate);

struct Verdict {
  std::string fact;
  bool passed = false;
  std::string detail;
};

/// Pure function of the stored comparison values and thresholds.
std::vector<Verdict> decide(const Comparison& c, const Thresholds& t);

struct StylizedFactsReport {
  Index n = 0;
  Thresholds thresholds;
  SetStatistics reference;
  SetStatistics candidate;
  Comparison comparison;
  std::vector<Verdict> verdicts;
  /// Candidate under-represents high-degree MST hubs relative to the reference.
  bool tail_deficit = false;

  bool all_passed() const;
  io::KeyValueFile to_key_values() const;
  /// Restores thresholds and comparison values from the text form.
  static std::pair<Thresholds, Comparison> parse_decision_inputs(const io::KeyValueFile& kv);
  /// One CSV per histogram: pairwise, eigenvalues, degrees.
  void write_histograms(const std::filesystem::path& dir) const;
};

/// Throws ShapeError when the sets differ in dimension; ConfigError when empty.
StylizedFactsReport stylized_report(std::span<const CorrelationMatrix> reference,
                                    std::span<const CorrelationMatrix> candidate, const Thresholds& thresholds = {});

/// Degree bins used by the MST comparison: 1, 2, 3, 4, 5 and >= 6.
std::vector<double> degree_distribution(const std::vector<std::size_t>& degree_histogram);

}  // namespace corrgan::facts
