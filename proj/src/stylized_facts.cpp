#include "corrgan/stylized_facts.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "corrgan/canonicalize.hpp"
#include "corrgan/errors.hpp"

namespace corrgan::facts {
namespace {

constexpr std::size_t kPairwiseBins = 50;
constexpr std::size_t kDegreeBins = 6;  // 1, 2, 3, 4, 5, >= 6

std::vector<double> upper_values(const CorrelationMatrix& m) {
  std::vector<double> out;
  for (Index i = 0; i < m.n(); ++i) {
    for (Index j = i + 1; j < m.n(); ++j) out.push_back(m(i, j));
  }
  return out;
}

Index percentile_degree(const std::vector<std::size_t>& hist, double level) {
  const double total = static_cast<double>(std::accumulate(hist.begin(), hist.end(), std::size_t{0}));
  if (total == 0.0) return 0;
  double acc = 0.0;
  for (std::size_t k = 0; k < hist.size(); ++k) {
    acc += static_cast<double>(hist[k]);
    if (acc / total >= level) return static_cast<Index>(k);
  }
  return static_cast<Index>(hist.size()) - 1;
}

double mass_above(const std::vector<std::size_t>& hist, Index degree) {
  const double total = static_cast<double>(std::accumulate(hist.begin(), hist.end(), std::size_t{0}));
  if (total == 0.0) return 0.0;
  double above = 0.0;
  for (std::size_t k = static_cast<std::size_t>(degree) + 1; k < hist.size(); ++k) above += static_cast<double>(hist[k]);
  return above / total;
}

}  // namespace

PairwiseStats pairwise_stats(std::span<const CorrelationMatrix> set) {
  if (set.empty()) throw ConfigError("pairwise_stats: empty set");
  std::vector<double> values;
  for (const auto& m : set) {
    const auto v = upper_values(m);
    values.insert(values.end(), v.begin(), v.end());
  }
  if (values.empty()) throw ConfigError("pairwise_stats: matrices have no off-diagonal entries");
  PairwiseStats out;
  const auto ms = stats::mean_std(values);
  out.mean = ms.mean;
  out.std = ms.std;
  out.count = values.size();
  out.histogram = stats::histogram(values, kPairwiseBins, -1.0, 1.0);
  for (const double d : out.histogram.density()) out.log_density.push_back(std::log(d));
  return out;
}

MarchenkoPasturParams MarchenkoPasturParams::make(double q, double sigma2) {
  if (!(q > 0.0)) throw ConfigError("Marchenko-Pastur: q must be > 0");
  if (!(sigma2 > 0.0)) throw ConfigError("Marchenko-Pastur: sigma2 must be > 0");
  const double root = std::sqrt(q);
  return {q, sigma2, (1.0 - root) * (1.0 - root) * sigma2, (1.0 + root) * (1.0 + root) * sigma2};
}

double marchenko_pastur_density(const MarchenkoPasturParams& p, double lambda) {
  if (!(lambda > p.lambda_minus) || !(lambda < p.lambda_plus) || lambda <= 0.0) return 0.0;
  return std::sqrt((p.lambda_plus - lambda) * (lambda - p.lambda_minus)) /
         (2.0 * std::numbers::pi * p.q * p.sigma2 * lambda);
}

SpectrumSummary eigen_spectrum(const CorrelationMatrix& m, std::optional<double> q) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m.values());
  if (solver.info() != Eigen::Success) throw NumericalError("eigen_spectrum: eigensolver failed");
  const Index n = m.n();
  SpectrumSummary s;
  s.eigenvalues = solver.eigenvalues().reverse();
  s.first_eigenvector = solver.eigenvectors().col(n - 1).normalized();
  if (s.first_eigenvector.sum() < 0.0) s.first_eigenvector = -s.first_eigenvector;
  s.lambda1_share = s.eigenvalues(0) / static_cast<double>(n);
  if (q) {
    const double sigma2 = std::max(1.0 - s.lambda1_share, 1e-12);
    s.bulk = MarchenkoPasturParams::make(*q, sigma2);
    s.outlier_count = (s.eigenvalues.array() > s.bulk->lambda_plus).count();
  }
  return s;
}

PerronFrobeniusResult perron_frobenius_check(const CorrelationMatrix& m) {
  const SpectrumSummary s = eigen_spectrum(m);
  PerronFrobeniusResult r;
  r.min_entry = s.first_eigenvector.minCoeff();
  r.positive = r.min_entry > kPerronTolerance;
  r.degenerate = s.eigenvalues.size() > 1 && s.eigenvalues(0) - s.eigenvalues(1) < 1e-10;
  return r;
}

MstSummary mst(const CorrelationMatrix& m) {
  const Index n = m.n();
  const Eigen::MatrixXd d = canon::correlation_distance(m);
  std::vector<MstEdge> edges;
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) edges.push_back({i, j, d(i, j)});
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const MstEdge& a, const MstEdge& b) { return a.distance < b.distance; });

  std::vector<Index> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), Index{0});
  const auto find = [&](Index x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };

  MstSummary s;
  s.degrees.assign(static_cast<std::size_t>(n), 0);
  for (const MstEdge& e : edges) {
    const Index a = find(e.i);
    const Index b = find(e.j);
    if (a == b) continue;
    parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
    s.edges.push_back(e);
    s.total_weight += e.distance;
    ++s.degrees[static_cast<std::size_t>(e.i)];
    ++s.degrees[static_cast<std::size_t>(e.j)];
    if (static_cast<Index>(s.edges.size()) == n - 1) break;
  }
  const Index max_degree = n > 0 ? *std::max_element(s.degrees.begin(), s.degrees.end()) : 0;
  s.degree_histogram.assign(static_cast<std::size_t>(max_degree) + 1, 0);
  for (const Index k : s.degrees) ++s.degree_histogram[static_cast<std::size_t>(k)];
  s.fit = power_law_fit(s.degrees);
  return s;
}

PowerLawFit power_law_fit(std::span<const Index> degrees) {
  PowerLawFit fit;
  if (degrees.empty()) return fit;
  const Index max_degree = *std::max_element(degrees.begin(), degrees.end());
  std::vector<std::size_t> hist(static_cast<std::size_t>(std::max<Index>(max_degree, 0)) + 1, 0);
  for (const Index k : degrees) {
    if (k >= 0) ++hist[static_cast<std::size_t>(k)];
  }
  const std::size_t distinct = static_cast<std::size_t>(std::count_if(hist.begin(), hist.end(), [](std::size_t c) { return c > 0; }));
  if (distinct < 3) return fit;

  // CCDF(k) = P(K >= k) at each observed degree k >= 2, placed at k - 1/2
  // (the continuum edge of a discrete tail) and weighted by the tail count.
  const double total = static_cast<double>(degrees.size());
  std::vector<double> xs, ys, ws;
  std::vector<Index> ks;
  double at_least = 0.0;
  for (std::size_t k = hist.size(); k-- > 2;) {
    at_least += static_cast<double>(hist[k]);
    if (hist[k] == 0) continue;
    ks.push_back(static_cast<Index>(k));
    xs.push_back(std::log(static_cast<double>(k) - 0.5));
    ys.push_back(std::log(at_least / total));
    ws.push_back(at_least);
  }
  if (xs.size() < 2) return fit;

  double sw = 0.0, mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sw += ws[i];
    mx += ws[i] * xs[i];
    my += ws[i] * ys[i];
  }
  mx /= sw;
  my /= sw;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += ws[i] * (xs[i] - mx) * (ys[i] - my);
    sxx += ws[i] * (xs[i] - mx) * (xs[i] - mx);
  }
  fit.slope = sxy / sxx;
  const double intercept = my - fit.slope * mx;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (intercept + fit.slope * xs[i]);
    ss_res += ws[i] * r * r;
    ss_tot += ws[i] * (ys[i] - my) * (ys[i] - my);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  fit.exponent = 1.0 - fit.slope;
  fit.k_min = ks.back();
  fit.k_max = ks.front();
  fit.points = xs.size();
  fit.degenerate = false;
  return fit;
}

HierarchyScore hierarchy_score(const CorrelationMatrix& m) {
  const Eigen::MatrixXd d = canon::correlation_distance(m);
  const Eigen::MatrixXd c = canon::cophenetic_distances(canon::single_linkage(d));
  std::vector<double> x, y;
  for (Index i = 0; i < m.n(); ++i) {
    for (Index j = i + 1; j < m.n(); ++j) {
      x.push_back(d(i, j));
      y.push_back(c(i, j));
    }
  }
  const auto r = stats::pearson(x, y);
  return r ? HierarchyScore{true, *r} : HierarchyScore{};
}

SetStatistics set_statistics(std::span<const CorrelationMatrix> set, Index window_days) {
  if (set.empty()) throw ConfigError("set_statistics: empty set");
  // Statistics are computed on the canonical representative so that they do
  // not depend on the asset order of the inputs, down to the last bit.
  std::vector<CorrelationMatrix> canonical;
  canonical.reserve(set.size());
  for (const auto& m : set) canonical.push_back(canon::canonicalize(m));

  SetStatistics s;
  s.count = set.size();
  s.pairwise = pairwise_stats(canonical);
  const Index n = set.front().n();
  const double q = static_cast<double>(n) / static_cast<double>(window_days);
  std::size_t pf_pass = 0;
  std::vector<Index> degrees;
  for (const auto& m : canonical) {
    const SpectrumSummary spec = eigen_spectrum(m, q);
    s.lambda1.push_back(spec.eigenvalues(0));
    s.outliers.push_back(static_cast<double>(spec.outlier_count));
    for (Index k = 0; k < spec.eigenvalues.size(); ++k) s.eigenvalues.push_back(spec.eigenvalues(k));

    const auto pf = perron_frobenius_check(m);
    if (pf.positive) ++pf_pass;
    if (pf.degenerate) ++s.pf_degenerate;

    const auto h = hierarchy_score(m);
    if (h.defined) {
      s.hierarchy.push_back(h.score);
    } else {
      ++s.hierarchy_undefined;
    }

    const auto tree = mst(m);
    degrees.insert(degrees.end(), tree.degrees.begin(), tree.degrees.end());
  }
  s.pf_pass_rate = static_cast<double>(pf_pass) / static_cast<double>(set.size());
  s.max_degree = degrees.empty() ? 0 : *std::max_element(degrees.begin(), degrees.end());
  s.degree_histogram.assign(static_cast<std::size_t>(s.max_degree) + 1, 0);
  for (const Index k : degrees) ++s.degree_histogram[static_cast<std::size_t>(k)];
  s.degree_fit = power_law_fit(degrees);
  return s;
}

std::vector<double> degree_distribution(const std::vector<std::size_t>& hist) {
  std::vector<double> p(kDegreeBins, 0.0);
  double total = 0.0;
  for (std::size_t k = 1; k < hist.size(); ++k) {
    p[std::min(k, kDegreeBins) - 1] += static_cast<double>(hist[k]);
    total += static_cast<double>(hist[k]);
  }
  if (total > 0.0) {
    for (double& v : p) v /= total;
  }
  return p;
}

Comparison compare(const SetStatistics& ref, const SetStatistics& cand) {
  Comparison c;
  c.mean_diff = cand.pairwise.mean - ref.pairwise.mean;
  c.std_diff = cand.pairwise.std - ref.pairwise.std;
  c.lambda1_ks = stats::ks_two_sample(ref.lambda1, cand.lambda1).statistic;
  c.pf_rate_diff = cand.pf_pass_rate - ref.pf_pass_rate;
  if (ref.hierarchy.empty() && cand.hierarchy.empty()) {
    c.hierarchy_ks = 0.0;
  } else if (ref.hierarchy.empty() || cand.hierarchy.empty()) {
    c.hierarchy_ks = 1.0;
  } else {
    c.hierarchy_ks = stats::ks_two_sample(ref.hierarchy, cand.hierarchy).statistic;
  }
  const auto p = degree_distribution(ref.degree_histogram);
  const auto q = degree_distribution(cand.degree_histogram);
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] + q[k] > 0.0) c.degree_chi2 += 0.5 * (p[k] - q[k]) * (p[k] - q[k]) / (p[k] + q[k]);
  }
  c.tail_degree = percentile_degree(ref.degree_histogram, 0.95);
  c.reference_tail_mass = mass_above(ref.degree_histogram, c.tail_degree);
  c.candidate_tail_mass = mass_above(cand.degree_histogram, c.tail_degree);
  return c;
}

std::vector<Verdict> decide(const Comparison& c, const Thresholds& t) {
  std::vector<Verdict> v;
  const auto fmt = [](const char* name, double value, double limit) {
    std::ostringstream s;
    s << name << "=" << value << " limit=" << limit;
    return s.str();
  };
  v.push_back({"pairwise_correlations",
               std::abs(c.mean_diff) <= t.mean_diff && std::abs(c.std_diff) <= t.std_diff,
               fmt("|mean_diff|", std::abs(c.mean_diff), t.mean_diff) + " " +
                   fmt("|std_diff|", std::abs(c.std_diff), t.std_diff)});
  v.push_back({"spectrum", c.lambda1_ks <= t.lambda1_ks, fmt("lambda1_ks", c.lambda1_ks, t.lambda1_ks)});
  v.push_back({"perron_frobenius", std::abs(c.pf_rate_diff) <= t.pf_rate_diff,
               fmt("|pf_rate_diff|", std::abs(c.pf_rate_diff), t.pf_rate_diff)});
  v.push_back({"hierarchy", c.hierarchy_ks <= t.hierarchy_ks, fmt("hierarchy_ks", c.hierarchy_ks, t.hierarchy_ks)});
  v.push_back({"mst_degrees", c.degree_chi2 <= t.degree_chi2, fmt("degree_chi2", c.degree_chi2, t.degree_chi2)});
  return v;
}

bool StylizedFactsReport::all_passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const Verdict& v) { return v.passed; });
}

StylizedFactsReport stylized_report(std::span<const CorrelationMatrix> reference,
                                    std::span<const CorrelationMatrix> candidate, const Thresholds& thresholds) {
  if (reference.empty() || candidate.empty()) throw ConfigError("stylized_report: both sets must be non-empty");
  const Index n = reference.front().n();
  const auto check = [n](std::span<const CorrelationMatrix> set) {
    for (const auto& m : set) {
      if (m.n() != n) throw ShapeError("stylized_report: dimension mismatch");
    }
  };
  check(reference);
  check(candidate);

  StylizedFactsReport r;
  r.n = n;
  r.thresholds = thresholds;
  r.reference = set_statistics(reference, thresholds.window_days);
  r.candidate = set_statistics(candidate, thresholds.window_days);
  r.comparison = compare(r.reference, r.candidate);
  r.verdicts = decide(r.comparison, thresholds);
  r.tail_deficit = r.comparison.candidate_tail_mass < r.comparison.reference_tail_mass;
  return r;
}

io::KeyValueFile StylizedFactsReport::to_key_values() const {
  io::KeyValueFile kv;
  kv.add("format", "corrgan-stylized-report-1");
  kv.add("n", n);
  kv.add("reference.count", reference.count);
  kv.add("candidate.count", candidate.count);

  kv.add("threshold.mean_diff", thresholds.mean_diff);
  kv.add("threshold.std_diff", thresholds.std_diff);
  kv.add("threshold.lambda1_ks", thresholds.lambda1_ks);
  kv.add("threshold.pf_rate_diff", thresholds.pf_rate_diff);
  kv.add("threshold.hierarchy_ks", thresholds.hierarchy_ks);
  kv.add("threshold.degree_chi2", thresholds.degree_chi2);
  kv.add("threshold.window_days", thresholds.window_days);

  const auto per_set = [&kv](const std::string& who, const SetStatistics& s) {
    kv.add("pairwise." + who + ".mean", s.pairwise.mean);
    kv.add("pairwise." + who + ".std", s.pairwise.std);
  };
  per_set("reference", reference);
  per_set("candidate", candidate);
  kv.add("pairwise.mean_diff", comparison.mean_diff);
  kv.add("pairwise.std_diff", comparison.std_diff);

  const auto spectrum = [&kv](const std::string& who, const SetStatistics& s) {
    const auto l1 = stats::mean_std(s.lambda1);
    kv.add("spectrum." + who + ".lambda1_mean", l1.mean);
    kv.add("spectrum." + who + ".lambda1_std", l1.std);
    kv.add("spectrum." + who + ".outliers_mean", stats::mean_std(s.outliers).mean);
  };
  spectrum("reference", reference);
  spectrum("candidate", candidate);
  kv.add("spectrum.lambda1_ks", comparison.lambda1_ks);

  kv.add("perron_frobenius.reference.pass_rate", reference.pf_pass_rate);
  kv.add("perron_frobenius.candidate.pass_rate", candidate.pf_pass_rate);
  kv.add("perron_frobenius.reference.degenerate", reference.pf_degenerate);
  kv.add("perron_frobenius.candidate.degenerate", candidate.pf_degenerate);
  kv.add("perron_frobenius.rate_diff", comparison.pf_rate_diff);

  const auto hierarchy = [&kv](const std::string& who, const SetStatistics& s) {
    kv.add("hierarchy." + who + ".mean", s.hierarchy.empty() ? 0.0 : stats::mean_std(s.hierarchy).mean);
    kv.add("hierarchy." + who + ".undefined", s.hierarchy_undefined);
  };
  hierarchy("reference", reference);
  hierarchy("candidate", candidate);
  kv.add("hierarchy.ks", comparison.hierarchy_ks);

  const auto degrees = [&kv](const std::string& who, const SetStatistics& s) {
    std::string hist;
    for (std::size_t k = 1; k < s.degree_histogram.size(); ++k) {
      if (!hist.empty()) hist += ',';
      hist += std::to_string(k) + ":" + std::to_string(s.degree_histogram[k]);
    }
    kv.add("mst." + who + ".degree_histogram", hist);
    kv.add("mst." + who + ".max_degree", s.max_degree);
    kv.add("mst." + who + ".fit_degenerate", s.degree_fit.degenerate);
    kv.add("mst." + who + ".exponent", s.degree_fit.exponent);
    kv.add("mst." + who + ".r_squared", s.degree_fit.r_squared);
    kv.add("mst." + who + ".fit_range", std::to_string(s.degree_fit.k_min) + "-" + std::to_string(s.degree_fit.k_max));
  };
  degrees("reference", reference);
  degrees("candidate", candidate);
  kv.add("mst.degree_chi2", comparison.degree_chi2);
  kv.add("mst.tail_degree", comparison.tail_degree);
  kv.add("mst.reference.tail_mass", comparison.reference_tail_mass);
  kv.add("mst.candidate.tail_mass", comparison.candidate_tail_mass);
  kv.add("mst.tail_caveat", tail_deficit ? "candidate under-represents high-degree hubs"
                                         : "no hub deficit in candidate");

  for (const auto& v : verdicts) {
    kv.add("verdict." + v.fact, v.passed ? "pass" : "fail");
    kv.add("verdict." + v.fact + ".detail", v.detail);
  }
  kv.add("verdict.all", all_passed() ? "pass" : "fail");
  return kv;
}

std::pair<Thresholds, Comparison> StylizedFactsReport::parse_decision_inputs(const io::KeyValueFile& kv) {
  const auto num = [&kv](const std::string& key) {
    try {
      return std::stod(kv.get(key));
    } catch (const std::logic_error&) {
      throw IoError("report: malformed value for " + key);
    }
  };
  Thresholds t;
  t.mean_diff = num("threshold.mean_diff");
  t.std_diff = num("threshold.std_diff");
  t.lambda1_ks = num("threshold.lambda1_ks");
  t.pf_rate_diff = num("threshold.pf_rate_diff");
  t.hierarchy_ks = num("threshold.hierarchy_ks");
  t.degree_chi2 = num("threshold.degree_chi2");
  t.window_days = static_cast<Index>(num("threshold.window_days"));
  Comparison c;
  c.mean_diff = num("pairwise.mean_diff");
  c.std_diff = num("pairwise.std_diff");
  c.lambda1_ks = num("spectrum.lambda1_ks");
  c.pf_rate_diff = num("perron_frobenius.rate_diff");
  c.hierarchy_ks = num("hierarchy.ks");
  c.degree_chi2 = num("mst.degree_chi2");
  c.tail_degree = static_cast<Index>(num("mst.tail_degree"));
  c.reference_tail_mass = num("mst.reference.tail_mass");
  c.candidate_tail_mass = num("mst.candidate.tail_mass");
  return {t, c};
}

void StylizedFactsReport::write_histograms(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  {
    std::ostringstream out;
    out << "bin_center,reference_density,candidate_density,reference_log_density,candidate_log_density\n";
    const auto rd = reference.pairwise.histogram.density();
    const auto cd = candidate.pairwise.histogram.density();
    for (std::size_t k = 0; k < rd.size(); ++k) {
      out << io::format_double(reference.pairwise.histogram.bin_center(k)) << ',' << io::format_double(rd[k]) << ','
          << io::format_double(cd[k]) << ',' << io::format_double(reference.pairwise.log_density[k]) << ','
          << io::format_double(candidate.pairwise.log_density[k]) << '\n';
    }
    io::write_text(dir / "pairwise_histogram.csv", out.str());
  }
  {
    double hi = 0.0;
    for (const double v : reference.eigenvalues) hi = std::max(hi, v);
    for (const double v : candidate.eigenvalues) hi = std::max(hi, v);
    hi = std::max(hi, 1.0) * 1.0001;
    const auto rh = stats::histogram(reference.eigenvalues, 100, 0.0, hi);
    const auto ch = stats::histogram(candidate.eigenvalues, 100, 0.0, hi);
    const auto rd = rh.density();
    const auto cd = ch.density();
    std::ostringstream out;
    out << "bin_center,reference_density,candidate_density\n";
    for (std::size_t k = 0; k < rd.size(); ++k) {
      out << io::format_double(rh.bin_center(k)) << ',' << io::format_double(rd[k]) << ','
          << io::format_double(cd[k]) << '\n';
    }
    io::write_text(dir / "eigenvalue_histogram.csv", out.str());
  }
  {
    std::ostringstream out;
    out << "degree,reference_count,candidate_count\n";
    const std::size_t top = std::max(reference.degree_histogram.size(), candidate.degree_histogram.size());
    for (std::size_t k = 1; k < top; ++k) {
      const auto at = [k](const std::vector<std::size_t>& h) { return k < h.size() ? h[k] : std::size_t{0}; };
      out << k << ',' << at(reference.degree_histogram) << ',' << at(candidate.degree_histogram) << '\n';
    }
    io::write_text(dir / "degree_histogram.csv", out.str());
  }
}

}  // namespace corrgan::facts
