#include "corrgan/stats.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "corrgan/errors.hpp"

namespace corrgan::stats {

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw ConfigError("mean_std: empty input");
  double sum = 0.0;
  for (const double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size()))};
}

std::vector<double> Histogram::density() const {
  std::vector<double> out(counts.size(), 0.0);
  if (total == 0) return out;
  const double scale = 1.0 / (static_cast<double>(total) * bin_width());
  for (std::size_t k = 0; k < counts.size(); ++k) out[k] = static_cast<double>(counts[k]) * scale;
  return out;
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi) {
  if (bins == 0 || !(hi > lo)) throw ConfigError("histogram: need bins > 0 and hi > lo");
  Histogram h{lo, hi, std::vector<std::size_t>(bins, 0), 0};
  const double width = (hi - lo) / static_cast<double>(bins);
  for (const double v : values) {
    auto k = static_cast<long long>(std::floor((v - lo) / width));
    k = std::clamp<long long>(k, 0, static_cast<long long>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(k)];
    ++h.total;
  }
  return h;
}

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double sum = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw ConfigError("ks_two_sample: empty sample");
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double nx = static_cast<double>(x.size());
  const double ny = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / nx - static_cast<double>(j) / ny));
  }
  const double ne = nx * ny / (nx + ny);
  const double sqrt_ne = std::sqrt(ne);
  return {d, kolmogorov_survival((sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d)};
}

ChiSquareResult chi_square_homogeneity(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.size() != b.size()) throw ShapeError("chi_square_homogeneity: bin count mismatch");
  double na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    na += static_cast<double>(a[k]);
    nb += static_cast<double>(b[k]);
  }
  if (na == 0.0 || nb == 0.0) throw ConfigError("chi_square_homogeneity: empty sample");
  ChiSquareResult r;
  std::size_t used = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double total = static_cast<double>(a[k] + b[k]);
    if (total == 0.0) continue;
    ++used;
    const double ea = total * na / (na + nb);
    const double eb = total * nb / (na + nb);
    r.statistic += (static_cast<double>(a[k]) - ea) * (static_cast<double>(a[k]) - ea) / ea +
                   (static_cast<double>(b[k]) - eb) * (static_cast<double>(b[k]) - eb) / eb;
  }
  r.dof = used > 1 ? used - 1 : 0;
  if (r.dof > 0) {
    const boost::math::chi_squared dist(static_cast<double>(r.dof));
    r.p_value = boost::math::cdf(boost::math::complement(dist, r.statistic));
  }
  return r;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ShapeError("pearson: length mismatch");
  if (x.size() < 2) return std::nullopt;
  const auto constant = [](std::span<const double> v) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    return *lo == *hi;
  };
  if (constant(x) || constant(y)) return std::nullopt;
  const auto mx = mean_std(x);
  const auto my = mean_std(y);
  double cov = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) cov += (x[k] - mx.mean) * (y[k] - my.mean);
  cov /= static_cast<double>(x.size());
  return std::clamp(cov / (mx.std * my.std), -1.0, 1.0);
}

}  // namespace corrgan::stats
