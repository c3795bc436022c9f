#include "corrgan/elliptope.hpp"

#include <cmath>
#include <optional>
#include <string>

#include "corrgan/errors.hpp"

namespace corrgan::elliptope {

void SamplerConfig::validate() const {
  if (n < 2) throw ConfigError("sampler: n must be >= 2, got " + std::to_string(n));
  if (count < 1) throw ConfigError("sampler: count must be >= 1");
}

CorrelationMatrix sample_onion_one(Index n, Philox& rng) {
  if (n < 2) throw ConfigError("sampler: n must be >= 2");

  // Onion construction with eta = 1 (uniform density on the elliptope).
  double beta = 1.0 + static_cast<double>(n - 2) / 2.0;
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
  const double r12 = 2.0 * beta_variate(rng, beta, beta) - 1.0;
  r(0, 1) = r(1, 0) = r12;

  for (Index k = 2; k < n; ++k) {
    beta -= 0.5;
    const double y = beta_variate(rng, static_cast<double>(k) / 2.0, beta);
    Eigen::VectorXd u(k);
    for (Index i = 0; i < k; ++i) u(i) = standard_normal(rng);
    u.normalize();
    const Eigen::VectorXd w = std::sqrt(y) * u;
    Eigen::LLT<Eigen::MatrixXd> llt(r.topLeftCorner(k, k));
    if (llt.info() != Eigen::Success) throw NumericalError("onion: leading block not positive definite");
    const Eigen::VectorXd z = llt.matrixL() * w;
    r.block(0, k, k, 1) = z;
    r.block(k, 0, 1, k) = z.transpose();
  }
  return CorrelationMatrix::from_values(r);
}

std::vector<CorrelationMatrix> sample_onion(const SamplerConfig& cfg) {
  cfg.validate();
  std::vector<CorrelationMatrix> out;
  out.reserve(cfg.count);
  for (std::size_t i = 0; i < cfg.count; ++i) {
    Philox rng(cfg.seed, i);
    out.push_back(sample_onion_one(cfg.n, rng));
  }
  return out;
}

namespace {

void check_dimension(Index n) {
  if (n < 2) throw ConfigError("rejection sampler: n must be >= 2");
  if (n > kMaxRejectionDimension) {
    throw DomainError("rejection sampler: unsupported dimension n=" + std::to_string(n) +
                      " (acceptance rate vanishes; max " + std::to_string(kMaxRejectionDimension) + ")");
  }
}

std::optional<CorrelationMatrix> propose(Index n, Philox& rng) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) m(i, j) = m(j, i) = 2.0 * rng.uniform01() - 1.0;
  }
  if (symmetric_eigenvalues(m)(0) < 0.0) return std::nullopt;
  return CorrelationMatrix::assume_valid(std::move(m));
}

}  // namespace

RejectionResult rejection_oracle(const SamplerConfig& cfg) {
  cfg.validate();
  check_dimension(cfg.n);
  Philox rng(cfg.seed);
  RejectionResult result;
  result.samples.reserve(cfg.count);
  while (result.samples.size() < cfg.count) {
    ++result.proposals;
    if (auto m = propose(cfg.n, rng)) result.samples.push_back(std::move(*m));
  }
  return result;
}

RejectionResult rejection_proposals(Index n, std::size_t proposals, std::uint64_t seed) {
  check_dimension(n);
  Philox rng(seed);
  RejectionResult result;
  for (std::size_t i = 0; i < proposals; ++i) {
    ++result.proposals;
    if (auto m = propose(n, rng)) result.samples.push_back(std::move(*m));
  }
  return result;
}

}  // namespace corrgan::elliptope
