#pragma once

#include <cstdint>
#include <vector>

#include "corrgan/correlation.hpp"
#include "corrgan/rng.hpp"

namespace corrgan::elliptope {

struct SamplerConfig {
  Index n = 3;
  std::size_t count = 1;
  std::uint64_t seed = 0;

  /// Throws ConfigError unless n >= 2 and count >= 1.
  void validate() const;
};

/// Onion-method draws, uniform in Lebesgue measure on the elliptope.
/// Sample i uses Philox stream i of cfg.seed, so any chunk of the output can
/// be regenerated independently.
std::vector<CorrelationMatrix> sample_onion(const SamplerConfig& cfg);

/// One onion-method draw of side n.
CorrelationMatrix sample_onion_one(Index n, Philox& rng);

/// Rejection sampler: coefficients uniform on [-1, 1]^(n(n-1)/2), kept when
/// the reconstructed matrix is PSD. Only n <= 4 is supported.
struct RejectionResult {
  std::vector<CorrelationMatrix> samples;
  std::size_t proposals = 0;
  double acceptance_rate() const {
    return proposals == 0 ? 0.0 : static_cast<double>(samples.size()) / static_cast<double>(proposals);
  }
};

/// Draws until cfg.count matrices are accepted.
RejectionResult rejection_oracle(const SamplerConfig& cfg);

/// Runs exactly `proposals` proposals and reports how many were accepted.
RejectionResult rejection_proposals(Index n, std::size_t proposals, std::uint64_t seed);

constexpr Index kMaxRejectionDimension = 4;

}  // namespace corrgan::elliptope
