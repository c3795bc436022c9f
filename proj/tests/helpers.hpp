#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "corrgan/correlation.hpp"
#include "corrgan/rng.hpp"

namespace testing {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("corrgan_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Random correlation matrix B B^T rescaled to unit diagonal; generic entries.
inline corrgan::CorrelationMatrix random_correlation(corrgan::Index n, std::uint64_t seed, corrgan::Index rank = -1) {
  corrgan::Philox rng(seed, 99);
  const corrgan::Index k = rank > 0 ? rank : n + 2;
  Eigen::MatrixXd b(n, k);
  for (corrgan::Index i = 0; i < n; ++i) {
    for (corrgan::Index j = 0; j < k; ++j) b(i, j) = corrgan::standard_normal(rng) + (j == 0 ? 1.0 : 0.0);
  }
  Eigen::MatrixXd c = b * b.transpose();
  const Eigen::VectorXd s = c.diagonal().cwiseSqrt().cwiseInverse();
  c = s.asDiagonal() * c * s.asDiagonal();
  c.diagonal().setOnes();
  return corrgan::CorrelationMatrix::from_values(c);
}

inline corrgan::Permutation random_permutation(corrgan::Index n, std::uint64_t seed) {
  corrgan::Permutation p(static_cast<std::size_t>(n));
  for (corrgan::Index i = 0; i < n; ++i) p[static_cast<std::size_t>(i)] = i;
  corrgan::Philox rng(seed, 7);
  corrgan::shuffle(std::span<corrgan::Index>(p), rng);
  return p;
}

}  // namespace testing
