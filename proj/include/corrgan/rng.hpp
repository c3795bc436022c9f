#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

namespace corrgan {

/// Philox4x32-10 counter-based generator.
///
/// The 64-bit seed is the key; the 128-bit counter is split into a 64-bit
/// block index (low words) and a 64-bit stream id (high words), so independent
/// streams are obtained by construction rather than by jumping. Output is
/// identical on every platform. Satisfies UniformRandomBitGenerator.
class Philox {
 public:
  using result_type = std::uint32_t;
  static constexpr std::string_view name = "philox4x32-10";

  explicit Philox(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept;

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform01() noexcept;

  /// Raw block function, exposed for known-answer tests.
  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> counter,
                                            std::array<std::uint32_t, 2> key) noexcept;

 private:
  void refill() noexcept;

  std::array<std::uint32_t, 2> key_;
  std::uint64_t stream_;
  std::uint64_t block_index_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  std::size_t position_ = 4;
};

/// SplitMix64 finalizer; used to derive child seeds from a run seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) noexcept;

/// Child seed for a named purpose ("generator-init", "latent", ...).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) noexcept;

double standard_normal(Philox& rng);

/// Uniform integer in [0, bound). bound must be positive.
std::size_t uniform_index(Philox& rng, std::size_t bound);

/// Beta(a, b) variate.
double beta_variate(Philox& rng, double a, double b);

/// Fisher-Yates shuffle driven by uniform_index.
template <typename T>
void shuffle(std::span<T> items, Philox& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = uniform_index(rng, i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace corrgan
