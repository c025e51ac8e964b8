#pragma once

#include <array>
#include <cstdint>

namespace amedlab {

/// Counter-based generator (Philox4x32-10) with explicit stream derivation.
///
/// A generator is identified by (seed, stream). Child streams are derived by
/// hashing the parent stream id with a child index, so the random numbers a
/// trajectory sees depend only on its position in the run -> trajectory ->
/// step hierarchy and never on scheduling or thread count.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {}

  /// Independent generator for child `index` of this stream.
  [[nodiscard]] CounterRng derive(std::uint64_t index) const noexcept;

  /// Raw 128-bit block at the given counter; exposed for known-answer tests.
  [[nodiscard]] static std::array<std::uint32_t, 4> philox(std::array<std::uint32_t, 4> counter,
                                                           std::array<std::uint32_t, 2> key) noexcept;

  std::uint32_t next_u32() noexcept;
  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform in (0, 1]; safe for log().
  double uniform_open0() noexcept { return 1.0 - uniform(); }
  /// Standard normal via Box-Muller; bit-reproducible across platforms with IEEE libm.
  double normal() noexcept;

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }
  [[nodiscard]] std::uint64_t stream() const noexcept { return stream_; }

 private:
  void refill() noexcept;

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace amedlab
