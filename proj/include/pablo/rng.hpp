#pragma once

#include <cstdint>
#include <string_view>

namespace pablo {

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// FNV-1a over the bytes of `label`.
std::uint64_t hash_label(std::string_view label) noexcept;

/// Counter-based 64-bit stream: draw k is mix64(seed + (k + 1) * golden).
/// The sequence is a pure function of the seed, so it is identical on every
/// platform. Child streams come from `derive(seed, label)`.
///
/// Normal variates use the Box-Muller cosine branch on two consecutive
/// uniforms u1, u2 in (0, 1]: sqrt(-2 ln u1) cos(2 pi u2). The sine output
/// is discarded so that every normal consumes exactly two draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) noexcept : seed_(seed) {}

  // mix64(seed ^ hash_label(label))
  static std::uint64_t derive(std::uint64_t seed, std::string_view label) noexcept;
  RngStream child(std::string_view label) const noexcept { return RngStream(derive(seed_, label)); }

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t counter() const noexcept { return counter_; }

  std::uint64_t next_u64() noexcept;
  // Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  // Uniform integer in [0, n); rejection sampling keeps it exactly uniform.
  std::uint64_t uniform_int(std::uint64_t n) noexcept;
  double normal() noexcept;
  // +1 or -1 with equal probability.
  double rademacher() noexcept;

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace pablo
