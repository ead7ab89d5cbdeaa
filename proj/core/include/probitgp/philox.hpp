#pragma once

#include <array>
#include <cstdint>

namespace probitgp {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). Stateless: the output is a
/// pure function of (key, counter), so any sample can be regenerated independently of
/// iteration order or thread partitioning.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = std::uint64_t{kMul0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kMul1} * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1], static_cast<std::uint32_t>(p0)};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
};

/// Maps two 32-bit words to a double strictly inside (0, 1) on the grid (k + 1/2) / 2^52.
/// Every grid point and its reflection 1 - u are exactly representable.
inline double to_open_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits = (std::uint64_t{hi} << 20) | (std::uint64_t{lo} >> 12);  // 52 bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-52;
}

/// Independent stream families drawn from the same seed.
enum class StreamTag : std::uint32_t {
  kSov = 0,
  kVariational = 1,
  kRejection = 2,
  kSimulation = 3,
  kCrudeBlock = 4,
};

/// Keyed uniform source: uniform(r, j) depends only on (seed, tag, r, j).
/// Each Philox block yields two uniforms, so coordinates 2k and 2k+1 share one block.
class UniformStream {
 public:
  UniformStream(std::uint64_t seed, StreamTag tag) : key_{lo32(seed), hi32(seed)}, tag_(tag) {}

  double operator()(std::uint64_t r, std::uint64_t j) const {
    const auto out = block(r, j >> 1);
    return (j & 1U) == 0 ? to_open_unit(out[0], out[1]) : to_open_unit(out[2], out[3]);
  }

  /// Both uniforms of the block holding coordinates (2k, 2k+1).
  std::array<double, 2> pair(std::uint64_t r, std::uint64_t k) const {
    const auto out = block(r, k);
    return {to_open_unit(out[0], out[1]), to_open_unit(out[2], out[3])};
  }

 private:
  static std::uint32_t lo32(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
  static std::uint32_t hi32(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

  Philox4x32::Counter block(std::uint64_t r, std::uint64_t k) const {
    // The coordinate word carries 28 bits of k and the stream tag in the top 4 bits.
    const std::uint32_t word = static_cast<std::uint32_t>(k & 0x0FFFFFFFU) |
                               (static_cast<std::uint32_t>(tag_) << 28);
    return Philox4x32::generate({lo32(r), hi32(r), word, lo32(k >> 28)}, key_);
  }

  Philox4x32::Key key_;
  StreamTag tag_;
};

/// Derives an independent 64-bit seed from (seed, index) with a splitmix64 finalizer.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace probitgp
