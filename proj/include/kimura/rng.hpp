#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace kimura {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter generate(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kM0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kM1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// Per-particle stream: a pure function of (seed, stream id, draw index).
class ParticleStream {
 public:
  ParticleStream(std::uint64_t seed, std::uint64_t stream)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_(stream) {}

  /// Uniform in the open interval (0,1), 53 bits.
  double uniform() {
    if (cached_uniforms_ == 0) refill();
    return uniforms_[--cached_uniforms_];
  }

  /// Standard normal by Box-Muller, two per block.
  double normal() {
    if (has_normal_) {
      has_normal_ = false;
      return spare_;
    }
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_normal_ = true;
    return r * std::cos(a);
  }

  [[nodiscard]] std::uint64_t blocks_used() const { return block_; }

 private:
  void refill() {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(stream_),
                                  static_cast<std::uint32_t>(stream_ >> 32)};
    const auto out = Philox4x32::generate(ctr, key_);
    ++block_;
    constexpr double scale = 1.0 / 9007199254740992.0;  // 2^-53
    auto to_unit = [&](std::uint32_t a, std::uint32_t b) {
      const std::uint64_t bits = ((static_cast<std::uint64_t>(a) << 32) | b) >> 11;
      return (static_cast<double>(bits) + 0.5) * scale;
    };
    uniforms_[1] = to_unit(out[0], out[1]);
    uniforms_[0] = to_unit(out[2], out[3]);
    cached_uniforms_ = 2;
  }

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<double, 2> uniforms_{};
  int cached_uniforms_ = 0;
  double spare_ = 0.0;
  bool has_normal_ = false;
};

}  // namespace kimura
