#pragma once

#include <array>
#include <cstdint>

namespace twophase {

/// Philox4x32-10 block function (Salmon et al., Random123).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Counter-based random stream addressed by (seed, replica, worker, step).
///
/// Each address is an independent substream: the seed forms the Philox key
/// and (replica, worker, step) occupy three counter words, the fourth word
/// counts blocks within the substream. Streams never share state, so any
/// execution order gives the same draws.
class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint32_t replica, std::uint32_t worker,
                std::uint32_t step);

  std::uint32_t next_u32();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on {0, ..., n-1}; n >= 1 (Lemire's unbiased multiply-shift).
  std::uint32_t uniform_index(std::uint32_t n);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  bool has_spare_normal_ = false;
  double spare_normal_ = 0.0;
};

/// Worker index reserved for drawing initial conditions.
inline constexpr std::uint32_t kInitWorker = 0xFFFFFFFFu;

}  // namespace twophase
