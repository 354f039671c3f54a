#pragma once

#include <array>
#include <cstdint>
#include <span>

namespace quicsort {

/// Philox4x32-10 block function (Salmon et al., SC'11).
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

/// Domain separation for the counter word that identifies what a stream is used for.
enum class StreamKind : std::uint32_t {
  Increment = 1,
  Bridge = 2,
  InitialPosition = 3,
  InitialVelocity = 4,
  ThirdCoefficient = 5,
  Dataset = 6,
  Subsample = 7,
  GroundTruth = 8,
  TreeRoot = 9,
};

/// Packs a kind and a small sub-level (e.g. a tree depth) into one counter word.
constexpr std::uint32_t stream_tag(StreamKind kind, std::uint32_t level = 0) {
  return (static_cast<std::uint32_t>(kind) << 16) | (level & 0xffffu);
}

/*!
 * Counter-based normal generator.
 *
 * The 64-bit seed is the Philox key; the counter holds (block, index, stream, tag).
 * Two generators built from the same (seed, index, stream, tag) produce identical
 * sequences regardless of construction order or thread, which is what lets paths,
 * chains and tree nodes be generated independently.
 */
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint32_t index, std::uint32_t stream,
             std::uint32_t tag);

  std::uint64_t next_u64();
  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  void fill_normal(std::span<double> out, double stddev);

 private:
  void refill();

  std::array<std::uint32_t, 2> key_;
  std::array<std::uint32_t, 4> counter_;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace quicsort
