#pragma once
// Carry resolution for column sums at 31-bit pitch.
//
// Stage 1 sums, for every 128-bit window of the result, the slices of all
// columns that fall into that window. Windows do not depend on each other.
// Each window yields a 128-bit payload and a small carry for the next window.
// Stage 2 ripples those carries through 512-bit groups (four windows at a
// time), sequentially from the least significant group.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "tilemul/bigint.hpp"
#include "tilemul/limbcore.hpp"

namespace tilemul {

inline constexpr std::size_t kChunkBits = 128;
inline constexpr std::size_t kGroupBits = 512;
inline constexpr std::size_t kChunksPerGroup = kGroupBits / kChunkBits;

struct CarryChunk {
  uint128_t payload = 0;
  std::uint64_t carry_out = 0;

  friend bool operator==(const CarryChunk&, const CarryChunk&) = default;
};

/// Limb count of a normalized result: columns + 2, enough for any
/// non-negative sum of 80-bit columns.
std::size_t normalized_limb_count(const WeightedAcc& w);

/// Number of 128-bit windows stage 1 produces for `w`.
std::size_t window_count(const WeightedAcc& w);

/// Sequential column-by-column reference. Accepts negative columns as long as
/// the total is non-negative (InvariantViolation otherwise).
LimbVector propagate_full(const WeightedAcc& w);

/// One stage-1 window. Columns must be non-negative (RangeError).
CarryChunk stage1_window(const WeightedAcc& w, std::size_t window);

std::vector<CarryChunk> stage1_local_carry(const WeightedAcc& w);

/// Resolves inter-window carries. `limb_count` sets the output length; a
/// carry or set bit beyond it throws InvariantViolation.
LimbVector stage2_merge(std::span<const CarryChunk> chunks, std::size_t limb_count);

/// stage2_merge(stage1_local_carry(w), normalized_limb_count(w))
LimbVector propagate_two_stage(const WeightedAcc& w);

}  // namespace tilemul
