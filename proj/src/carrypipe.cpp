#include "tilemul/carrypipe.hpp"

#include "tilemul/errors.hpp"

namespace tilemul {

std::size_t normalized_limb_count(const WeightedAcc& w) { return w.size() + 2; }

std::size_t window_count(const WeightedAcc& w) {
  return (normalized_limb_count(w) * kSegmentBits + kChunkBits - 1) / kChunkBits;
}

LimbVector propagate_full(const WeightedAcc& w) {
  const std::size_t n = normalized_limb_count(w);
  std::vector<Limb> limbs(n, 0);
  int128_t carry = 0;
  for (std::size_t c = 0; c < n; ++c) {
    int128_t v = carry + (c < w.size() ? w.columns[c].raw() : 0);
    limbs[c] = static_cast<Limb>(v & kSegmentMask);
    carry = v >> kSegmentBits;  // arithmetic shift: floor division
  }
  if (carry != 0) throw InvariantViolation("propagate_full: column sums have a negative total");
  return LimbVector(std::move(limbs), n * kSegmentBits);
}

CarryChunk stage1_window(const WeightedAcc& w, std::size_t window) {
  constexpr std::size_t kColumnBits = 80;
  const std::size_t lo_bit = window * kChunkBits;
  const std::size_t c_lo = lo_bit > kColumnBits ? (lo_bit - kColumnBits) / kSegmentBits : 0;
  const std::size_t c_hi = (lo_bit + kChunkBits - 1) / kSegmentBits;

  uint128_t sum_lo = 0;
  std::uint64_t sum_hi = 0;
  for (std::size_t c = c_lo; c <= c_hi && c < w.size(); ++c) {
    const int128_t raw = w.columns[c].raw();
    if (raw < 0) throw RangeError("stage1_local_carry: negative column " + std::to_string(c));
    if (raw == 0) continue;
    const auto v = static_cast<uint128_t>(raw);
    const auto offset = static_cast<std::ptrdiff_t>(c * kSegmentBits) - static_cast<std::ptrdiff_t>(lo_bit);
    uint128_t slice;
    if (offset >= static_cast<std::ptrdiff_t>(kChunkBits)) continue;
    if (offset >= 0) slice = v << offset;           // bits above the window belong to the next one
    else if (-offset < static_cast<std::ptrdiff_t>(kChunkBits)) slice = v >> (-offset);
    else continue;
    sum_lo += slice;
    if (sum_lo < slice) ++sum_hi;
  }
  return CarryChunk{sum_lo, sum_hi};
}

std::vector<CarryChunk> stage1_local_carry(const WeightedAcc& w) {
  std::vector<CarryChunk> chunks(window_count(w));
  for (std::size_t i = 0; i < chunks.size(); ++i) chunks[i] = stage1_window(w, i);
  return chunks;
}

LimbVector stage2_merge(std::span<const CarryChunk> chunks, std::size_t limb_count) {
  std::vector<uint128_t> words(chunks.size());
  std::uint64_t carry = 0;
  for (std::size_t g = 0; g < chunks.size(); g += kChunksPerGroup) {
    // One 512-bit group: the incoming carry plus each window's carry into its
    // upper neighbour.
    const std::size_t end = std::min(g + kChunksPerGroup, chunks.size());
    for (std::size_t k = g; k < end; ++k) {
      uint128_t v = chunks[k].payload + carry;
      const bool wrapped = v < chunks[k].payload;
      words[k] = v;
      carry = chunks[k].carry_out + (wrapped ? 1 : 0);
    }
  }
  // A carry out of the top window is one more word; the width check below
  // decides whether the requested limb count can hold it.
  if (carry != 0) words.push_back(carry);

  const std::size_t total_bits = limb_count * kSegmentBits;
  for (std::size_t k = 0; k < words.size(); ++k) {
    const std::size_t word_lo = k * kChunkBits;
    if (word_lo + kChunkBits <= total_bits) continue;
    uint128_t excess = word_lo >= total_bits ? words[k] : words[k] >> (total_bits - word_lo);
    if (excess != 0) throw InvariantViolation("stage2_merge: result wider than the requested limb count");
  }

  std::vector<Limb> limbs(limb_count, 0);
  for (std::size_t i = 0; i < limb_count; ++i) {
    const std::size_t bit = i * kSegmentBits;
    const std::size_t k = bit / kChunkBits;
    const std::size_t off = bit % kChunkBits;
    if (k >= words.size()) break;
    uint128_t v = words[k] >> off;
    if (off + kSegmentBits > kChunkBits && k + 1 < words.size()) v |= words[k + 1] << (kChunkBits - off);
    limbs[i] = static_cast<Limb>(v) & kSegmentMask;
  }
  return LimbVector(std::move(limbs), limb_count * kSegmentBits);
}

LimbVector propagate_two_stage(const WeightedAcc& w) {
  const auto chunks = stage1_local_carry(w);
  return stage2_merge(chunks, normalized_limb_count(w));
}

}  // namespace tilemul
