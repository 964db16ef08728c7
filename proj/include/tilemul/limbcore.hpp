#pragma once
// Limb decomposition into 31-bit segments and the 8-lane, 80-bit accumulator
// arithmetic used by the tile kernels.

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilemul/bigint.hpp"

namespace tilemul {

using Limb = std::uint32_t;

inline constexpr unsigned kSegmentBits = 31;
inline constexpr Limb kSegmentMask = (Limb{1} << kSegmentBits) - 1;
inline constexpr std::size_t kLanes = 8;

/// ceil(bitwidth / 31)
constexpr std::size_t limb_count(std::size_t bitwidth) {
  return (bitwidth + kSegmentBits - 1) / kSegmentBits;
}

/// An unsigned integer as 31-bit segments in 32-bit containers, least
/// significant first. Every limb is < 2^31.
class LimbVector {
 public:
  LimbVector() = default;
  /// Throws InvariantViolation if any limb has its top bit set.
  LimbVector(std::vector<Limb> limbs, std::size_t bitwidth);

  std::span<const Limb> limbs() const { return limbs_; }
  std::size_t size() const { return limbs_.size(); }
  std::size_t bitwidth() const { return bitwidth_; }
  Limb operator[](std::size_t i) const { return limbs_[i]; }

  friend bool operator==(const LimbVector&, const LimbVector&) = default;

 private:
  std::vector<Limb> limbs_;
  std::size_t bitwidth_ = 0;
};

/// Splits `value` (which must be < 2^bitwidth) into ceil(bitwidth/31) limbs.
/// Throws RangeError if the value is negative or too wide.
LimbVector decompose(const BigInt& value, std::size_t bitwidth);
LimbVector decompose(std::string_view hex, std::size_t bitwidth);

/// Throws InvariantViolation on a limb >= 2^31.
BigInt recompose_value(std::span<const Limb> limbs);
BigInt recompose_value(const LimbVector& lv);
std::string recompose(const LimbVector& lv);

/// Zero-extends at the high end. Throws ArgumentError if target < size().
LimbVector pad_limbs(const LimbVector& lv, std::size_t target_count);

/// Smallest multiple of `multiple` that is >= count.
constexpr std::size_t round_up(std::size_t count, std::size_t multiple) {
  return (count + multiple - 1) / multiple * multiple;
}

/// Signed 80-bit accumulator value. Every constructor and arithmetic operation
/// checks the range; leaving it throws AccumulatorOverflow.
class Acc80 {
 public:
  static constexpr int128_t kMax = (int128_t{1} << 79) - 1;
  static constexpr int128_t kMin = -(int128_t{1} << 79);

  constexpr Acc80() = default;
  static Acc80 from_raw(int128_t raw);
  static constexpr bool fits(int128_t raw) { return raw >= kMin && raw <= kMax; }

  int128_t raw() const { return raw_; }
  BigInt to_bigint() const;

  Acc80& operator+=(Acc80 other);
  friend Acc80 operator+(Acc80 a, Acc80 b) { return a += b; }
  friend bool operator==(Acc80, Acc80) = default;

 private:
  int128_t raw_ = 0;
};

/// Eight accumulator lanes; lane k holds the column sum at 31-bit column
/// index base_weight + k.
struct AccVector {
  std::array<Acc80, kLanes> lanes{};
  std::size_t base_weight = 0;

  friend bool operator==(const AccVector&, const AccVector&) = default;
};

/// lane k += a_scalar * b_lanes[k]. Segments must be < 2^31 (RangeError);
/// an 80-bit overflow throws AccumulatorOverflow.
AccVector acc_mac(const AccVector& acc, Limb a_scalar, std::span<const Limb, kLanes> b_lanes);

/// Column sums at 31-bit pitch: column c has weight 2^(31c).
struct WeightedAcc {
  std::vector<Acc80> columns;

  WeightedAcc() = default;
  explicit WeightedAcc(std::size_t n) : columns(n) {}
  explicit WeightedAcc(std::vector<Acc80> cols) : columns(std::move(cols)) {}

  std::size_t size() const { return columns.size(); }
  /// Exact value sum(columns[c] * 2^(31c)), possibly negative.
  BigInt value() const;

  friend bool operator==(const WeightedAcc&, const WeightedAcc&) = default;
};

}  // namespace tilemul
