#include "tilemul/limbcore.hpp"

#include "tilemul/errors.hpp"

namespace tilemul {

LimbVector::LimbVector(std::vector<Limb> limbs, std::size_t bitwidth)
    : limbs_(std::move(limbs)), bitwidth_(bitwidth) {
  for (std::size_t i = 0; i < limbs_.size(); ++i) {
    if (limbs_[i] > kSegmentMask)
      throw InvariantViolation("limb " + std::to_string(i) + " has its sign bit set");
  }
}

LimbVector decompose(const BigInt& value, std::size_t bitwidth) {
  if (value < 0) throw RangeError("decompose: negative value");
  if (bit_length(value) > bitwidth)
    throw RangeError("decompose: value has " + std::to_string(bit_length(value)) +
                     " bits, declared width is " + std::to_string(bitwidth));

  std::vector<std::uint32_t> words;
  if (value != 0) boost::multiprecision::export_bits(value, std::back_inserter(words), 32, false);

  std::vector<Limb> limbs(limb_count(bitwidth), 0);
  for (std::size_t i = 0; i < limbs.size(); ++i) {
    std::size_t bit = i * kSegmentBits;
    std::size_t w = bit / 32;
    unsigned off = bit % 32;
    if (w >= words.size()) break;
    std::uint64_t window = words[w];
    if (w + 1 < words.size()) window |= std::uint64_t{words[w + 1]} << 32;
    limbs[i] = static_cast<Limb>(window >> off) & kSegmentMask;
  }
  return LimbVector(std::move(limbs), bitwidth);
}

LimbVector decompose(std::string_view hex, std::size_t bitwidth) {
  return decompose(parse_hex(hex), bitwidth);
}

BigInt recompose_value(std::span<const Limb> limbs) {
  std::size_t total_bits = limbs.size() * kSegmentBits;
  std::vector<std::uint32_t> words((total_bits + 31) / 32 + 1, 0);
  for (std::size_t i = 0; i < limbs.size(); ++i) {
    if (limbs[i] > kSegmentMask)
      throw InvariantViolation("limb " + std::to_string(i) + " has its sign bit set");
    std::size_t bit = i * kSegmentBits;
    std::size_t w = bit / 32;
    unsigned off = bit % 32;
    std::uint64_t shifted = std::uint64_t{limbs[i]} << off;
    words[w] |= static_cast<std::uint32_t>(shifted);
    words[w + 1] |= static_cast<std::uint32_t>(shifted >> 32);
  }
  BigInt value = 0;
  boost::multiprecision::import_bits(value, words.begin(), words.end(), 32, false);
  return value;
}

BigInt recompose_value(const LimbVector& lv) { return recompose_value(lv.limbs()); }

std::string recompose(const LimbVector& lv) { return to_hex(recompose_value(lv)); }

LimbVector pad_limbs(const LimbVector& lv, std::size_t target_count) {
  if (target_count < lv.size())
    throw ArgumentError("pad_limbs: target " + std::to_string(target_count) +
                        " is smaller than current count " + std::to_string(lv.size()));
  std::vector<Limb> limbs(lv.limbs().begin(), lv.limbs().end());
  limbs.resize(target_count, 0);
  return LimbVector(std::move(limbs), std::max(lv.bitwidth(), target_count * kSegmentBits));
}

Acc80 Acc80::from_raw(int128_t raw) {
  if (!fits(raw)) throw AccumulatorOverflow("value outside the signed 80-bit accumulator range");
  Acc80 a;
  a.raw_ = raw;
  return a;
}

BigInt Acc80::to_bigint() const {
  if (raw_ < 0) return -from_uint128(static_cast<uint128_t>(-raw_));
  return from_uint128(static_cast<uint128_t>(raw_));
}

Acc80& Acc80::operator+=(Acc80 other) {
  // Both operands are within 80 bits, so the 128-bit sum is exact.
  *this = from_raw(raw_ + other.raw_);
  return *this;
}

AccVector acc_mac(const AccVector& acc, Limb a_scalar, std::span<const Limb, kLanes> b_lanes) {
  if (a_scalar > kSegmentMask) throw RangeError("acc_mac: scalar segment >= 2^31");
  AccVector out = acc;
  for (std::size_t k = 0; k < kLanes; ++k) {
    if (b_lanes[k] > kSegmentMask) throw RangeError("acc_mac: lane segment >= 2^31");
    auto product = static_cast<int128_t>(std::uint64_t{a_scalar} * b_lanes[k]);
    out.lanes[k] = Acc80::from_raw(acc.lanes[k].raw() + product);
  }
  return out;
}

BigInt WeightedAcc::value() const {
  BigInt v = 0;
  for (std::size_t c = columns.size(); c-- > 0;) {
    v <<= kSegmentBits;
    v += columns[c].to_bigint();
  }
  return v;
}

}  // namespace tilemul
