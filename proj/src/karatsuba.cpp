// Independent reference multiplier. Deliberately avoids limbcore and the tile
// engine: operands are split by bit position and the recursion bottoms out in
// native 64x64 -> 128-bit products.

#include "tilemul/errors.hpp"
#include "tilemul/mulengine.hpp"

namespace tilemul {

namespace {

constexpr std::size_t kBaseWidth = 64;

BigInt karatsuba(const BigInt& a, const BigInt& b, std::size_t width) {
  if (a == 0 || b == 0) return 0;
  if (width <= kBaseWidth) {
    auto x = static_cast<std::uint64_t>(a);
    auto y = static_cast<std::uint64_t>(b);
    return from_uint128(static_cast<uint128_t>(x) * y);
  }
  const std::size_t h = width / 2;
  const BigInt mask = (BigInt(1) << h) - 1;
  const BigInt al = a & mask, ah = a >> h;
  const BigInt bl = b & mask, bh = b >> h;

  const BigInt high = karatsuba(ah, bh, width - h);
  const BigInt low = karatsuba(al, bl, h);
  // (ah + al)(bh + bl) - ah*bh - al*bl == ah*bl + al*bh
  const BigInt middle = karatsuba(ah + al, bh + bl, width - h + 1) - high - low;
  return (high << (2 * h)) + (middle << h) + low;
}

}  // namespace

BigInt karatsuba_oracle(const BigInt& a, const BigInt& b, std::size_t bits) {
  if (bits == 0 || bits % 2 != 0) throw ArgumentError("karatsuba_oracle: bit width must be even");
  if (a < 0 || b < 0) throw RangeError("karatsuba_oracle: negative operand");
  if (bit_length(a) > bits || bit_length(b) > bits)
    throw RangeError("karatsuba_oracle: operand wider than " + std::to_string(bits) + " bits");
  return karatsuba(a, b, bits);
}

std::string karatsuba_oracle(std::string_view a_hex, std::string_view b_hex, std::size_t bits) {
  return to_hex(karatsuba_oracle(parse_hex(a_hex), parse_hex(b_hex), bits));
}

}  // namespace tilemul
