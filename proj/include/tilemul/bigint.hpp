#pragma once
// Arbitrary-precision integer plumbing shared by every module: the value type,
// canonical hex encoding and line-oriented operand files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace tilemul {

using BigInt = boost::multiprecision::cpp_int;

__extension__ using int128_t = __int128;
__extension__ using uint128_t = unsigned __int128;

/// Parses a big-endian hex integer with an optional `0x`/`0X` prefix.
/// Throws ParseError on empty input or non-hex characters.
BigInt parse_hex(std::string_view text);

/// Canonical encoding: `0x` followed by upper-case digits without leading
/// zeros; zero is `0x0`. Negative values are rejected with RangeError.
std::string to_hex(const BigInt& value);

/// Number of significant bits; 0 for zero.
std::size_t bit_length(const BigInt& value);

BigInt low_bits(const BigInt& value, std::size_t bits);

BigInt from_uint128(uint128_t v);
int128_t to_int128(const BigInt& v);  // caller guarantees the value fits

/// One hex integer per line; blank lines and lines starting with '#' are skipped.
std::vector<BigInt> read_hex_lines(const std::filesystem::path& path);
void write_hex_lines(const std::filesystem::path& path, std::span<const BigInt> values);

}  // namespace tilemul
