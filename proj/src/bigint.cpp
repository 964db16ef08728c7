#include "tilemul/bigint.hpp"

#include <cctype>
#include <fstream>

#include "tilemul/errors.hpp"

namespace tilemul {

BigInt parse_hex(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.size() >= 2 && text[0] == '0' && (text[1] == 'x' || text[1] == 'X')) text.remove_prefix(2);
  if (text.empty()) throw ParseError("empty hex literal");

  BigInt value = 0;
  // Fold 15 digits (60 bits) at a time to keep the number of big shifts low.
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t take = std::min<std::size_t>(15, text.size() - pos);
    std::uint64_t chunk = 0;
    for (std::size_t i = 0; i < take; ++i) {
      char c = text[pos + i];
      unsigned d;
      if (c >= '0' && c <= '9') d = static_cast<unsigned>(c - '0');
      else if (c >= 'a' && c <= 'f') d = static_cast<unsigned>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') d = static_cast<unsigned>(c - 'A' + 10);
      else throw ParseError("invalid hex digit '" + std::string(1, c) + "'");
      chunk = (chunk << 4) | d;
    }
    value <<= 4 * take;
    value |= chunk;
    pos += take;
  }
  return value;
}

std::string to_hex(const BigInt& value) {
  if (value < 0) throw RangeError("to_hex: negative value");
  if (value == 0) return "0x0";
  std::vector<std::uint32_t> words;
  boost::multiprecision::export_bits(value, std::back_inserter(words), 32, true);
  static constexpr char kDigits[] = "0123456789ABCDEF";
  std::string out = "0x";
  bool leading = true;
  for (std::uint32_t w : words) {
    for (int shift = 28; shift >= 0; shift -= 4) {
      unsigned d = (w >> shift) & 0xF;
      if (leading && d == 0) continue;
      leading = false;
      out.push_back(kDigits[d]);
    }
  }
  return out;
}

std::size_t bit_length(const BigInt& value) {
  if (value == 0) return 0;
  BigInt mag = value < 0 ? BigInt(-value) : value;
  return boost::multiprecision::msb(mag) + 1;
}

BigInt low_bits(const BigInt& value, std::size_t bits) {
  BigInt mask = (BigInt(1) << bits) - 1;
  return value & mask;
}

BigInt from_uint128(uint128_t v) {
  BigInt out = static_cast<std::uint64_t>(v >> 64);
  out <<= 64;
  out |= static_cast<std::uint64_t>(v);
  return out;
}

int128_t to_int128(const BigInt& v) {
  bool neg = v < 0;
  BigInt mag = neg ? BigInt(-v) : v;
  auto lo = static_cast<std::uint64_t>(mag & std::numeric_limits<std::uint64_t>::max());
  auto hi = static_cast<std::uint64_t>(mag >> 64);
  auto u = (static_cast<uint128_t>(hi) << 64) | lo;
  return neg ? -static_cast<int128_t>(u) : static_cast<int128_t>(u);
}

std::vector<BigInt> read_hex_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<BigInt> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    try {
      values.push_back(parse_hex(line));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return values;
}

void write_hex_lines(const std::filesystem::path& path, std::span<const BigInt> values) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& v : values) out << to_hex(v) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace tilemul
