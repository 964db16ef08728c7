#pragma once
// Test-side reference arithmetic. Everything here goes through GMP so that no
// test compares the library against itself.

#include <gmpxx.h>

#include <cstdint>
#include <string>

#include "tilemul/bigint.hpp"

namespace oracle {

inline mpz_class to_mpz(const tilemul::BigInt& v) {
  std::string hex = tilemul::to_hex(v);
  return mpz_class(hex.substr(2), 16);
}

inline tilemul::BigInt from_mpz(const mpz_class& v) {
  if (v < 0) return -tilemul::parse_hex(mpz_class(-v).get_str(16));
  return tilemul::parse_hex(v.get_str(16));
}

class Random {
 public:
  explicit Random(unsigned long seed) : state_(gmp_randinit_mt) { state_.seed(seed); }
  mpz_class bits(std::size_t n) { return state_.get_z_bits(n); }
  tilemul::BigInt big(std::size_t n) { return from_mpz(bits(n)); }
  mpz_class below(const mpz_class& bound) { return state_.get_z_range(bound); }
  std::uint64_t u64() { return mpz_class(state_.get_z_bits(64)).get_ui(); }

 private:
  gmp_randclass state_;
};

inline mpz_class mul(const mpz_class& a, const mpz_class& b) { return a * b; }

inline mpz_class powm(const mpz_class& b, const mpz_class& e, const mpz_class& m) {
  mpz_class r;
  mpz_powm(r.get_mpz_t(), b.get_mpz_t(), e.get_mpz_t(), m.get_mpz_t());
  return r;
}

}  // namespace oracle
