#pragma once
// Montgomery-form RSA on top of the tiled multiplier.
//
// Every Montgomery product costs exactly three engine multiplications and
// every exponent bit costs exactly two Montgomery products, whatever the bit
// value, so the engine work depends only on the exponent's bit length.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tilemul/bigint.hpp"
#include "tilemul/mulengine.hpp"
#include "tilemul/perfdse.hpp"

namespace tilemul {

struct MontgomeryContext {
  BigInt modulus;
  std::size_t k = 0;  // R = 2^k
  BigInt n_prime;     // -M^-1 mod R
  BigInt r_mod;       // R mod M
  BigInt r2_mod;      // R^2 mod M
};

/// Throws ArgumentError for an even modulus, M < 3, or k < bitlen(M).
MontgomeryContext mont_setup(const BigInt& modulus, std::size_t k);
/// k defaults to bitlen(M).
MontgomeryContext mont_setup(const BigInt& modulus);

/// am * bm * R^-1 mod M using three engine multiplications (d = am*bm,
/// c = n'*(d mod R), f = (c mod R)*M) and one conditional subtraction.
/// Throws RangeError when an operand is not below M.
BigInt mont_mul(const BigInt& am, const BigInt& bm, const MontgomeryContext& ctx, const Multiplier& mul);

BigInt to_mont(const BigInt& a, const MontgomeryContext& ctx, const Multiplier& mul);
BigInt from_mont(const BigInt& am, const MontgomeryContext& ctx, const Multiplier& mul);

/// Montgomery products issued by mod_exp_const_time for an exponent of
/// `exponent_bits` bits: one entry, two per bit, one exit.
constexpr std::uint64_t montmul_count(std::size_t exponent_bits) { return 2 * exponent_bits + 2; }

/// Ladder in Montgomery space, least significant bit first. Per bit the square
/// (M0) and the multiply (M1) are both computed; the multiply is kept only
/// for one bits. Input and output are in Montgomery form.
BigInt mont_exp(const BigInt& base_m, const BigInt& exponent, const MontgomeryContext& ctx,
                const Multiplier& mul);

/// base^exponent mod M for base < M, entering and leaving Montgomery form.
BigInt mod_exp_const_time(const BigInt& base, const BigInt& exponent, const MontgomeryContext& ctx,
                          const Multiplier& mul);

struct RsaKeySet {
  BigInt p, q;
  BigInt modulus;  // p*q
  BigInt phi;      // (p-1)(q-1)
  BigInt e_pub, e_prv;

  static RsaKeySet from_parts(const BigInt& p, const BigInt& q, const BigInt& e_pub, const BigInt& e_prv);
  /// File layout: p, q, e_pub, e_prv as hex lines.
  static RsaKeySet load(const std::filesystem::path& path);
};

enum class KeyCondition {
  PrimeP,
  PrimeQ,
  DistinctPrimes,
  PrivateRange,   // 1 < e_prv < phi
  Coprime,        // gcd(e_prv, phi) = 1
  PublicRange,    // 1 < e_pub < e_prv
  Inverse,        // e_pub * e_prv = 1 mod phi
};
std::string describe(KeyCondition c);

struct KeyVerdict {
  std::optional<KeyCondition> first_violation;
  bool ok() const { return !first_violation; }
};

/// Checks the conditions in declaration order and reports the first failure.
KeyVerdict keygen_check(const BigInt& p, const BigInt& q, const BigInt& e_pub, const BigInt& e_prv);

/// e^-1 mod m; throws ArgumentError when no inverse exists.
BigInt mod_inverse(const BigInt& e, const BigInt& m);

BigInt rsa_encrypt(const BigInt& message, const RsaKeySet& key, const Multiplier& mul);
BigInt rsa_decrypt(const BigInt& cipher, const RsaKeySet& key, const Multiplier& mul);

/// One kernel occupancy interval in the five-kernel pipeline:
/// 1 load, 2 prepare operands, 3 multiply, 4 collect, 5 store.
struct PipelineEvent {
  int kernel = 0;
  std::size_t task = 0;
  std::string phase;  // entry, loop, exit
  std::size_t iteration = 0;
  int m = 0;  // Montgomery product within the iteration
  int s = 0;  // multiplication step within the product (S0..S2)
  std::uint64_t start = 0;
  std::uint64_t end = 0;  // exclusive
};

struct PipelineTrace {
  std::vector<PipelineEvent> events;  // ordered by start, then kernel, then task
  std::uint64_t span = 0;
  std::uint64_t slot_cycles = 1;
  double multiplier_busy = 0;  // fraction of the span kernel 3 is occupied

  void write_csv(std::ostream& out) const;
};

struct TaskBatch {
  std::vector<BigInt> messages;
  BigInt exponent;
  BigInt modulus;
};

struct PipelineResult {
  std::vector<BigInt> outputs;
  PipelineTrace trace;
};

/// Computes every task with mod_exp_const_time and schedules the
/// multiplication steps on a slotted timeline: per slot kernel 4 collects the
/// product computed in the previous slot, kernel 2 prepares one ready step
/// (earliest ready, then lowest task) and kernel 3 multiplies the oldest
/// prepared step. Steps of one task run strictly in order. The slot length is
/// the profile's modeled per-task bottleneck in AIE cycles when the profile
/// covers the configuration, one cycle otherwise.
PipelineResult rsa_pipeline_sim(const TaskBatch& batch, const ArrayConfig& cfg, const ProfileData& prof,
                                const Multiplier& mul, unsigned threads = 1);

}  // namespace tilemul
