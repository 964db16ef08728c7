#pragma once
// Schoolbook multiplication on a logical 2D tile array.
//
// Operand A (L0 limbs) is split into P_intra0 row blocks of S0 segments and
// operand B (L1 limbs) into P_intra1 column blocks of S1 segments, with S1
// padded to the SIMD width. Tile (r, c) multiplies A block r with B block c.
// Tiles on the same anti-diagonal r + c = d form one cascade chain: they are
// executed in order of increasing r and hand an accumulator stream from one to
// the next, so a P0 x P1 array has P0 + P1 - 1 chains (one output stream each).

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tilemul/bigint.hpp"
#include "tilemul/limbcore.hpp"

namespace tilemul {

inline constexpr std::size_t kSimdWidth = kLanes;

/// Inter-task parallelism (independent replicas) and the two dimensions of the
/// intra-task tile array.
struct ArrayConfig {
  std::size_t inter = 1;
  std::size_t intra0 = 1;
  std::size_t intra1 = 1;

  std::size_t intra() const { return intra0 * intra1; }
  /// Throws ArgumentError if any dimension is zero.
  void validate() const;

  friend bool operator==(const ArrayConfig&, const ArrayConfig&) = default;
};

struct LimbRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct TileSpec {
  std::size_t row = 0;
  std::size_t col = 0;
  LimbRange a_range;
  LimbRange b_range;

  std::size_t s0() const { return a_range.size(); }
  std::size_t s1() const { return b_range.size(); }
  /// Column index of the tile's lowest partial product.
  std::size_t base_weight() const { return a_range.begin + b_range.begin; }
  /// Number of output columns the tile contributes to: S0 + S1 - 1.
  std::size_t output_columns() const { return s0() + s1() - 1; }
};

struct CascadeChain {
  std::vector<std::size_t> tiles;  // indices into TileGrid::tiles, dependency order
  std::size_t base_weight = 0;     // lowest column touched by the chain
  std::size_t group_count = 0;     // 8-column accumulator groups in the stream
};

struct TileGrid {
  std::size_t rows = 0;  // P_intra0
  std::size_t cols = 0;  // P_intra1
  std::size_t s0 = 0;
  std::size_t s1 = 0;  // multiple of kSimdWidth
  std::size_t padded_l0 = 0;
  std::size_t padded_l1 = 0;
  std::vector<TileSpec> tiles;  // row-major
  std::vector<CascadeChain> chains;

  const TileSpec& tile(std::size_t r, std::size_t c) const { return tiles[r * cols + c]; }
  std::size_t result_columns() const { return padded_l0 + padded_l1 - 1; }
};

/// Uniform rectangular tiling of an L0 x L1 partial-product grid.
/// Throws ArgumentError when a dimension would get an empty block
/// (P_intra0 > L0 or P_intra1 > L1) or a count is zero.
TileGrid plan_tiles(std::size_t l0, std::size_t l1, const ArrayConfig& cfg);

using AccStream = std::vector<AccVector>;

/// Listing-style packed kernel: for each 8-column output group in `acc_in`
/// that the tile touches, load the incoming lanes, accumulate every local
/// 31x31 product at those columns, then emit the group. Groups outside the
/// tile's columns pass through unchanged. The stream must be contiguous
/// (consecutive base weights 8 apart) and cover the tile's output columns.
AccStream tile_kernel(std::span<const Limb> a_segs, std::span<const Limb> b_segs,
                      AccStream acc_in, std::size_t base_weight = 0);

/// Zero stream covering the columns of a standalone tile.
AccStream zero_stream(std::size_t base_weight, std::size_t columns);

struct EngineCounters {
  std::atomic<std::uint64_t> multiplications{0};
  std::atomic<std::uint64_t> products{0};     // 31x31 partial products, padding included
  std::atomic<std::uint64_t> vector_macs{0};  // 8-lane MAC instructions issued
  std::atomic<std::uint64_t> tiles{0};

  void reset();
};

struct RunOptions {
  unsigned threads = 1;  // chains evaluated concurrently when > 1
  EngineCounters* counters = nullptr;
};

/// Runs every cascade chain and merges the chain outputs into column sums.
/// Operands shorter than the tile grid are zero-padded.
WeightedAcc run_array(const LimbVector& a, const LimbVector& b, const ArrayConfig& cfg,
                      const RunOptions& opts = {});

/// decompose -> run_array -> two-stage carry -> recompose. Operands must be
/// non-negative and < 2^bits.
BigInt schoolbook_mul(const BigInt& a, const BigInt& b, std::size_t bits, const ArrayConfig& cfg,
                      const RunOptions& opts = {});
std::string schoolbook_mul(std::string_view a_hex, std::string_view b_hex, std::size_t bits,
                           const ArrayConfig& cfg, const RunOptions& opts = {});

/// Three-product recursive split down to native 64-bit multiplies; shares no
/// code with the tiled path. `bits` must be even.
BigInt karatsuba_oracle(const BigInt& a, const BigInt& b, std::size_t bits);
std::string karatsuba_oracle(std::string_view a_hex, std::string_view b_hex, std::size_t bits);

/// Micro cycle model of one tile: each of the ceil(S1/8) outer iterations
/// issues S0 packed MACs (one cycle each) plus `row_overhead` cycles of
/// loads, stores and loop control.
struct KernelTiming {
  std::uint64_t cycles = 0;
  double ideal_cycles = 0;  // S0*S1/8
  double efficiency = 0;    // ideal / modeled, in (0, 1]
};
KernelTiming kernel_cycle_count(std::size_t s0, std::size_t s1, std::uint64_t row_overhead = 8);

/// Engine handle used by the applications: a fixed array configuration plus
/// shared operation counters. Thread-safe.
class Multiplier {
 public:
  explicit Multiplier(ArrayConfig cfg = {}, unsigned threads = 1) : cfg_(cfg), threads_(threads) {}

  /// a * b for non-negative a, b < 2^bits. Falls back to a 1x1 array when the
  /// configured array is larger than the operands.
  BigInt operator()(const BigInt& a, const BigInt& b, std::size_t bits) const;

  const ArrayConfig& config() const { return cfg_; }
  EngineCounters& counters() const { return counters_; }
  std::uint64_t multiplications() const { return counters_.multiplications.load(); }

 private:
  ArrayConfig cfg_;
  unsigned threads_;
  mutable EngineCounters counters_;
};

}  // namespace tilemul
