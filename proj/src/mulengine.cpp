#include "tilemul/mulengine.hpp"

#include <algorithm>
#include <thread>

#include "tilemul/carrypipe.hpp"
#include "tilemul/errors.hpp"

namespace tilemul {

void ArrayConfig::validate() const {
  if (inter == 0 || intra0 == 0 || intra1 == 0)
    throw ArgumentError("array configuration dimensions must be >= 1");
}

void EngineCounters::reset() {
  multiplications = 0;
  products = 0;
  vector_macs = 0;
  tiles = 0;
}

TileGrid plan_tiles(std::size_t l0, std::size_t l1, const ArrayConfig& cfg) {
  cfg.validate();
  if (l0 == 0 || l1 == 0) throw ArgumentError("plan_tiles: operands need at least one limb");
  if (cfg.intra0 > l0 || cfg.intra1 > l1)
    throw ArgumentError("plan_tiles: over-partition, array " + std::to_string(cfg.intra0) + "x" +
                        std::to_string(cfg.intra1) + " exceeds limb counts " + std::to_string(l0) +
                        "x" + std::to_string(l1));

  TileGrid g;
  g.rows = cfg.intra0;
  g.cols = cfg.intra1;
  g.s0 = (l0 + g.rows - 1) / g.rows;
  g.s1 = round_up((l1 + g.cols - 1) / g.cols, kSimdWidth);
  g.padded_l0 = g.s0 * g.rows;
  g.padded_l1 = g.s1 * g.cols;

  g.tiles.reserve(g.rows * g.cols);
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      g.tiles.push_back(TileSpec{r, c, {r * g.s0, (r + 1) * g.s0}, {c * g.s1, (c + 1) * g.s1}});
    }
  }

  for (std::size_t d = 0; d + 1 < g.rows + g.cols; ++d) {
    CascadeChain chain;
    std::size_t r_lo = d + 1 > g.cols ? d + 1 - g.cols : 0;
    std::size_t r_hi = std::min(d, g.rows - 1);
    std::size_t lo = SIZE_MAX, hi = 0;
    for (std::size_t r = r_lo; r <= r_hi; ++r) {
      std::size_t idx = r * g.cols + (d - r);
      chain.tiles.push_back(idx);
      const auto& t = g.tiles[idx];
      lo = std::min(lo, t.base_weight());
      hi = std::max(hi, t.base_weight() + t.output_columns());
    }
    chain.base_weight = lo;
    chain.group_count = (hi - lo + kLanes - 1) / kLanes;
    g.chains.push_back(std::move(chain));
  }
  return g;
}

AccStream zero_stream(std::size_t base_weight, std::size_t columns) {
  AccStream s((columns + kLanes - 1) / kLanes);
  for (std::size_t i = 0; i < s.size(); ++i) s[i].base_weight = base_weight + i * kLanes;
  return s;
}

namespace {

// Accumulates one tile into the groups of `stream` it overlaps. Returns the
// number of 8-lane MACs issued.
std::uint64_t accumulate_tile(std::span<const Limb> a, std::span<const Limb> b,
                              std::span<AccVector> stream, std::size_t tile_base) {
  const std::size_t s0 = a.size();
  const std::size_t s1 = b.size();
  if (s0 == 0 || s1 == 0 || stream.empty()) return 0;

  // B with eight zero segments on each side so edge groups need no bounds checks.
  std::vector<Limb> b_ext(s1 + 2 * kLanes, 0);
  std::copy(b.begin(), b.end(), b_ext.begin() + kLanes);

  const std::size_t stream_base = stream.front().base_weight;
  const std::size_t g_lo = (tile_base - stream_base) / kLanes;
  const std::size_t g_hi = (tile_base + s0 + s1 - 2 - stream_base) / kLanes;

  std::uint64_t macs = 0;
  for (std::size_t g = g_lo; g <= g_hi; ++g) {
    // Local column of lane 0; the first group may start up to 7 columns early.
    const auto c0 = static_cast<std::ptrdiff_t>(stream_base + g * kLanes) -
                    static_cast<std::ptrdiff_t>(tile_base);
    const std::ptrdiff_t i_lo = std::max<std::ptrdiff_t>(0, c0 - static_cast<std::ptrdiff_t>(s1) + 1);
    const std::ptrdiff_t i_hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(s0) - 1, c0 + 7);
    if (i_lo > i_hi) continue;

    std::array<int128_t, kLanes> lanes;
    for (std::size_t k = 0; k < kLanes; ++k) lanes[k] = stream[g].lanes[k].raw();

    // Output-stationary: all reductions for this group finish before it is
    // written back. Lane k of row i reads b[c0 + k - i].
    for (std::ptrdiff_t i = i_lo; i <= i_hi; ++i) {
      const std::uint64_t av = a[static_cast<std::size_t>(i)];
      const Limb* bp = b_ext.data() + kLanes + (c0 - i);
      for (std::size_t k = 0; k < kLanes; ++k) lanes[k] += static_cast<int128_t>(av * bp[k]);
    }
    macs += static_cast<std::uint64_t>(i_hi - i_lo + 1);

    // Products are non-negative, so each lane only grew: checking the final
    // value catches any excursion past the 80-bit range.
    for (std::size_t k = 0; k < kLanes; ++k) stream[g].lanes[k] = Acc80::from_raw(lanes[k]);
  }
  return macs;
}

void check_stream(const AccStream& s, std::size_t tile_base, std::size_t columns) {
  if (s.empty()) throw ArgumentError("tile_kernel: empty accumulator stream");
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i].base_weight != s[i - 1].base_weight + kLanes)
      throw ArgumentError("tile_kernel: accumulator stream is not contiguous");
  }
  std::size_t lo = s.front().base_weight;
  std::size_t hi = s.back().base_weight + kLanes;
  if (tile_base < lo || tile_base + columns > hi)
    throw ArgumentError("tile_kernel: accumulator stream does not cover the tile's output columns");
}

}  // namespace

AccStream tile_kernel(std::span<const Limb> a_segs, std::span<const Limb> b_segs, AccStream acc_in,
                      std::size_t base_weight) {
  for (Limb v : a_segs)
    if (v > kSegmentMask) throw RangeError("tile_kernel: segment >= 2^31");
  for (Limb v : b_segs)
    if (v > kSegmentMask) throw RangeError("tile_kernel: segment >= 2^31");
  if (a_segs.empty() || b_segs.empty()) return acc_in;
  check_stream(acc_in, base_weight, a_segs.size() + b_segs.size() - 1);
  accumulate_tile(a_segs, b_segs, acc_in, base_weight);
  return acc_in;
}

WeightedAcc run_array(const LimbVector& a, const LimbVector& b, const ArrayConfig& cfg,
                      const RunOptions& opts) {
  const TileGrid grid = plan_tiles(a.size(), b.size(), cfg);

  std::vector<Limb> ap(a.limbs().begin(), a.limbs().end());
  std::vector<Limb> bp(b.limbs().begin(), b.limbs().end());
  ap.resize(grid.padded_l0, 0);
  bp.resize(grid.padded_l1, 0);

  std::vector<AccStream> outputs(grid.chains.size());
  std::atomic<std::uint64_t> macs{0};

  auto run_chain = [&](std::size_t ci) {
    const auto& chain = grid.chains[ci];
    AccStream stream = zero_stream(chain.base_weight, chain.group_count * kLanes);
    std::uint64_t local = 0;
    // Read-after-write along the chain: each tile consumes its predecessor's stream.
    for (std::size_t ti : chain.tiles) {
      const auto& t = grid.tiles[ti];
      local += accumulate_tile(std::span(ap).subspan(t.a_range.begin, t.s0()),
                               std::span(bp).subspan(t.b_range.begin, t.s1()), stream,
                               t.base_weight());
    }
    macs += local;
    outputs[ci] = std::move(stream);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(opts.threads, grid.chains.size()));
  if (workers == 1) {
    for (std::size_t ci = 0; ci < grid.chains.size(); ++ci) run_chain(ci);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    {
      std::vector<std::jthread> pool;
      for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
          try {
            for (std::size_t ci = next++; ci < grid.chains.size(); ci = next++) run_chain(ci);
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }

  // Merge in chain order so the result never depends on scheduling.
  WeightedAcc result(grid.result_columns());
  for (const auto& stream : outputs) {
    for (const auto& group : stream) {
      for (std::size_t k = 0; k < kLanes; ++k) {
        std::size_t col = group.base_weight + k;
        if (col < result.size()) {
          result.columns[col] += group.lanes[k];
        } else if (group.lanes[k].raw() != 0) {
          throw InvariantViolation("run_array: nonzero lane beyond the product width");
        }
      }
    }
  }

  if (opts.counters) {
    opts.counters->products += static_cast<std::uint64_t>(grid.padded_l0) * grid.padded_l1;
    opts.counters->vector_macs += macs.load();
    opts.counters->tiles += grid.tiles.size();
  }
  return result;
}

BigInt schoolbook_mul(const BigInt& a, const BigInt& b, std::size_t bits, const ArrayConfig& cfg,
                      const RunOptions& opts) {
  if (bits == 0) throw ArgumentError("schoolbook_mul: bit width must be >= 1");
  const LimbVector al = decompose(a, bits);
  const LimbVector bl = decompose(b, bits);
  const WeightedAcc acc = run_array(al, bl, cfg, opts);
  const LimbVector product = propagate_two_stage(acc);
  if (opts.counters) ++opts.counters->multiplications;
  return recompose_value(product);
}

std::string schoolbook_mul(std::string_view a_hex, std::string_view b_hex, std::size_t bits,
                           const ArrayConfig& cfg, const RunOptions& opts) {
  return to_hex(schoolbook_mul(parse_hex(a_hex), parse_hex(b_hex), bits, cfg, opts));
}

KernelTiming kernel_cycle_count(std::size_t s0, std::size_t s1, std::uint64_t row_overhead) {
  if (s0 == 0 || s1 == 0) throw ArgumentError("kernel_cycle_count: segment counts must be >= 1");
  KernelTiming t;
  const std::uint64_t outer = (s1 + kSimdWidth - 1) / kSimdWidth;
  t.cycles = outer * (s0 + row_overhead);
  t.ideal_cycles = static_cast<double>(s0) * static_cast<double>(s1) / kSimdWidth;
  t.efficiency = t.ideal_cycles / static_cast<double>(t.cycles);
  return t;
}

BigInt Multiplier::operator()(const BigInt& a, const BigInt& b, std::size_t bits) const {
  const std::size_t limbs = limb_count(bits);
  ArrayConfig cfg = cfg_;
  if (cfg.intra0 > limbs || cfg.intra1 > limbs) cfg = ArrayConfig{};
  return schoolbook_mul(a, b, bits, cfg, RunOptions{threads_, &counters_});
}

}  // namespace tilemul
