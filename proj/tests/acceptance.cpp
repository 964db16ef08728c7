// Acceptance run: one PASS/FAIL line per headline criterion, each checked at
// its stated tolerance. Exit status is nonzero if any criterion fails.

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "tilemul/arraymap.hpp"
#include "tilemul/carrypipe.hpp"
#include "tilemul/errors.hpp"
#include "tilemul/limbcore.hpp"
#include "tilemul/mandelbrot.hpp"
#include "tilemul/mulengine.hpp"
#include "tilemul/perfdse.hpp"
#include "tilemul/rsa.hpp"

using namespace tilemul;

namespace {

const std::filesystem::path kData = TILEMUL_DATA_DIR;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) detail << "FIRST FAILURE: " << what << "; ";
    pass = pass && ok;
  }
};

// ---- 1: multiplication correctness ---------------------------------------

void multiplication_correctness(Outcome& out) {
  oracle::Random rng(1001);
  const std::vector<ArrayConfig> shapes{{1, 1, 1}, {1, 4, 5}, {1, 11, 12}, {1, 8, 3}};
  for (std::size_t bits : {1024u, 4096u, 8192u, 32768u, 65536u}) {
    std::size_t agree = 0;
    for (int i = 0; i < 1000; ++i) {
      const mpz_class a = rng.bits(bits), b = rng.bits(bits);
      const BigInt ba = oracle::from_mpz(a), bb = oracle::from_mpz(b);
      const BigInt tiled = schoolbook_mul(ba, bb, bits, shapes[i % shapes.size()]);
      const BigInt kara = karatsuba_oracle(ba, bb, bits);
      if (tiled == kara && oracle::to_mpz(tiled) == a * b) ++agree;
    }
    out.detail << "N=" << bits << ": " << agree << "/1000; ";
    out.require(agree == 1000, "random pairs at N=" + std::to_string(bits));
  }

  std::uint64_t checked = 0, wrong = 0;
  for (std::size_t bits = 1; bits <= 12; ++bits) {
    const std::uint64_t top = std::uint64_t{1} << bits;
    for (std::uint64_t a = 0; a < top; ++a)
      for (std::uint64_t b = 0; b < top; ++b) {
        ++checked;
        if (schoolbook_mul(BigInt(a), BigInt(b), bits, ArrayConfig{}) != BigInt(a * b)) ++wrong;
      }
  }
  out.detail << "exhaustive N<=12: " << checked - wrong << "/" << checked << " native matches";
  out.require(wrong == 0, "exhaustive small widths");
}

// ---- 2: tiling invariance --------------------------------------------------

void tiling_invariance(Outcome& out) {
  oracle::Random rng(1002);
  const std::vector<ArrayConfig> shapes{{1, 1, 1}, {1, 11, 12}, {1, 4, 5}, {1, 16, 17}, {1, 7, 3}};
  std::size_t identical = 0;
  for (int i = 0; i < 50; ++i) {
    const mpz_class a = rng.bits(65536), b = rng.bits(65536);
    const BigInt ba = oracle::from_mpz(a), bb = oracle::from_mpz(b);
    std::set<std::string> distinct;
    for (const auto& cfg : shapes) distinct.insert(to_hex(schoolbook_mul(ba, bb, 65536, cfg)));
    if (distinct.size() == 1 && parse_hex(*distinct.begin()) == oracle::from_mpz(a * b)) ++identical;
  }
  out.detail << identical << "/50 pairs bit-identical across (1,1),(11,12),(4,5),(16,17),(7,3)";
  out.require(identical == 50, "tiling invariance");
}

// ---- 3: accumulator safety -------------------------------------------------

void accumulator_safety(Outcome& out) {
  std::array<Limb, kLanes> b;
  b.fill(kSegmentMask);
  const int128_t product = (int128_t{1} << 62) - (int128_t{1} << 32) + 1;

  AccVector acc;
  bool clean = true;
  try {
    for (int i = 0; i < (1 << 17); ++i) acc = acc_mac(acc, kSegmentMask, b);
  } catch (const AccumulatorOverflow&) {
    clean = false;
  }
  const bool exact = clean && acc.lanes[0].raw() == product * (int128_t{1} << 17);
  out.require(clean && exact, "2^17 maximal products must fit exactly");

  AccVector big;
  std::uint64_t fired_at = 0;
  for (std::uint64_t i = 1; i <= (std::uint64_t{1} << 18); ++i) {
    try {
      big = acc_mac(big, kSegmentMask, b);
    } catch (const AccumulatorOverflow&) {
      fired_at = i;
      break;
    }
  }
  out.require(fired_at != 0, "2^18 maximal products must raise the overflow error");
  out.detail << "2^17 products: " << (clean ? "no overflow" : "overflow") << (exact ? ", exact sum" : "")
             << "; 2^18 products: overflow detected at product #" << fired_at;
}

// ---- 4: carry equivalence --------------------------------------------------

void carry_equivalence(Outcome& out) {
  std::mt19937_64 rng(1004);
  std::size_t agree = 0, adversarial = 0;
  for (int i = 0; i < 10000; ++i) {
    const std::size_t n = 1 + rng() % 96;
    WeightedAcc w(n);
    switch (i % 5) {
      case 0:  // every column saturated: every window carries
        for (auto& c : w.columns) c = Acc80::from_raw(Acc80::kMax);
        ++adversarial;
        break;
      case 1:  // all-ones bit pattern plus one: a carry ripples through every window
        for (auto& c : w.columns) c = Acc80::from_raw(kSegmentMask);
        w.columns[0] = Acc80::from_raw(int128_t{kSegmentMask} + 1);
        ++adversarial;
        break;
      default:
        for (auto& c : w.columns) {
          const unsigned width = 1 + static_cast<unsigned>(rng() % 79);
          const uint128_t raw = (uint128_t(rng()) << 64 | rng()) & ((uint128_t(1) << width) - 1);
          c = Acc80::from_raw(static_cast<int128_t>(raw));
        }
    }
    const auto two = stage2_merge(stage1_local_carry(w), normalized_limb_count(w));
    const auto full = propagate_full(w);
    if (two == full && oracle::to_mpz(recompose_value(two)) == oracle::to_mpz(w.value())) ++agree;
  }
  out.detail << agree << "/10000 bit-exact (" << adversarial << " adversarial carry patterns)";
  out.require(agree == 10000, "two-stage carry equivalence");
}

// ---- 5: PLIO formula -------------------------------------------------------

void plio_formula(Outcome& out) {
  const auto p = plan_broadcast({1, 3, 2});
  out.detail << p.inputs_per_task << " inputs + " << p.outputs_per_task << " outputs = " << p.total;
  out.require(p.inputs_per_task == 5 && p.outputs_per_task == 4 && p.total == 9, "PLIO counts for (3,2,1)");
}

// ---- 6: placement ----------------------------------------------------------

void placement(Outcome& out) {
  const auto fig = place(LogicalArray::uniform(5, 4, 1));
  const auto fig_v = validate_placement(fig);
  out.require(fig.occupied_count() == 20 && fig_v.empty(), "5 links x 4 cells");

  const auto grid = plan_tiles(limb_count(65536), limb_count(65536), {3, 11, 12});
  const auto big = place(LogicalArray::from_tile_grid(grid, 3));
  const auto big_v = validate_placement(big);
  out.require(big.occupied_count() == 396 && big_v.empty(), "3 x 132 cells");

  auto rejected = [](const LogicalArray& la) {
    try {
      place(la);
      return false;
    } catch (const PlacementError&) {
      return true;
    }
  };
  const bool over = rejected(LogicalArray::uniform(401, 1, 1)) && rejected(LogicalArray::uniform(67, 6, 1)) &&
                    rejected(LogicalArray::uniform(3, 132, 1));
  const bool too_long = rejected(LogicalArray::uniform(1, 51, 1));
  out.require(over && too_long, "over-capacity and over-length requests must be rejected");
  out.detail << "20 cells: " << fig_v.size() << " violations; 396 cells: " << big_v.size()
             << " violations (link length " << big.link_length << ", " << big.link_count
             << " links); >400 cells rejected: " << (over ? "yes" : "no")
             << "; link > 50 rejected: " << (too_long ? "yes" : "no");
}

// ---- 7: calibration consistency at 65,536 bits --------------------------

void dse_calibration(Outcome& out) {
  const auto targets = load_calibration_targets(kData / "fit65536_targets.csv");
  out.require(targets.size() == 12, "twelve calibration rows");
  auto prof = calibrate_profile(65536, targets, ProfileData::load(kData / "fit65536_base_profile.txt"));
  prof.eff_table_only = true;

  double worst = 0;
  for (const auto& t : targets) {
    const auto est = estimate_throughput(65536, t.cfg, prof);
    const double err = est ? std::fabs(est->tasks_per_second - t.tasks_per_second) / t.tasks_per_second : 1.0;
    worst = std::max(worst, err);
  }
  out.require(worst < 0.005, "each modeled throughput within 0.5%");

  DseOptions opts;
  for (const auto& t : targets) opts.shapes.emplace_back(t.cfg.intra0, t.cfg.intra1);
  const auto rows = dse_search(65536, ResourceCaps::load(kData / "fit65536_caps.txt"), prof, opts);
  const bool picked = !rows.empty() && rows[0].cfg.intra() == 132 && rows[0].cfg.inter == 3;
  out.require(picked, "search selects P_intra=132, P_inter=3");
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f%%", 100 * worst);
  out.detail << "max |model - target| / target = " << buf << " over 12 rows; best = ";
  if (!rows.empty())
    out.detail << "P_intra " << rows[0].cfg.intra() << " (" << rows[0].cfg.intra0 << "x" << rows[0].cfg.intra1
               << "), P_inter " << rows[0].cfg.inter << ", " << std::lround(rows[0].estimate.tasks_per_second)
               << " tasks/s [calibration consistency, not an independent prediction]";
}

// ---- 8: RSA ----------------------------------------------------------------

void rsa_roundtrip(Outcome& out) {
  oracle::Random rng(1008);
  const std::vector<std::size_t> sizes{512, 768, 1024, 1536, 2048};
  std::size_t ok = 0, instances = 0;
  bool constant = true;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    const std::size_t bits = sizes[s];
    for (int i = 0; i < 20; ++i, ++instances) {
      mpz_class p, q, n, phi, d, e = 65537;
      do {
        mpz_class r = rng.bits(bits / 2) | (mpz_class(1) << (bits / 2 - 1)) | (mpz_class(1) << (bits / 2 - 2));
        mpz_nextprime(p.get_mpz_t(), r.get_mpz_t());
        r = rng.bits(bits / 2) | (mpz_class(1) << (bits / 2 - 1)) | (mpz_class(1) << (bits / 2 - 2));
        mpz_nextprime(q.get_mpz_t(), r.get_mpz_t());
        phi = (p - 1) * (q - 1);
      } while (p == q || mpz_invert(d.get_mpz_t(), e.get_mpz_t(), phi.get_mpz_t()) == 0 || d <= e);
      n = p * q;
      const auto key = RsaKeySet::from_parts(oracle::from_mpz(p), oracle::from_mpz(q), oracle::from_mpz(e),
                                             oracle::from_mpz(d));
      const mpz_class m = rng.below(n);
      const Multiplier mul({1, 2, 3});
      const bool valid = keygen_check(key.p, key.q, key.e_pub, key.e_prv).ok();
      const BigInt c = rsa_encrypt(oracle::from_mpz(m), key, mul);
      const BigInt back = rsa_decrypt(c, key, mul);
      if (valid && oracle::to_mpz(c) == oracle::powm(m, e, n) && oracle::to_mpz(back) == m &&
          oracle::to_mpz(back) == oracle::powm(oracle::to_mpz(c), d, n))
        ++ok;
    }

    // Same modulus, equal-length exponents with different Hamming weights.
    mpz_class modulus = rng.bits(bits) | (mpz_class(1) << (bits - 1)) | 1;
    const auto ctx = mont_setup(oracle::from_mpz(modulus));
    const BigInt base = oracle::from_mpz(rng.below(modulus));
    std::set<std::uint64_t> counts;
    for (const BigInt& ex : {BigInt(1) << (bits - 1), (BigInt(1) << bits) - 1,
                             (BigInt(1) << (bits - 1)) | oracle::from_mpz(rng.bits(bits - 1))}) {
      const Multiplier mul;
      mod_exp_const_time(base, ex, ctx, mul);
      counts.insert(mul.multiplications());
    }
    const bool same = counts.size() == 1 && *counts.begin() == 3 * montmul_count(bits);
    constant = constant && same;
  }
  out.detail << ok << "/" << instances << " instances round-trip and match GMP powm (key sizes 512-2048); "
             << "engine multiplications independent of Hamming weight: " << (constant ? "yes" : "no");
  out.require(ok == instances && instances == 100, "RSA instances");
  out.require(constant, "constant engine work");
}

// ---- 9: Mandelbrot ---------------------------------------------------------

std::uint32_t escape_double(double cr, double ci, std::uint32_t max_iter) {
  double re = cr, im = ci;
  for (std::uint32_t i = 0; i < max_iter; ++i) {
    const double re2 = re * re, im2 = im * im, reim = re * im;
    if (re2 + im2 > 4.0) return i;
    re = re2 - im2 + cr;
    im = 2 * reim + ci;
  }
  return max_iter;
}

void mandelbrot(Outcome& out) {
  const Multiplier mul;
  const ViewPort shallow{fp_from_decimal("-0.5", 64), fp_from_decimal("0", 64), fp_from_decimal("1.5", 64), 64, 64};
  const auto map = render(shallow, 64, 100, 4, mul);
  std::size_t match = 0;
  for (std::size_t y = 0; y < 64; ++y)
    for (std::size_t x = 0; x < 64; ++x) {
      const double cr = -0.5 + (2.0 * x + 1 - 64) * 1.5 / 64;
      const double ci = 0.0 - (2.0 * y + 1 - 64) * 1.5 / 64;
      if (map.at(x, y) == escape_double(cr, ci, 100)) ++match;
    }
  out.require(match == 64 * 64, "shallow view matches the double-precision oracle");

  // Deep zoom around the boundary point c = i with half-width 2^-62.
  const ViewPort deep{{BigInt(0), 256}, {BigInt(1) << 256, 256}, {BigInt(1) << (256 - 62), 256}, 16, 16};
  const auto lo = render(deep, 64, 400, 4, mul);
  const auto hi = render(deep, 256, 400, 4, mul);
  std::size_t differ = 0;
  for (std::size_t i = 0; i < lo.counts.size(); ++i) differ += lo.counts[i] != hi.counts[i];
  out.require(differ >= 1, "64-bit and 256-bit deep-zoom maps differ");

  bool invariant = true;
  for (unsigned w : {1u, 4u, 16u}) {
    invariant = invariant && render(shallow, 64, 100, w, mul) == map;
    invariant = invariant && render(deep, 256, 400, w, mul) == hi;
  }
  out.require(invariant, "scheduler width does not change the output");
  out.detail << "64x64 shallow view: " << match << "/4096 pixels equal the double oracle; deep zoom (scale 2^-62): "
             << differ << "/256 pixels differ between 64 and 256 fractional bits; widths {1,4,16} identical: "
             << (invariant ? "yes" : "no");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"1 multiplication correctness", multiplication_correctness},
      {"2 tiling invariance", tiling_invariance},
      {"3 accumulator safety", accumulator_safety},
      {"4 carry equivalence", carry_equivalence},
      {"5 PLIO formula", plio_formula},
      {"6 placement", placement},
      {"7 DSE calibration", dse_calibration},
      {"8 RSA", rsa_roundtrip},
      {"9 Mandelbrot", mandelbrot},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      run(out);
    } catch (const std::exception& e) {
      out.require(false, std::string("exception: ") + e.what());
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.1f s", dt.count());
    std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << name << ": " << out.detail.str() << " (" << secs << ")"
              << std::endl;
    failures += !out.pass;
  }
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
