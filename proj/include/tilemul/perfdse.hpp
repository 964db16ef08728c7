#pragma once
// Analytical throughput and resource models for a replicated tile-array
// multiplier, plus the exhaustive design-space search over
// (P_inter, P_intra0, P_intra1).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "tilemul/mulengine.hpp"

namespace tilemul {

struct SegmentCounts {
  std::size_t s0 = 0;
  std::size_t s1 = 0;
  std::size_t s1_padded = 0;  // s1 rounded up to the SIMD width
};

/// S_d = ceil(ceil(N/31) / P_intra_d).
SegmentCounts segments_per_aie(std::size_t bits, std::size_t intra0, std::size_t intra1);

/// ceil(S0*S1 / (8*eff)). Throws ArgumentError unless 0 < eff <= 1.
std::uint64_t aie_cycles(std::size_t s0, std::size_t s1, double eff);

struct ResourceCaps {
  double lut = 1.0;   // same unit as ProfileData::lut_per_task
  double bram = 1.0;
  double plio = std::numeric_limits<double>::infinity();
  double aie = 400;

  /// Key-value text: `lut`, `bram`, `plio`, `aie` (a `C_` prefix is accepted).
  static ResourceCaps load(const std::filesystem::path& path);
};

struct ProfileData {
  double lut_per_task = 0;
  double bram_per_task = 0;
  std::optional<std::uint64_t> sender_cycles_override;
  std::optional<std::uint64_t> carry_cycles_override;
  double pl_freq_hz = 200e6;
  double aie_freq_hz = 1e9;
  std::uint64_t row_overhead_cycles = 8;
  /// Measured or fitted kernel efficiency keyed by (S0, padded S1).
  std::map<std::pair<std::size_t, std::size_t>, double> eff_table;
  /// When set, shapes missing from eff_table are not estimated.
  bool eff_table_only = false;

  /// Defaults: ceil(2N/512) + ceil(N/128) and ceil(2N/128) + ceil(2N/512).
  std::uint64_t sender_cycles(std::size_t bits) const;
  std::uint64_t carry_cycles(std::size_t bits) const;
  /// Table entry if present, otherwise the kernel micro model (nullopt when
  /// eff_table_only and missing).
  std::optional<double> efficiency(std::size_t s0, std::size_t s1_padded) const;

  /// Key-value text; lines of three numbers `S0 S1 eff` add table rows.
  static ProfileData load(const std::filesystem::path& path);
  void save(std::ostream& out) const;
};

enum class Stage { Sender, Carry, Aie };
std::string to_string(Stage s);

struct ThroughputEstimate {
  double tasks_per_second = 0;
  Stage bottleneck = Stage::Aie;
  double sender_seconds = 0;
  double carry_seconds = 0;
  double aie_seconds = 0;
  std::uint64_t aie_cycles = 0;
  SegmentCounts segments;
  double efficiency = 0;
};

/// Stage latencies are converted to seconds in their own clock domain before
/// taking the max. Returns nullopt when no efficiency is available.
std::optional<ThroughputEstimate> estimate_throughput(std::size_t bits, const ArrayConfig& cfg,
                                                      const ProfileData& prof);

struct ResourceUse {
  double used = 0;
  double cap = 0;
  double slack() const { return cap - used; }
  bool ok() const { return used <= cap; }
};

struct FeasibilityVerdict {
  ResourceUse lut, bram, plio, aie;
  bool feasible() const { return lut.ok() && bram.ok() && plio.ok() && aie.ok(); }
};

FeasibilityVerdict check_constraints(const ArrayConfig& cfg, const ResourceCaps& caps,
                                     const ProfileData& prof);

struct DseCandidate {
  ArrayConfig cfg;
  ThroughputEstimate estimate;
  FeasibilityVerdict verdict;
};

struct DseOptions {
  /// Restricts the search to these (P_intra0, P_intra1) shapes; every P_inter
  /// is still enumerated.
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  /// Caps the number of rows kept (0 keeps all).
  std::size_t keep = 0;
};

/// Feasible candidates ranked by tasks/s, ties broken by smaller P_intra,
/// then smaller P_inter, then smaller P_intra0. Empty when nothing is feasible.
std::vector<DseCandidate> dse_search(std::size_t bits, const ResourceCaps& caps,
                                     const ProfileData& prof, const DseOptions& opts = {});

void write_dse_csv(std::ostream& out, const std::vector<DseCandidate>& rows);

struct CalibrationTarget {
  ArrayConfig cfg;
  double tasks_per_second = 0;
};

/// Kernel efficiency that makes the AIE stage take exactly P_inter / target
/// seconds for this shape.
double fit_efficiency(std::size_t bits, const CalibrationTarget& target, double aie_freq_hz);

/// Copies `base` and adds one fitted eff_table row per target. Throws
/// ArgumentError when a target needs eff > 1 or two targets share a shape.
ProfileData calibrate_profile(std::size_t bits, const std::vector<CalibrationTarget>& targets,
                              ProfileData base);

/// CSV with header `intra0,intra1,inter,tasks_per_s`.
std::vector<CalibrationTarget> load_calibration_targets(const std::filesystem::path& path);

}  // namespace tilemul
