#include "tilemul/perfdse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "tilemul/arraymap.hpp"
#include "tilemul/errors.hpp"

namespace tilemul {

namespace {

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

double to_number(const std::string& text, const std::string& where) {
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw ParseError(where + ": expected a number, got '" + text + "'");
  return v;
}

struct KvLine {
  std::size_t line_no;
  std::string key;               // empty for bare numeric rows
  std::vector<std::string> values;
};

// `key = value`, `key value` or bare whitespace-separated fields; '#' comments.
std::vector<KvLine> read_kv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<KvLine> out;
  std::string raw;
  std::size_t n = 0;
  while (std::getline(in, raw)) {
    ++n;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    std::replace(raw.begin(), raw.end(), '=', ' ');
    std::replace(raw.begin(), raw.end(), ',', ' ');
    std::istringstream fields(trim(raw));
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    KvLine kv{n, {}, {}};
    const bool numeric = tok[0].find_first_not_of("0123456789.+-eE") == std::string::npos;
    if (numeric) {
      kv.values = tok;
    } else {
      kv.key = lower(tok[0]);
      kv.values.assign(tok.begin() + 1, tok.end());
    }
    out.push_back(std::move(kv));
  }
  return out;
}

std::string where(const std::filesystem::path& p, const KvLine& kv) {
  return p.string() + ":" + std::to_string(kv.line_no);
}

double single_value(const std::filesystem::path& p, const KvLine& kv) {
  if (kv.values.size() != 1) throw ParseError(where(p, kv) + ": '" + kv.key + "' takes one value");
  return to_number(kv.values[0], where(p, kv));
}

}  // namespace

SegmentCounts segments_per_aie(std::size_t bits, std::size_t intra0, std::size_t intra1) {
  if (intra0 == 0 || intra1 == 0) throw ArgumentError("segments_per_aie: P_intra must be >= 1");
  const std::size_t limbs = limb_count(bits);
  SegmentCounts s;
  s.s0 = ceil_div(limbs, intra0);
  s.s1 = ceil_div(limbs, intra1);
  s.s1_padded = round_up(s.s1, kSimdWidth);
  return s;
}

std::uint64_t aie_cycles(std::size_t s0, std::size_t s1, double eff) {
  if (!(eff > 0.0 && eff <= 1.0)) throw ArgumentError("aie_cycles: efficiency must be in (0, 1]");
  const double exact = static_cast<double>(s0) * static_cast<double>(s1) / (kSimdWidth * eff);
  // Guard against 63.999999 style artefacts before rounding up.
  const double nearest = std::round(exact);
  if (std::fabs(exact - nearest) <= 1e-9 * std::max(1.0, exact)) return static_cast<std::uint64_t>(nearest);
  return static_cast<std::uint64_t>(std::ceil(exact));
}

ResourceCaps ResourceCaps::load(const std::filesystem::path& path) {
  ResourceCaps caps;
  for (const auto& kv : read_kv(path)) {
    std::string key = kv.key;
    if (key.rfind("c_", 0) == 0) key = key.substr(2);
    const double v = single_value(path, kv);
    if (!(v > 0)) throw ParseError(where(path, kv) + ": budgets must be positive");
    if (key == "lut") caps.lut = v;
    else if (key == "bram") caps.bram = v;
    else if (key == "plio") caps.plio = v;
    else if (key == "aie") caps.aie = v;
    else throw ParseError(where(path, kv) + ": unknown cap '" + kv.key + "'");
  }
  return caps;
}

std::uint64_t ProfileData::sender_cycles(std::size_t bits) const {
  if (sender_cycles_override) return *sender_cycles_override;
  return ceil_div(2 * bits, 512) + ceil_div(bits, 128);
}

std::uint64_t ProfileData::carry_cycles(std::size_t bits) const {
  if (carry_cycles_override) return *carry_cycles_override;
  return ceil_div(2 * bits, 128) + ceil_div(2 * bits, 512);
}

std::optional<double> ProfileData::efficiency(std::size_t s0, std::size_t s1_padded) const {
  if (auto it = eff_table.find({s0, s1_padded}); it != eff_table.end()) return it->second;
  if (eff_table_only) return std::nullopt;
  return kernel_cycle_count(s0, s1_padded, row_overhead_cycles).efficiency;
}

ProfileData ProfileData::load(const std::filesystem::path& path) {
  ProfileData p;
  for (const auto& kv : read_kv(path)) {
    if (kv.key.empty() || kv.key == "eff") {
      if (kv.values.size() != 3) throw ParseError(where(path, kv) + ": eff rows are 'S0 S1 eff'");
      const double s0 = to_number(kv.values[0], where(path, kv));
      const double s1 = to_number(kv.values[1], where(path, kv));
      const double eff = to_number(kv.values[2], where(path, kv));
      if (s0 < 1 || s1 < 1 || s0 != std::floor(s0) || s1 != std::floor(s1))
        throw ParseError(where(path, kv) + ": segment counts must be positive integers");
      if (!(eff > 0 && eff <= 1)) throw ParseError(where(path, kv) + ": eff must be in (0, 1]");
      p.eff_table[{static_cast<std::size_t>(s0), static_cast<std::size_t>(s1)}] = eff;
      continue;
    }
    const double v = single_value(path, kv);
    if (kv.key == "lut_per_task") p.lut_per_task = v;
    else if (kv.key == "bram_per_task") p.bram_per_task = v;
    else if (kv.key == "sender_cycles") p.sender_cycles_override = static_cast<std::uint64_t>(v);
    else if (kv.key == "carry_cycles") p.carry_cycles_override = static_cast<std::uint64_t>(v);
    else if (kv.key == "pl_freq_hz") p.pl_freq_hz = v;
    else if (kv.key == "aie_freq_hz") p.aie_freq_hz = v;
    else if (kv.key == "row_overhead_cycles") p.row_overhead_cycles = static_cast<std::uint64_t>(v);
    else if (kv.key == "eff_table_only") p.eff_table_only = v != 0;
    else throw ParseError(where(path, kv) + ": unknown profile key '" + kv.key + "'");
  }
  if (!(p.pl_freq_hz > 0 && p.aie_freq_hz > 0)) throw ParseError(path.string() + ": frequencies must be positive");
  if (p.lut_per_task < 0 || p.bram_per_task < 0) throw ParseError(path.string() + ": negative resource cost");
  return p;
}

void ProfileData::save(std::ostream& out) const {
  const auto old_precision = out.precision(17);
  out << "lut_per_task = " << lut_per_task << '\n';
  out << "bram_per_task = " << bram_per_task << '\n';
  if (sender_cycles_override) out << "sender_cycles = " << *sender_cycles_override << '\n';
  if (carry_cycles_override) out << "carry_cycles = " << *carry_cycles_override << '\n';
  out << "pl_freq_hz = " << pl_freq_hz << '\n';
  out << "aie_freq_hz = " << aie_freq_hz << '\n';
  out << "row_overhead_cycles = " << row_overhead_cycles << '\n';
  out << "eff_table_only = " << (eff_table_only ? 1 : 0) << '\n';
  if (!eff_table.empty()) out << "# S0 S1 eff\n";
  for (const auto& [shape, eff] : eff_table) out << shape.first << ' ' << shape.second << ' ' << eff << '\n';
  out.precision(old_precision);
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::Sender: return "sender";
    case Stage::Carry: return "carry";
    case Stage::Aie: return "aie";
  }
  return "?";
}

std::optional<ThroughputEstimate> estimate_throughput(std::size_t bits, const ArrayConfig& cfg,
                                                      const ProfileData& prof) {
  cfg.validate();
  ThroughputEstimate e;
  e.segments = segments_per_aie(bits, cfg.intra0, cfg.intra1);
  auto eff = prof.efficiency(e.segments.s0, e.segments.s1_padded);
  if (!eff) return std::nullopt;
  e.efficiency = *eff;
  e.aie_cycles = aie_cycles(e.segments.s0, e.segments.s1_padded, *eff);
  e.sender_seconds = static_cast<double>(prof.sender_cycles(bits)) / prof.pl_freq_hz;
  e.carry_seconds = static_cast<double>(prof.carry_cycles(bits)) / prof.pl_freq_hz;
  e.aie_seconds = static_cast<double>(e.aie_cycles) / prof.aie_freq_hz;

  double worst = e.aie_seconds;
  e.bottleneck = Stage::Aie;
  if (e.sender_seconds > worst) {
    worst = e.sender_seconds;
    e.bottleneck = Stage::Sender;
  }
  if (e.carry_seconds > worst) {
    worst = e.carry_seconds;
    e.bottleneck = Stage::Carry;
  }
  e.tasks_per_second = static_cast<double>(cfg.inter) / worst;
  return e;
}

FeasibilityVerdict check_constraints(const ArrayConfig& cfg, const ResourceCaps& caps,
                                     const ProfileData& prof) {
  cfg.validate();
  const auto inter = static_cast<double>(cfg.inter);
  FeasibilityVerdict v;
  v.aie = {inter * static_cast<double>(cfg.intra()), caps.aie};
  v.plio = {static_cast<double>(plan_broadcast(cfg).total), caps.plio};
  v.lut = {prof.lut_per_task * inter, caps.lut};
  v.bram = {prof.bram_per_task * inter, caps.bram};
  return v;
}

std::vector<DseCandidate> dse_search(std::size_t bits, const ResourceCaps& caps,
                                     const ProfileData& prof, const DseOptions& opts) {
  if (bits < kSegmentBits) throw ArgumentError("dse_search: N must be at least 31 bits");
  const std::size_t limbs = limb_count(bits);
  const auto aie_cap = std::isfinite(caps.aie) ? static_cast<std::size_t>(std::floor(caps.aie))
                                               : limbs * limbs;

  std::vector<std::pair<std::size_t, std::size_t>> shapes = opts.shapes;
  if (shapes.empty()) {
    for (std::size_t p0 = 1; p0 <= limbs; ++p0)
      for (std::size_t p1 = 1; p1 <= limbs && p0 * p1 <= aie_cap; ++p1) shapes.emplace_back(p0, p1);
  }
  std::sort(shapes.begin(), shapes.end());
  shapes.erase(std::unique(shapes.begin(), shapes.end()), shapes.end());

  std::vector<DseCandidate> out;
  for (auto [p0, p1] : shapes) {
    if (p0 == 0 || p1 == 0 || p0 > limbs || p1 > limbs || p0 * p1 > aie_cap) continue;
    for (std::size_t inter = 1; inter * p0 * p1 <= aie_cap; ++inter) {
      const ArrayConfig cfg{inter, p0, p1};
      const auto verdict = check_constraints(cfg, caps, prof);
      // Costs grow with P_inter, so the first infeasible replica count ends the scan.
      if (!verdict.feasible()) break;
      const auto est = estimate_throughput(bits, cfg, prof);
      if (!est) break;
      out.push_back({cfg, *est, verdict});
    }
  }

  std::sort(out.begin(), out.end(), [](const DseCandidate& x, const DseCandidate& y) {
    if (x.estimate.tasks_per_second != y.estimate.tasks_per_second)
      return x.estimate.tasks_per_second > y.estimate.tasks_per_second;
    if (x.cfg.intra() != y.cfg.intra()) return x.cfg.intra() < y.cfg.intra();
    if (x.cfg.inter != y.cfg.inter) return x.cfg.inter < y.cfg.inter;
    return x.cfg.intra0 < y.cfg.intra0;
  });
  if (opts.keep != 0 && out.size() > opts.keep) out.resize(opts.keep);
  return out;
}

void write_dse_csv(std::ostream& out, const std::vector<DseCandidate>& rows) {
  out << "P_intra0,P_intra1,P_inter,S0,S1,bottleneck,tasks_per_s,lut,bram,plio,aie\n";
  for (const auto& r : rows) {
    out << r.cfg.intra0 << ',' << r.cfg.intra1 << ',' << r.cfg.inter << ',' << r.estimate.segments.s0 << ','
        << r.estimate.segments.s1_padded << ',' << to_string(r.estimate.bottleneck) << ','
        << std::fixed << std::setprecision(1) << r.estimate.tasks_per_second << std::defaultfloat
        << std::setprecision(6) << ',' << r.verdict.lut.used << ',' << r.verdict.bram.used << ','
        << r.verdict.plio.used << ',' << r.verdict.aie.used << '\n';
  }
}

double fit_efficiency(std::size_t bits, const CalibrationTarget& target, double aie_freq_hz) {
  target.cfg.validate();
  if (!(target.tasks_per_second > 0)) throw ArgumentError("fit_efficiency: target throughput must be positive");
  const auto seg = segments_per_aie(bits, target.cfg.intra0, target.cfg.intra1);
  const double latency = static_cast<double>(target.cfg.inter) / target.tasks_per_second;
  const double cycles = latency * aie_freq_hz;
  return static_cast<double>(seg.s0) * static_cast<double>(seg.s1_padded) / (kSimdWidth * cycles);
}

ProfileData calibrate_profile(std::size_t bits, const std::vector<CalibrationTarget>& targets,
                              ProfileData base) {
  std::set<std::pair<std::size_t, std::size_t>> seen;
  for (const auto& t : targets) {
    const auto seg = segments_per_aie(bits, t.cfg.intra0, t.cfg.intra1);
    const std::pair shape{seg.s0, seg.s1_padded};
    if (!seen.insert(shape).second)
      throw ArgumentError("calibrate_profile: two targets map to S0=" + std::to_string(seg.s0) +
                          " S1=" + std::to_string(seg.s1_padded));
    const double eff = fit_efficiency(bits, t, base.aie_freq_hz);
    if (!(eff > 0 && eff <= 1))
      throw ArgumentError("calibrate_profile: target for " + std::to_string(t.cfg.intra0) + "x" +
                          std::to_string(t.cfg.intra1) + " needs efficiency " + std::to_string(eff));
    base.eff_table[shape] = eff;
  }
  return base;
}

std::vector<CalibrationTarget> load_calibration_targets(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<CalibrationTarget> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    line = trim(line);
    if (line.empty() || line[0] == '#' || std::isalpha(static_cast<unsigned char>(line[0]))) continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    const std::string at = path.string() + ":" + std::to_string(n);
    if (tok.size() != 4) throw ParseError(at + ": expected intra0,intra1,inter,tasks_per_s");
    CalibrationTarget t;
    t.cfg.intra0 = static_cast<std::size_t>(to_number(tok[0], at));
    t.cfg.intra1 = static_cast<std::size_t>(to_number(tok[1], at));
    t.cfg.inter = static_cast<std::size_t>(to_number(tok[2], at));
    t.tasks_per_second = to_number(tok[3], at);
    out.push_back(t);
  }
  return out;
}

}  // namespace tilemul
