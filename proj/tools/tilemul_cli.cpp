// tilemul: command-line driver for the tiled multiplier, its performance
// model, placement, RSA and Mandelbrot applications.
//
// Every command prints a JSON run report on stdout; diagnostics go to stderr.
// Exit codes: 0 success, 1 internal failure (including a failed --verify),
// 2 bad input, 3 infeasible or unsatisfiable request.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tilemul/arraymap.hpp"
#include "tilemul/carrypipe.hpp"
#include "tilemul/errors.hpp"
#include "tilemul/limbcore.hpp"
#include "tilemul/mandelbrot.hpp"
#include "tilemul/mulengine.hpp"
#include "tilemul/perfdse.hpp"
#include "tilemul/rsa.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace tilemul;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;
constexpr int kExitInfeasible = 3;

// Request that cannot be satisfied (as opposed to malformed input).
struct Infeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fnv1a_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c; in.get(c);) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  std::ostringstream s;
  s << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

json counters_json(const EngineCounters& c) {
  return {{"engine_multiplications", c.multiplications.load()},
          {"partial_products", c.products.load()},
          {"vector_macs", c.vector_macs.load()},
          {"tiles", c.tiles.load()}};
}

class Report {
 public:
  explicit Report(std::string command) : start_(std::chrono::steady_clock::now()) { doc_["command"] = command; }
  json& params() { return doc_["parameters"]; }
  json& results() { return doc_["results"]; }
  void counters(const EngineCounters& c) { doc_["counters"] = counters_json(c); }
  void output(const fs::path& path) { doc_["outputs"].push_back({{"path", path.string()}, {"checksum", fnv1a_file(path)}}); }
  void emit() {
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start_;
    doc_["wall_time_s"] = wall.count();
    std::cout << doc_.dump(2) << '\n';
  }

 private:
  std::chrono::steady_clock::time_point start_;
  json doc_;
};

BigInt random_below_pow2(std::mt19937_64& rng, std::size_t bits) {
  BigInt v = 0;
  for (std::size_t done = 0; done < bits; done += 64) v = (v << 64) | BigInt(rng());
  return low_bits(v, bits);
}

// ---- mul ----------------------------------------------------------------

struct MulArgs {
  std::size_t bits = 0;
  fs::path a, b, out;
  std::size_t intra0 = 1, intra1 = 1;
  unsigned threads = 1;
  bool verify = false;
};

int cmd_mul(const MulArgs& args) {
  Report report("mul");
  report.params() = {{"bits", args.bits}, {"a", args.a.string()}, {"b", args.b.string()},
                     {"intra0", args.intra0}, {"intra1", args.intra1}, {"threads", args.threads}};
  const auto a = read_hex_lines(args.a);
  const auto b = read_hex_lines(args.b);
  if (a.size() != b.size()) throw ParseError("operand files hold different numbers of values");

  const ArrayConfig cfg{1, args.intra0, args.intra1};
  EngineCounters counters;
  std::vector<BigInt> products;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    products.push_back(schoolbook_mul(a[i], b[i], args.bits, cfg, {args.threads, &counters}));
    if (args.verify) {
      const std::size_t even_bits = args.bits + (args.bits % 2);
      if (karatsuba_oracle(a[i], b[i], even_bits) != products.back()) ++mismatches;
    }
  }
  write_hex_lines(args.out, products);
  report.counters(counters);
  report.output(args.out);
  report.results() = {{"products", products.size()}};
  if (args.verify) report.results()["verify"] = {{"oracle", "karatsuba"}, {"mismatches", mismatches}, {"match", mismatches == 0}};
  report.emit();
  return mismatches == 0 ? 0 : kExitInternal;
}

// ---- dse / calibrate ----------------------------------------------------

struct DseArgs {
  std::size_t bits = 0;
  fs::path caps, profile, out, candidates;
  std::size_t keep = 0;
};

std::vector<std::pair<std::size_t, std::size_t>> load_shapes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  std::string line;
  while (std::getline(in, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream f(line);
    long long p0 = 0, p1 = 0;
    if (!(f >> p0)) continue;
    if (!(f >> p1) || p0 < 1 || p1 < 1) throw ParseError(path.string() + ": expected 'P_intra0 P_intra1'");
    shapes.emplace_back(p0, p1);
  }
  return shapes;
}

int cmd_dse(const DseArgs& args) {
  Report report("dse");
  report.params() = {{"bits", args.bits}, {"caps", args.caps.string()}, {"profile", args.profile.string()}};
  const ResourceCaps caps = args.caps.empty() ? ResourceCaps{} : ResourceCaps::load(args.caps);
  const ProfileData prof = args.profile.empty() ? ProfileData{} : ProfileData::load(args.profile);
  DseOptions opts;
  opts.keep = args.keep;
  if (!args.candidates.empty()) {
    opts.shapes = load_shapes(args.candidates);
    report.params()["candidates"] = args.candidates.string();
  }
  const auto rows = dse_search(args.bits, caps, prof, opts);
  if (rows.empty()) throw Infeasible("no configuration satisfies the resource caps");

  std::ofstream out(args.out);
  if (!out) throw ParseError("cannot write " + args.out.string());
  write_dse_csv(out, rows);
  out.close();
  report.output(args.out);
  const auto& best = rows.front();
  report.results() = {{"candidates", rows.size()},
                      {"best", {{"P_intra0", best.cfg.intra0}, {"P_intra1", best.cfg.intra1},
                                {"P_intra", best.cfg.intra()}, {"P_inter", best.cfg.inter},
                                {"tasks_per_s", best.estimate.tasks_per_second},
                                {"bottleneck", to_string(best.estimate.bottleneck)}}}};
  report.emit();
  return 0;
}

struct CalibrateArgs {
  std::size_t bits = 0;
  fs::path targets, base, out;
};

int cmd_calibrate(const CalibrateArgs& args) {
  Report report("calibrate");
  report.params() = {{"bits", args.bits}, {"targets", args.targets.string()}, {"base", args.base.string()}};
  const auto targets = load_calibration_targets(args.targets);
  ProfileData prof = calibrate_profile(args.bits, targets, args.base.empty() ? ProfileData{} : ProfileData::load(args.base));
  prof.eff_table_only = true;
  {
    std::ofstream out(args.out);
    if (!out) throw ParseError("cannot write " + args.out.string());
    prof.save(out);
  }
  json rows = json::array();
  for (const auto& t : targets) {
    const auto est = estimate_throughput(args.bits, t.cfg, prof);
    const double model = est ? est->tasks_per_second : 0.0;
    rows.push_back({{"P_intra0", t.cfg.intra0}, {"P_intra1", t.cfg.intra1}, {"P_inter", t.cfg.inter},
                    {"target", t.tasks_per_second}, {"model", model},
                    {"rel_error", (model - t.tasks_per_second) / t.tasks_per_second},
                    {"bottleneck", est ? to_string(est->bottleneck) : "none"}});
  }
  report.output(args.out);
  report.results() = {{"rows", rows}};
  report.emit();
  return 0;
}

// ---- bench --------------------------------------------------------------

struct BenchArgs {
  std::size_t bits = 0;
  std::size_t tasks = 1;
  std::size_t intra0 = 1, intra1 = 1;
  unsigned threads = 1;
  std::uint64_t seed = 1;
};

int cmd_bench(const BenchArgs& args) {
  Report report("bench");
  report.params() = {{"bits", args.bits}, {"tasks", args.tasks}, {"intra0", args.intra0},
                     {"intra1", args.intra1}, {"threads", args.threads}, {"seed", args.seed}};
  if (args.tasks < 1) throw ArgumentError("--tasks must be >= 1");
  std::mt19937_64 rng(args.seed);
  std::vector<std::pair<BigInt, BigInt>> inputs;
  for (std::size_t i = 0; i < args.tasks; ++i)
    inputs.emplace_back(random_below_pow2(rng, args.bits), random_below_pow2(rng, args.bits));

  const ArrayConfig cfg{1, args.intra0, args.intra1};
  const auto grid = plan_tiles(limb_count(args.bits), limb_count(args.bits), cfg);
  EngineCounters counters;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& [a, b] : inputs) schoolbook_mul(a, b, args.bits, cfg, {args.threads, &counters});
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;

  const std::uint64_t planned_products = static_cast<std::uint64_t>(grid.padded_l0) * grid.padded_l1 * args.tasks;
  report.counters(counters);
  report.results() = {{"note", "software simulation throughput on this host, not a hardware figure"},
                      {"seconds", dt.count()},
                      {"software_tasks_per_s", static_cast<double>(args.tasks) / dt.count()},
                      {"planned_partial_products", planned_products},
                      {"counters_match_plan", counters.products.load() == planned_products}};
  report.emit();
  return 0;
}

// ---- place --------------------------------------------------------------

struct PlaceArgs {
  std::size_t chains = 0, length = 0;
  std::size_t intra0 = 0, intra1 = 0;
  std::size_t tasks = 1;
  std::size_t bits = 65536;
  fs::path csv, grid_out;
};

int cmd_place(const PlaceArgs& args) {
  Report report("place");
  LogicalArray logical;
  if (args.intra0 && args.intra1) {
    const ArrayConfig cfg{args.tasks, args.intra0, args.intra1};
    const auto limbs = limb_count(args.bits);
    logical = LogicalArray::from_tile_grid(plan_tiles(limbs, limbs, cfg), args.tasks);
    report.params() = {{"intra0", args.intra0}, {"intra1", args.intra1}, {"tasks", args.tasks}, {"bits", args.bits}};
  } else if (args.chains && args.length) {
    logical = LogicalArray::uniform(args.chains, args.length, args.tasks);
    report.params() = {{"chains", args.chains}, {"length", args.length}, {"tasks", args.tasks}};
  } else {
    throw ArgumentError("give --chains and --length, or --intra0 and --intra1");
  }

  PlacementResult placed;
  try {
    placed = place(logical);
  } catch (const PlacementError& e) {
    throw Infeasible(e.what());
  }
  const auto violations = validate_placement(placed);
  if (!args.csv.empty()) {
    std::ofstream out(args.csv);
    write_assignments_csv(out, placed);
    out.close();
    report.output(args.csv);
  }
  const std::string picture = render_grid(placed);
  if (!args.grid_out.empty()) {
    std::ofstream(args.grid_out) << picture;
    report.output(args.grid_out);
  } else {
    std::cerr << picture;
  }
  report.results() = {{"occupied", placed.occupied_count()}, {"link_length", placed.link_length},
                      {"links", placed.link_count}, {"violations", violations.size()}};
  report.emit();
  return violations.empty() ? 0 : kExitInternal;
}

// ---- rsa ----------------------------------------------------------------

struct RsaArgs {
  std::string mode;
  fs::path key, in, out, trace, profile;
  std::size_t intra0 = 1, intra1 = 1;
  unsigned threads = 1;
};

int cmd_rsa(const RsaArgs& args) {
  Report report("rsa " + args.mode);
  report.params() = {{"key", args.key.string()}, {"intra0", args.intra0}, {"intra1", args.intra1}};
  const auto key = RsaKeySet::load(args.key);
  const auto verdict = keygen_check(key.p, key.q, key.e_pub, key.e_prv);
  if (args.mode == "check") {
    report.results() = {{"valid", verdict.ok()},
                        {"violation", verdict.ok() ? "" : describe(*verdict.first_violation)}};
    report.emit();
    return verdict.ok() ? 0 : kExitInfeasible;
  }
  if (!verdict.ok()) throw ParseError("key set violates '" + describe(*verdict.first_violation) + "'");
  if (args.in.empty() || args.out.empty()) throw ArgumentError("--in and --out are required");

  const auto messages = read_hex_lines(args.in);
  if (messages.empty()) throw ParseError(args.in.string() + " holds no values");
  for (const auto& m : messages)
    if (m >= key.modulus) throw RangeError("message " + to_hex(m) + " is not below the modulus");

  const ArrayConfig cfg{1, args.intra0, args.intra1};
  const Multiplier mul(cfg);
  const ProfileData prof = args.profile.empty() ? ProfileData{} : ProfileData::load(args.profile);
  const TaskBatch batch{messages, args.mode == "encrypt" ? key.e_pub : key.e_prv, key.modulus};
  const auto result = rsa_pipeline_sim(batch, cfg, prof, mul, args.threads);

  write_hex_lines(args.out, result.outputs);
  report.output(args.out);
  if (!args.trace.empty()) {
    std::ofstream t(args.trace);
    result.trace.write_csv(t);
    t.close();
    report.output(args.trace);
  }
  report.params()["in"] = args.in.string();
  report.counters(mul.counters());
  report.results() = {{"tasks", messages.size()},
                      {"montgomery_products_per_task", montmul_count(bit_length(batch.exponent))},
                      {"pipeline_span_cycles", result.trace.span * result.trace.slot_cycles},
                      {"multiplier_busy", result.trace.multiplier_busy}};
  report.emit();
  return 0;
}

// ---- mandelbrot ---------------------------------------------------------

struct MandelArgs {
  std::string center_re = "-0.5", center_im = "0", scale = "1.5";
  std::size_t width = 64, height = 64, frac_bits = 64;
  std::uint32_t max_iter = 100;
  unsigned scheduler_width = 4;
  std::size_t intra0 = 1, intra1 = 1;
  fs::path out;
};

int cmd_mandelbrot(const MandelArgs& args) {
  Report report("mandelbrot");
  report.params() = {{"center_re", args.center_re}, {"center_im", args.center_im}, {"scale", args.scale},
                     {"width", args.width}, {"height", args.height}, {"frac_bits", args.frac_bits},
                     {"max_iter", args.max_iter}, {"scheduler_width", args.scheduler_width}};
  // Parse the view with generous precision so deep zooms survive until render.
  const std::size_t parse_bits = std::max<std::size_t>(args.frac_bits, 512);
  ViewPort vp{fp_from_decimal(args.center_re, parse_bits), fp_from_decimal(args.center_im, parse_bits),
              fp_from_decimal(args.scale, parse_bits), args.width, args.height};
  const Multiplier mul(ArrayConfig{1, args.intra0, args.intra1});
  const auto map = render(vp, args.frac_bits, args.max_iter, args.scheduler_width, mul);
  write_pgm(map, args.out);
  report.output(args.out);
  report.counters(mul.counters());
  report.results() = {{"pixels", map.counts.size()}, {"iterations", map.iterations}};
  report.emit();
  return 0;
}

void add_array_flags(CLI::App* sub, std::size_t& intra0, std::size_t& intra1) {
  sub->add_option("--intra0", intra0, "tile array rows (P_intra0)")->check(CLI::PositiveNumber);
  sub->add_option("--intra1", intra1, "tile array columns (P_intra1)")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Tiled arbitrary-precision multiplier: simulation, models and applications"};
  app.require_subcommand(1);

  MulArgs mul_args;
  auto* mul = app.add_subcommand("mul", "multiply operand files line by line");
  mul->add_option("--bits", mul_args.bits, "operand width N")->required()->check(CLI::PositiveNumber);
  mul->add_option("--a", mul_args.a, "hex operand file")->required();
  mul->add_option("--b", mul_args.b, "hex operand file")->required();
  mul->add_option("--out", mul_args.out, "product file")->required();
  mul->add_option("--threads", mul_args.threads, "chain workers");
  mul->add_flag("--verify", mul_args.verify, "cross-check against the Karatsuba oracle");
  add_array_flags(mul, mul_args.intra0, mul_args.intra1);

  DseArgs dse_args;
  auto* dse = app.add_subcommand("dse", "rank array configurations with the analytical model");
  dse->add_option("--bits", dse_args.bits, "operand width N")->required();
  dse->add_option("--caps", dse_args.caps, "resource caps file");
  dse->add_option("--profile", dse_args.profile, "profile file");
  dse->add_option("--candidates", dse_args.candidates, "restrict to 'P_intra0 P_intra1' shapes from a file");
  dse->add_option("--keep", dse_args.keep, "keep only the best rows (0 = all)");
  dse->add_option("--out", dse_args.out, "ranked CSV")->required();

  CalibrateArgs cal_args;
  auto* cal = app.add_subcommand("calibrate", "fit kernel efficiencies to measured throughputs");
  cal->add_option("--bits", cal_args.bits, "operand width N")->required();
  cal->add_option("--targets", cal_args.targets, "CSV intra0,intra1,inter,tasks_per_s")->required();
  cal->add_option("--base", cal_args.base, "profile supplying frequencies and PL costs");
  cal->add_option("--out", cal_args.out, "fitted profile")->required();

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "time random multiplications on this host");
  bench->add_option("--bits", bench_args.bits, "operand width N")->required()->check(CLI::PositiveNumber);
  bench->add_option("--tasks", bench_args.tasks, "multiplications to run");
  bench->add_option("--threads", bench_args.threads, "chain workers");
  bench->add_option("--seed", bench_args.seed, "operand RNG seed");
  add_array_flags(bench, bench_args.intra0, bench_args.intra1);

  PlaceArgs place_args;
  auto* plc = app.add_subcommand("place", "place cascade chains on the 8x50 grid");
  plc->add_option("--chains", place_args.chains, "uniform chain count");
  plc->add_option("--length", place_args.length, "uniform chain length");
  plc->add_option("--tasks", place_args.tasks, "replicas (P_inter)")->check(CLI::PositiveNumber);
  plc->add_option("--bits", place_args.bits, "operand width for --intra0/--intra1 grids");
  plc->add_option("--csv", place_args.csv, "assignment CSV");
  plc->add_option("--grid-out", place_args.grid_out, "text rendering (stderr when omitted)");
  add_array_flags(plc, place_args.intra0, place_args.intra1);

  RsaArgs rsa_args;
  auto* rsa = app.add_subcommand("rsa", "Montgomery RSA on the tiled multiplier");
  rsa->add_option("mode", rsa_args.mode, "encrypt | decrypt | check")
      ->required()
      ->check(CLI::IsMember({"encrypt", "decrypt", "check"}));
  rsa->add_option("--key", rsa_args.key, "hex lines p, q, e_pub, e_prv")->required();
  rsa->add_option("--in", rsa_args.in, "hex messages, one per line");
  rsa->add_option("--out", rsa_args.out, "hex results");
  rsa->add_option("--trace", rsa_args.trace, "pipeline trace CSV");
  rsa->add_option("--profile", rsa_args.profile, "profile for trace cycle scaling");
  rsa->add_option("--threads", rsa_args.threads, "concurrent tasks");
  add_array_flags(rsa, rsa_args.intra0, rsa_args.intra1);

  MandelArgs mandel_args;
  auto* mandel = app.add_subcommand("mandelbrot", "render an escape-time map to PGM");
  mandel->add_option("--center-re", mandel_args.center_re, "decimal");
  mandel->add_option("--center-im", mandel_args.center_im, "decimal");
  mandel->add_option("--scale", mandel_args.scale, "half view width, decimal");
  mandel->add_option("--width", mandel_args.width)->check(CLI::PositiveNumber);
  mandel->add_option("--height", mandel_args.height)->check(CLI::PositiveNumber);
  mandel->add_option("--frac-bits", mandel_args.frac_bits)->check(CLI::PositiveNumber);
  mandel->add_option("--max-iter", mandel_args.max_iter)->check(CLI::PositiveNumber);
  mandel->add_option("--scheduler-width", mandel_args.scheduler_width)->check(CLI::PositiveNumber);
  mandel->add_option("--out", mandel_args.out, "PGM path")->required();
  add_array_flags(mandel, mandel_args.intra0, mandel_args.intra1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*mul) return cmd_mul(mul_args);
    if (*dse) return cmd_dse(dse_args);
    if (*cal) return cmd_calibrate(cal_args);
    if (*bench) return cmd_bench(bench_args);
    if (*plc) return cmd_place(place_args);
    if (*rsa) return cmd_rsa(rsa_args);
    if (*mandel) return cmd_mandelbrot(mandel_args);
  } catch (const Infeasible& e) {
    std::cerr << "infeasible: " << e.what() << '\n';
    return kExitInfeasible;
  } catch (const std::invalid_argument& e) {  // ParseError, ArgumentError
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::out_of_range& e) {  // RangeError
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}
