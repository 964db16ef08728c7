#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tilemul/arraymap.hpp"
#include "tilemul/errors.hpp"
#include "tilemul/perfdse.hpp"

using namespace tilemul;

namespace {

const std::filesystem::path kData = TILEMUL_DATA_DIR;

std::filesystem::path write_temp(const std::string& name, const std::string& body) {
  const auto p = std::filesystem::temp_directory_path() / ("tilemul_test_" + name);
  std::ofstream(p) << body;
  return p;
}

}  // namespace

TEST_SUITE("perfdse") {

TEST_CASE("segments per tile") {
  auto s = segments_per_aie(65536, 1, 1);
  CHECK(s.s0 == 2115);
  CHECK(s.s1 == 2115);
  s = segments_per_aie(31, 1, 1);
  CHECK(s.s0 == 1);
  CHECK(s.s1 == 1);
  s = segments_per_aie(65536, 11, 12);
  CHECK(s.s0 == 193);
  CHECK(s.s1 == 177);
  CHECK(s.s1_padded == 184);
}

TEST_CASE("AIE cycle formula") {
  CHECK(aie_cycles(8, 8, 1.0) == 8);
  CHECK(aie_cycles(64, 64, 0.5) == 2 * aie_cycles(64, 64, 1.0));
  CHECK(aie_cycles(3, 8, 1.0) == 3);
  CHECK(aie_cycles(3, 5, 1.0) == 2);  // 15/8 rounded up
  CHECK_THROWS_AS(aie_cycles(8, 8, 0.0), ArgumentError);
  CHECK_THROWS_AS(aie_cycles(8, 8, 1.5), ArgumentError);
  // Agrees with the kernel micro model on its own efficiencies.
  for (std::size_t s0 : {1u, 8u, 33u, 193u})
    for (std::size_t s1 : {8u, 64u, 184u}) {
      const auto k = kernel_cycle_count(s0, s1);
      CHECK(aie_cycles(s0, s1, k.efficiency) == k.cycles);
    }
}

TEST_CASE("throughput scales with replicas and picks the slowest stage") {
  ProfileData prof;
  prof.sender_cycles_override = 1;
  prof.carry_cycles_override = 1;
  const auto one = *estimate_throughput(65536, {1, 11, 12}, prof);
  const auto two = *estimate_throughput(65536, {2, 11, 12}, prof);
  CHECK(one.bottleneck == Stage::Aie);
  CHECK(two.tasks_per_second == doctest::Approx(2 * one.tasks_per_second));

  prof.sender_cycles_override = 10'000'000;
  const auto slow = *estimate_throughput(65536, {1, 11, 12}, prof);
  CHECK(slow.bottleneck == Stage::Sender);
  CHECK(slow.tasks_per_second == doctest::Approx(prof.pl_freq_hz / 1e7));

  prof.sender_cycles_override = 1;
  prof.carry_cycles_override = 10'000'000;
  CHECK(estimate_throughput(65536, {1, 11, 12}, prof)->bottleneck == Stage::Carry);
}

TEST_CASE("default PL cycle models") {
  ProfileData prof;
  CHECK(prof.sender_cycles(65536) == 256 + 512);
  CHECK(prof.carry_cycles(65536) == 1024 + 256);
  CHECK(prof.sender_cycles(100) == 1 + 1);
}

TEST_CASE("back-solved latency reproduces the bold design") {
  const CalibrationTarget t{{3, 11, 12}, 452800};
  ProfileData prof;
  prof.sender_cycles_override = 1;
  prof.carry_cycles_override = 1;
  const double eff = fit_efficiency(65536, t, prof.aie_freq_hz);
  CHECK(eff > 0);
  CHECK(eff <= 1);
  prof.eff_table[{193, 184}] = eff;
  const auto est = *estimate_throughput(65536, t.cfg, prof);
  CHECK(est.aie_seconds == doctest::Approx(3.0 / 452800).epsilon(1e-3));
  CHECK(std::fabs(est.tasks_per_second - 452800) / 452800 < 0.005);
}

TEST_CASE("clock normalization") {
  ProfileData a;
  a.carry_cycles_override = 5000;
  ProfileData b = a;
  b.carry_cycles_override = 10000;
  b.pl_freq_hz = 2 * a.pl_freq_hz;
  const auto ea = *estimate_throughput(8192, {2, 2, 2}, a);
  const auto eb = *estimate_throughput(8192, {2, 2, 2}, b);
  CHECK(ea.tasks_per_second == doctest::Approx(eb.tasks_per_second));
  CHECK(ea.bottleneck == eb.bottleneck);
}

TEST_CASE("constraint checks") {
  ResourceCaps caps;
  ProfileData prof;
  auto v = check_constraints({3, 11, 12}, caps, prof);
  CHECK(v.aie.used == 396);
  CHECK(v.feasible());

  prof.lut_per_task = 0.781 / 7;
  v = check_constraints({7, 5, 6}, caps, prof);
  CHECK(v.lut.used == doctest::Approx(0.781));
  CHECK(v.lut.ok());

  v = check_constraints({1, 1, 401}, caps, prof);
  CHECK_FALSE(v.feasible());
  CHECK(v.aie.slack() == -1);

  caps.plio = 8;
  v = check_constraints({1, 3, 2}, caps, prof);
  CHECK(v.plio.used == 9);
  CHECK_FALSE(v.plio.ok());
}

TEST_CASE("feasibility is monotone in every parameter") {
  ResourceCaps caps;
  caps.plio = 120;
  caps.lut = 1.0;
  ProfileData prof;
  prof.lut_per_task = 0.09;
  for (std::size_t inter = 1; inter <= 12; ++inter)
    for (std::size_t p0 = 1; p0 <= 12; ++p0)
      for (std::size_t p1 = 1; p1 <= 12; ++p1) {
        if (check_constraints({inter, p0, p1}, caps, prof).feasible()) continue;
        CHECK_FALSE(check_constraints({inter + 1, p0, p1}, caps, prof).feasible());
        CHECK_FALSE(check_constraints({inter, p0 + 1, p1}, caps, prof).feasible());
        CHECK_FALSE(check_constraints({inter, p0, p1 + 1}, caps, prof).feasible());
      }
}

TEST_CASE("DSE with a single AIE") {
  ResourceCaps caps;
  caps.aie = 1;
  const auto rows = dse_search(8192, caps, ProfileData{});
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].cfg == ArrayConfig{1, 1, 1});
}

TEST_CASE("DSE reports an empty result when nothing fits") {
  ResourceCaps caps;
  caps.plio = 2;
  CHECK(dse_search(8192, caps, ProfileData{}).empty());
  CHECK_THROWS_AS(dse_search(30, caps, ProfileData{}), ArgumentError);
}

TEST_CASE("DSE ranking properties") {
  ResourceCaps caps;
  caps.plio = 200;
  ProfileData prof;
  prof.lut_per_task = 0.05;
  const auto rows = dse_search(8192, caps, prof);
  REQUIRE(rows.size() > 10);
  const auto again = dse_search(8192, caps, prof);
  REQUIRE(again.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) CHECK(rows[i].cfg == again[i].cfg);

  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    CHECK(rows[i].estimate.tasks_per_second >= rows[i + 1].estimate.tasks_per_second);
    // Model ceiling: P_inter times the slowest stage's rate.
    const auto& e = rows[i].estimate;
    const double stage = std::max({e.sender_seconds, e.carry_seconds, e.aie_seconds});
    CHECK(e.tasks_per_second <= rows[i].cfg.inter / stage * (1 + 1e-12));
  }
  // No dominated design (same resources, lower throughput) ranks above its dominator.
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = i + 1; j < rows.size(); ++j) {
      const auto& hi = rows[i];
      const auto& lo = rows[j];
      if (hi.cfg.inter == lo.cfg.inter && hi.cfg.intra() == lo.cfg.intra())
        CHECK(hi.estimate.tasks_per_second >= lo.estimate.tasks_per_second);
    }
  for (const auto& r : rows) CHECK(r.verdict.feasible());
}

TEST_CASE("caps and profile files") {
  const auto caps = ResourceCaps::load(kData / "fit65536_caps.txt");
  CHECK(caps.aie == 400);
  CHECK(caps.plio == 150);
  const auto prof = ProfileData::load(kData / "fit65536_base_profile.txt");
  CHECK(prof.sender_cycles(65536) == 400);
  CHECK(prof.carry_cycles(65536) == 600);
  CHECK(prof.pl_freq_hz == 200e6);

  const auto p = write_temp("prof.txt", "aie_freq_hz = 1e9\n# comment\n8 8 0.5\neff 16 16 0.75\n");
  const auto loaded = ProfileData::load(p);
  CHECK(loaded.eff_table.at({8, 8}) == 0.5);
  CHECK(loaded.eff_table.at({16, 16}) == 0.75);
  std::ostringstream saved;
  loaded.save(saved);
  const auto back = write_temp("prof2.txt", saved.str());
  CHECK(ProfileData::load(back).eff_table == loaded.eff_table);

  CHECK_THROWS_AS(ProfileData::load(write_temp("bad1.txt", "8 8 1.5\n")), ParseError);
  CHECK_THROWS_AS(ProfileData::load(write_temp("bad2.txt", "pl_freq_hz = fast\n")), ParseError);
  CHECK_THROWS_AS(ProfileData::load(write_temp("bad3.txt", "colour = 3\n")), ParseError);
  CHECK_THROWS_AS(ResourceCaps::load(write_temp("bad4.txt", "aie = -1\n")), ParseError);
  CHECK_THROWS_AS(ResourceCaps::load(kData / "missing.txt"), ParseError);
}

TEST_CASE("calibration round trip and the bold optimum") {
  const auto targets = load_calibration_targets(kData / "fit65536_targets.csv");
  REQUIRE(targets.size() == 12);
  auto prof = calibrate_profile(65536, targets, ProfileData::load(kData / "fit65536_base_profile.txt"));
  prof.eff_table_only = true;
  for (const auto& t : targets) {
    const auto est = estimate_throughput(65536, t.cfg, prof);
    REQUIRE(est);
    CHECK(est->bottleneck == Stage::Aie);
    CHECK(std::fabs(est->tasks_per_second - t.tasks_per_second) / t.tasks_per_second < 0.005);
  }
  DseOptions opts;
  for (const auto& t : targets) opts.shapes.emplace_back(t.cfg.intra0, t.cfg.intra1);
  const auto rows = dse_search(65536, ResourceCaps::load(kData / "fit65536_caps.txt"), prof, opts);
  REQUIRE_FALSE(rows.empty());
  CHECK(rows[0].cfg.intra() == 132);
  CHECK(rows[0].cfg.inter == 3);
  // The PLIO budget admits exactly the reported replica count for every shape.
  for (const auto& t : targets) {
    std::size_t best_inter = 0;
    for (const auto& r : rows)
      if (r.cfg.intra0 == t.cfg.intra0 && r.cfg.intra1 == t.cfg.intra1) best_inter = std::max(best_inter, r.cfg.inter);
    CHECK(best_inter == t.cfg.inter);
  }

  std::ostringstream csv;
  write_dse_csv(csv, rows);
  CHECK(csv.str().rfind("P_intra0,P_intra1,P_inter,S0,S1,bottleneck,tasks_per_s,lut,bram,plio,aie\n", 0) == 0);
}

TEST_CASE("calibration rejects impossible targets") {
  CHECK_THROWS_AS(calibrate_profile(65536, {{{1, 11, 12}, 1e9}}, ProfileData{}), ArgumentError);
  CHECK_THROWS_AS(calibrate_profile(65536, {{{1, 11, 12}, 1e5}, {{2, 11, 12}, 2e5}}, ProfileData{}), ArgumentError);
}

}
