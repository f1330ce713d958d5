#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "memsim/analysis.hpp"
#include "memsim/engine.hpp"
#include "memsim/errors.hpp"

using namespace memsim;

namespace {

TraceRecord instr(uint64_t ip) {
  TraceRecord rec;
  rec.ip = ip;
  return rec;
}

TraceRecord load(uint64_t ip, uint64_t address) {
  TraceRecord rec = instr(ip);
  rec.add_src_memory(address);
  return rec;
}

constexpr uint64_t kLoopIp = 0x400100;

} // namespace

TEST_CASE("nothing to simulate is an error") {
  std::vector<TraceRecord> empty;
  VectorRecordSource source(&empty);
  SimConfig config;
  CHECK_THROWS_AS(run_simulation(source, config), SimulationError);
}

TEST_CASE("an always-hitting instruction stream runs at ipc 1.0") {
  std::vector<TraceRecord> records;
  for (int i = 0; i < 1001; ++i) records.push_back(instr(kLoopIp + 4 * (i % 8)));
  VectorRecordSource source(&records);

  SimConfig config;
  config.warmup_instructions = 1; // absorbs the compulsory fetch miss
  config.simulation_instructions = 1000;
  SimReport report = run_simulation(source, config);

  CHECK(report.instructions_retired == 1000);
  CHECK(report.cycles_elapsed == 1000);
  CHECK(report.ipc == doctest::Approx(1.0));
}

TEST_CASE("miss percentage rounding follows the raw counters") {
  CHECK(rounded_miss_percentage(7'552'694, 10'807'473) == doctest::Approx(69.884));
  CHECK(rounded_miss_percentage(0, 12345) == 0.0);
  CHECK(rounded_miss_percentage(1, 4) == doctest::Approx(25.0));
  CHECK(rounded_miss_percentage(0, 0) == 0.0);
}

TEST_CASE("levels with no traffic are flagged") {
  std::vector<TraceRecord> records;
  for (int i = 0; i < 64; ++i) records.push_back(instr(kLoopIp));
  VectorRecordSource source(&records);
  SimConfig config;
  config.simulation_instructions = 64;
  SimReport report = run_simulation(source, config);

  const LevelReport* l1d = report.level("L1D");
  REQUIRE(l1d != nullptr);
  CHECK(l1d->no_accesses);
  CHECK(l1d->miss_percentage == 0.0);
  CHECK(report.ipc > 0.0);
}

TEST_CASE("counters are clean at the warmup boundary") {
  std::vector<TraceRecord> records;
  for (int i = 0; i < 100; ++i) records.push_back(load(kLoopIp, 0x100000 + 64 * i));
  for (int i = 0; i < 50; ++i) records.push_back(load(kLoopIp, 0x900000 + 64 * i));
  VectorRecordSource source(&records);

  SimConfig config;
  config.warmup_instructions = 100;
  config.simulation_instructions = 50;
  SimReport report = run_simulation(source, config);

  CHECK(report.instructions_retired == 50);
  CHECK(report.level("L1D")->demand_accesses == 50);
}

TEST_CASE("a short trace raises a truncation error carrying the partial report") {
  std::vector<TraceRecord> records;
  for (int i = 0; i < 10; ++i) records.push_back(instr(kLoopIp));
  VectorRecordSource source(&records);
  SimConfig config;
  config.simulation_instructions = 20;
  try {
    run_simulation(source, config);
    FAIL("expected truncation");
  } catch (const TruncatedTraceError& e) {
    CHECK(e.partial.instructions_retired == 10);
  }
}

TEST_CASE("truncation during warmup also raises") {
  std::vector<TraceRecord> records;
  for (int i = 0; i < 5; ++i) records.push_back(instr(kLoopIp));
  VectorRecordSource source(&records);
  SimConfig config;
  config.warmup_instructions = 10;
  config.simulation_instructions = 10;
  CHECK_THROWS_AS(run_simulation(source, config), TruncatedTraceError);
}

TEST_CASE("measured counters do not depend on how many warmup repetitions ran") {
  // A periodic pattern: once warmed, every repetition leaves the same state.
  std::vector<TraceRecord> period;
  for (int i = 0; i < 64; ++i) period.push_back(load(kLoopIp + 4 * (i % 4), 0x200000 + 64 * (i % 32)));

  auto run_with_warmup = [&](int repetitions) {
    std::vector<TraceRecord> records;
    for (int r = 0; r < repetitions + 1; ++r)
      records.insert(records.end(), period.begin(), period.end());
    VectorRecordSource source(&records);
    SimConfig config;
    config.warmup_instructions = static_cast<uint64_t>(repetitions) * period.size();
    config.simulation_instructions = period.size();
    return run_simulation(source, config);
  };

  SimReport one = run_with_warmup(1);
  SimReport three = run_with_warmup(3);
  CHECK(one.level("L1D")->demand_accesses == three.level("L1D")->demand_accesses);
  CHECK(one.level("L1D")->hits == three.level("L1D")->hits);
  CHECK(one.level("L1D")->misses == three.level("L1D")->misses);
  CHECK(one.cycles_elapsed == three.cycles_elapsed);
}

TEST_CASE("per-level conservation and positive ipc on random traces") {
  std::mt19937_64 rng(61);
  std::vector<TraceRecord> records;
  for (int i = 0; i < 3000; ++i) {
    TraceRecord rec = instr(kLoopIp + 4 * (rng() % 16));
    if (rng() % 2) rec.add_src_memory(0x300000 + 64 * (rng() % 256));
    if (rng() % 8 == 0) rec.add_dest_memory(0x500000 + 64 * (rng() % 64));
    records.push_back(rec);
  }
  VectorRecordSource source(&records);
  SimConfig config;
  config.warmup_instructions = 500;
  config.simulation_instructions = 2500;
  SimReport report = run_simulation(source, config);

  for (const auto& level : report.levels) CHECK(level.hits + level.misses == level.demand_accesses);
  CHECK(report.ipc > 0.0);
  CHECK(report.instructions_retired == 2500);
}

TEST_CASE("a purely helpful prefetcher never adds stall cycles") {
  // Sequential loads, spaced with filler so prefetches are timely.
  std::vector<TraceRecord> records;
  for (int i = 0; i < 400; ++i) {
    records.push_back(load(kLoopIp, 0x800000 + 64 * i));
    for (int f = 0; f < 300; ++f) records.push_back(instr(kLoopIp + 8 + 4 * (f % 8)));
  }

  auto run = [&](const std::string& l1d_prefetcher) {
    VectorRecordSource source(&records);
    SimConfig config;
    config.hierarchy.caches[1].prefetcher = l1d_prefetcher;
    config.warmup_instructions = 301 * 4;
    config.simulation_instructions = 301 * 390;
    return run_simulation(source, config);
  };

  SimReport without = run("none");
  SimReport with = run("next_line");
  CHECK(with.level("L1D")->misses < without.level("L1D")->misses);
  CHECK(with.cycles_elapsed <= without.cycles_elapsed);
  CHECK(with.ipc >= without.ipc);
}

TEST_CASE("branches are counted but do not change timing") {
  std::vector<TraceRecord> records;
  for (int i = 0; i < 100; ++i) {
    TraceRecord rec = instr(kLoopIp);
    rec.is_branch = i % 2 == 0;
    rec.branch_taken = i % 4 == 0;
    records.push_back(rec);
  }
  VectorRecordSource source(&records);
  SimConfig config;
  config.warmup_instructions = 4;
  config.simulation_instructions = 96;
  SimReport report = run_simulation(source, config);
  CHECK(report.branches_retired == 48);
  CHECK(report.branches_taken == 24);
  CHECK(report.cycles_elapsed == 96);
}

TEST_CASE("the access log records fetches and loads in issue order") {
  std::vector<TraceRecord> records;
  TraceRecord two_loads = instr(kLoopIp);
  two_loads.add_src_memory(0xAAAA00);
  two_loads.add_src_memory(0xBBBB00);
  records.push_back(two_loads);

  VectorRecordSource source(&records);
  SimConfig config;
  config.simulation_instructions = 1;
  VectorAccessLogger logger;
  run_simulation(source, config, &logger);

  // Misses are forwarded, so the LLC lookup path logs them as well.
  std::vector<AccessLogEntry> l1i, l1d, llc;
  for (const auto& e : logger.entries()) {
    if (e.level == LogLevel::L1I) l1i.push_back(e);
    if (e.level == LogLevel::L1D) l1d.push_back(e);
    if (e.level == LogLevel::LLC) llc.push_back(e);
  }
  REQUIRE(l1i.size() == 1);
  CHECK(l1i[0].address == kLoopIp);
  REQUIRE(l1d.size() == 2);
  CHECK(l1d[0].address == 0xAAAA00); // slot order
  CHECK(l1d[1].address == 0xBBBB00);
  CHECK(llc.size() == 3); // every one of these misses reached the last level
}

TEST_CASE("log cycles are non-decreasing within each level") {
  std::mt19937_64 rng(67);
  std::vector<TraceRecord> records;
  for (int i = 0; i < 2000; ++i) {
    TraceRecord rec = instr(kLoopIp + 4 * (rng() % 8));
    if (rng() % 2) rec.add_src_memory(0x600000 + 64 * (rng() % 512));
    records.push_back(rec);
  }
  VectorRecordSource source(&records);
  SimConfig config;
  config.simulation_instructions = 2000;
  VectorAccessLogger logger;
  run_simulation(source, config, &logger);

  uint64_t last_cycle[3] = {0, 0, 0};
  for (const auto& entry : logger.entries()) {
    auto level = static_cast<std::size_t>(entry.level);
    CHECK(entry.cycle >= last_cycle[level]);
    last_cycle[level] = entry.cycle;
  }
}

TEST_CASE("report csv is stable and carries the core row data") {
  std::vector<TraceRecord> records;
  for (int i = 0; i < 32; ++i) records.push_back(load(kLoopIp, 0x700000 + 64 * i));
  VectorRecordSource source(&records);
  SimConfig config;
  config.simulation_instructions = 32;
  SimReport report = run_simulation(source, config);

  std::ostringstream a, b;
  write_report_csv(report, a);
  write_report_csv(report, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("L1D,") != std::string::npos);
  CHECK(a.str().rfind("level,demand_accesses", 0) == 0);
}
