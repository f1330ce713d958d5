#include "memsim/engine.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

namespace memsim {

const LevelReport* SimReport::level(const std::string& name) const {
  for (const auto& l : levels)
    if (l.name == name) return &l;
  return nullptr;
}

double rounded_miss_percentage(uint64_t misses, uint64_t accesses) {
  if (accesses == 0) return 0.0;
  double pct = 100.0 * static_cast<double>(misses) / static_cast<double>(accesses);
  return std::round(pct * 1000.0) / 1000.0;
}

SimReport compute_report(const CacheHierarchy& hierarchy, uint64_t instructions, uint64_t cycles,
                         uint64_t branches, uint64_t branches_taken) {
  SimReport report;
  for (const auto& level : hierarchy.levels()) {
    const LevelStats& s = level->stats();
    LevelReport lr;
    lr.name = level->config().name;
    lr.demand_accesses = s.demand_accesses;
    lr.hits = s.hits;
    lr.misses = s.misses;
    lr.no_accesses = s.demand_accesses == 0;
    lr.miss_percentage = rounded_miss_percentage(s.misses, s.demand_accesses);
    lr.prefetches_issued = s.prefetches_issued;
    lr.useful_prefetches = s.useful_prefetches;
    report.levels.push_back(lr);
  }
  report.instructions_retired = instructions;
  report.cycles_elapsed = cycles;
  report.ipc = cycles > 0 ? static_cast<double>(instructions) / static_cast<double>(cycles) : 0.0;
  report.branches_retired = branches;
  report.branches_taken = branches_taken;
  return report;
}

namespace {

// Retries stalled or rejected requests on subsequent cycles until the level
// accepts them; returns the completion cycle.
uint64_t access_until_accepted(CacheLevel& level, AccessRequest request) {
  for (;;) {
    AccessResult result = level.access(request);
    if (result.outcome != AccessOutcome::stalled && result.outcome != AccessOutcome::rejected)
      return result.completion_cycle;
    ++request.cycle;
  }
}

struct CoreCounters {
  uint64_t instructions = 0;
  uint64_t branches = 0;
  uint64_t branches_taken = 0;
};

// Runs `count` instructions; returns false if the trace ran out first.
bool run_phase(RecordSource& trace, CacheHierarchy& hierarchy, uint64_t count, uint64_t& cycle,
               CoreCounters& counters) {
  CacheLevel& l1i = hierarchy.l1i();
  CacheLevel& l1d = hierarchy.l1d();
  const uint64_t l1i_hit = l1i.config().hit_latency;
  const uint64_t l1d_hit = l1d.config().hit_latency;

  TraceRecord rec;
  for (uint64_t i = 0; i < count; ++i) {
    if (!trace.next(rec)) return false;

    cycle += 1; // base cost

    uint64_t fetch_done = access_until_accepted(l1i, {rec.ip, rec.ip, cycle, false, false});
    if (fetch_done > cycle + l1i_hit) cycle = fetch_done - l1i_hit;

    uint64_t slowest = 0;
    for (uint64_t addr : rec.src_memory) {
      if (addr == 0) continue;
      slowest = std::max(slowest, access_until_accepted(l1d, {addr, rec.ip, cycle, false, false}));
    }
    for (uint64_t addr : rec.dest_memory) {
      if (addr == 0) continue;
      slowest = std::max(slowest, access_until_accepted(l1d, {addr, rec.ip, cycle, true, false}));
    }
    if (slowest > cycle + l1d_hit) cycle = slowest - l1d_hit;

    ++counters.instructions;
    if (rec.is_branch) {
      ++counters.branches;
      if (rec.branch_taken) ++counters.branches_taken;
    }
  }
  return true;
}

} // namespace

SimReport run_simulation(RecordSource& trace, CacheHierarchy& hierarchy,
                         uint64_t warmup_instructions, uint64_t simulation_instructions,
                         AccessLogger* logger) {
  if (warmup_instructions + simulation_instructions == 0)
    throw SimulationError("nothing to simulate: warmup and simulation instruction counts are both 0");

  if (logger) {
    for (const char* name : {"L1I", "L1D", "LLC"}) {
      if (CacheLevel* level = hierarchy.find(name)) level->set_logger(logger);
    }
  }

  uint64_t cycle = 0;
  CoreCounters warmup_counters;
  if (!run_phase(trace, hierarchy, warmup_instructions, cycle, warmup_counters)) {
    SimReport partial = compute_report(hierarchy, 0, 0);
    throw TruncatedTraceError("trace exhausted during warmup after " +
                                  std::to_string(warmup_counters.instructions) + " instructions",
                              partial);
  }

  hierarchy.reset_stats();
  uint64_t measure_start = cycle;

  CoreCounters counters;
  bool complete = run_phase(trace, hierarchy, simulation_instructions, cycle, counters);
  SimReport report = compute_report(hierarchy, counters.instructions, cycle - measure_start,
                                    counters.branches, counters.branches_taken);
  if (!complete)
    throw TruncatedTraceError("trace exhausted after " + std::to_string(counters.instructions) +
                                  " of " + std::to_string(simulation_instructions) +
                                  " simulation instructions",
                              report);
  return report;
}

SimReport run_simulation(RecordSource& trace, const SimConfig& config, AccessLogger* logger) {
  CacheHierarchy hierarchy(config.hierarchy);
  return run_simulation(trace, hierarchy, config.warmup_instructions,
                        config.simulation_instructions, logger);
}

void write_report_text(const SimReport& report, std::ostream& out) {
  out << "instructions: " << report.instructions_retired << "  cycles: " << report.cycles_elapsed
      << "  ipc: " << std::fixed << std::setprecision(6) << report.ipc << "\n";
  out << "branches: " << report.branches_retired << " (taken " << report.branches_taken << ")\n";
  for (const auto& level : report.levels) {
    out << level.name << ": accesses " << level.demand_accesses << "  hits " << level.hits
        << "  misses " << level.misses << "  miss% " << std::fixed << std::setprecision(3)
        << level.miss_percentage;
    if (level.no_accesses) out << " (no accesses)";
    out << "  pref issued " << level.prefetches_issued << "  useful " << level.useful_prefetches
        << "\n";
  }
}

void write_report_csv(const SimReport& report, std::ostream& out) {
  out << "level,demand_accesses,hits,misses,miss_percentage,prefetches_issued,useful_prefetches,"
         "instructions,cycles,ipc\n";
  for (const auto& level : report.levels) {
    out << level.name << ',' << level.demand_accesses << ',' << level.hits << ',' << level.misses
        << ',' << std::fixed << std::setprecision(3) << level.miss_percentage << ','
        << level.prefetches_issued << ',' << level.useful_prefetches << ','
        << report.instructions_retired << ',' << report.cycles_elapsed << ',' << std::fixed
        << std::setprecision(6) << report.ipc << '\n';
  }
}

} // namespace memsim
