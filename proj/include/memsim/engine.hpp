#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "memsim/cache.hpp"
#include "memsim/trace.hpp"

namespace memsim {

struct SimConfig {
  uint64_t warmup_instructions = 0;
  uint64_t simulation_instructions = 0;
  HierarchyConfig hierarchy = default_hierarchy_config();
};

struct LevelReport {
  std::string name;
  uint64_t demand_accesses = 0;
  uint64_t hits = 0;
  uint64_t misses = 0;
  double miss_percentage = 0.0; // rounded to 3 decimals
  bool no_accesses = false;     // miss_percentage forced to 0: nothing was counted
  uint64_t prefetches_issued = 0;
  uint64_t useful_prefetches = 0;
};

struct SimReport {
  std::vector<LevelReport> levels;
  uint64_t instructions_retired = 0;
  uint64_t cycles_elapsed = 0;
  double ipc = 0.0;
  uint64_t branches_retired = 0;
  uint64_t branches_taken = 0;

  const LevelReport* level(const std::string& name) const;
};

// Trace ended before warmup + simulation instructions were consumed.
class TruncatedTraceError : public SimulationError {
public:
  TruncatedTraceError(const std::string& what, SimReport partial_report)
      : SimulationError(what), partial(std::move(partial_report)) {}
  SimReport partial;
};

double rounded_miss_percentage(uint64_t misses, uint64_t accesses);

// Snapshot of the hierarchy's counters; percentages are recomputed from raw
// counts, never stored elsewhere.
SimReport compute_report(const CacheHierarchy& hierarchy, uint64_t instructions, uint64_t cycles,
                         uint64_t branches = 0, uint64_t branches_taken = 0);

// In-order core over the trace: one base cycle per instruction, instruction
// fetch through L1I, memory operands through L1D (sources before
// destinations, slot order), and the instruction stalls until its slowest
// operand completes. Latency up to the hit cost of the first level is hidden
// by the pipeline. The first warmup_instructions update state but not
// counters; statistics reset exactly at the warmup boundary.
SimReport run_simulation(RecordSource& trace, CacheHierarchy& hierarchy,
                         uint64_t warmup_instructions, uint64_t simulation_instructions,
                         AccessLogger* logger = nullptr);

SimReport run_simulation(RecordSource& trace, const SimConfig& config,
                         AccessLogger* logger = nullptr);

void write_report_text(const SimReport& report, std::ostream& out);
void write_report_csv(const SimReport& report, std::ostream& out);

} // namespace memsim
