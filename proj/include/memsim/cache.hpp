#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "memsim/prefetch.hpp"
#include "memsim/replacement.hpp"

namespace memsim {

inline constexpr uint32_t kBlockBytes = 64;
inline constexpr uint32_t kBlockShift = 6;

struct CacheConfig {
  std::string name;
  uint64_t size_bytes = 0;
  uint32_t sets = 0;
  uint32_t ways = 0;
  uint32_t rq_size = 0;
  uint32_t wq_size = 0;
  uint32_t mshr_size = 0;
  uint32_t hit_latency = 1;
  std::string prefetcher = "none";
  std::string replacement = "lru";

  // Throws ConfigError unless size_bytes == sets * ways * 64 and every queue
  // size is at least 1.
  void validate() const;
};

struct Block {
  uint64_t tag = 0;
  bool valid = false;
  bool dirty = false;
  bool prefetched = false;            // filled by this level's own prefetcher
  bool referenced_since_fill = false; // cleared at fill, set on demand hit
};

struct MshrEntry {
  uint64_t block = 0;
  uint64_t ready_cycle = 0;
  uint64_t request_cycle = 0;
  uint64_t ip = 0;
  uint32_t requestors = 1;
  bool is_prefetch = false;     // traffic class of the outstanding request
  bool prefetch_origin = false; // allocated by this level's prefetcher
  bool fill_dirty = false;      // write-allocate: install dirty
};

enum class AccessOutcome { hit, miss, merged, stalled, rejected };

struct AccessResult {
  AccessOutcome outcome = AccessOutcome::hit;
  uint64_t completion_cycle = 0;
};

struct AccessRequest {
  uint64_t address = 0;
  uint64_t ip = 0;
  uint64_t cycle = 0;
  bool is_write = false;
  bool is_prefetch = false;
};

struct LevelStats {
  uint64_t demand_accesses = 0;
  uint64_t hits = 0;
  uint64_t misses = 0;
  uint64_t prefetches_issued = 0;
  uint64_t useful_prefetches = 0;
  uint64_t evictions = 0;
  uint64_t writebacks_received = 0;
};

// Receives every accepted demand read lookup at a level.
class AccessLogger {
public:
  virtual ~AccessLogger() = default;
  virtual void record(const std::string& level, uint64_t cycle, uint64_t address) = 0;
};

// One set-associative, write-back, write-allocate cache level. Outstanding
// misses live in the MSHR until their ready cycle passes; fills, victim
// selection, and write-back draining all happen lazily when the level is next
// touched at a later cycle. The read/write queue sizes bound how many demand
// requests the level accepts within a single cycle.
class CacheLevel {
public:
  CacheLevel(CacheConfig config, uint64_t memory_latency);

  void set_next(CacheLevel* next) { next_ = next; }
  void set_logger(AccessLogger* logger) { logger_ = logger; }

  // Demand or prefetch lookup. Never blocks: full MSHR yields `stalled`,
  // same-cycle queue overflow yields `rejected`; the caller retries later.
  AccessResult access(const AccessRequest& request);

  // Completes ready fills and pending write-backs up to `cycle`.
  void drain(uint64_t cycle);

  // Write-back landing from the level above (not a demand access).
  void enqueue_writeback(uint64_t address, uint64_t cycle);

  const CacheConfig& config() const { return config_; }
  const LevelStats& stats() const { return stats_; }
  Prefetcher* prefetcher() { return prefetcher_.get(); }
  ReplacementPolicy* replacement() { return replacement_.get(); }

  // Zeroes counters and forgets which resident blocks were prefetched, so
  // prefetches launched before the reset cannot be counted useful after it.
  void reset_stats();

  bool resident(uint64_t address) const;
  const Block* probe(uint64_t address) const;
  uint32_t resident_copies(uint64_t address) const;
  uint32_t set_index(uint64_t address) const {
    return static_cast<uint32_t>((address >> kBlockShift) % config_.sets);
  }
  std::size_t mshr_occupancy() const { return mshr_.size(); }

private:
  struct WritebackEntry {
    uint64_t address = 0;
    uint64_t ready_cycle = 0;
  };

  Block& block_at(uint32_t set, uint32_t way) { return blocks_[std::size_t{set} * config_.ways + way]; }
  const Block& block_at(uint32_t set, uint32_t way) const {
    return blocks_[std::size_t{set} * config_.ways + way];
  }
  int find_way(uint32_t set, uint64_t tag) const;
  int find_invalid_way(uint32_t set) const;

  bool admit(uint64_t cycle, bool is_write);
  uint64_t forward_miss(const AccessRequest& request, bool& stalled);
  void complete_fill(const MshrEntry& entry, uint64_t cycle);
  void apply_writeback(uint64_t address, uint64_t cycle);
  void run_prefetcher(const AccessRequest& request, bool hit);
  void issue_prefetch(uint64_t block, uint64_t ip, uint64_t cycle);

  CacheConfig config_;
  uint64_t memory_latency_;
  CacheLevel* next_ = nullptr;
  AccessLogger* logger_ = nullptr;

  std::vector<Block> blocks_;
  std::unordered_map<uint64_t, MshrEntry> mshr_;
  std::deque<WritebackEntry> writeback_queue_;
  std::unique_ptr<ReplacementPolicy> replacement_;
  std::unique_ptr<Prefetcher> prefetcher_;
  LevelStats stats_;

  uint64_t admit_cycle_ = UINT64_MAX;
  uint32_t reads_this_cycle_ = 0;
  uint32_t writes_this_cycle_ = 0;
  std::vector<uint64_t> candidate_scratch_;
};

struct HierarchyConfig {
  std::vector<CacheConfig> caches;
  uint64_t memory_latency = 200;
};

// The stock four-level configuration: L1I 32kB/64x8, L1D 48kB/64x12,
// L2C 512kB/1024x8, LLC 4MB/4096x16, hit latencies 4/4/12/40, memory 200.
HierarchyConfig default_hierarchy_config();

HierarchyConfig hierarchy_config_from_json(const std::string& json_text);
HierarchyConfig hierarchy_config_from_file(const std::string& path);
std::string hierarchy_config_to_json(const HierarchyConfig& config);

// L1I and L1D forward to the first of L2C/LLC present (else memory); deeper
// levels chain in listed order. Single-threaded; independent instances share
// nothing.
class CacheHierarchy {
public:
  explicit CacheHierarchy(const HierarchyConfig& config);

  CacheLevel* find(const std::string& name);
  CacheLevel& l1i() { return *l1i_; }
  CacheLevel& l1d() { return *l1d_; }
  const std::vector<std::unique_ptr<CacheLevel>>& levels() const { return levels_; }

  void reset_stats();
  void drain_all(uint64_t cycle);

private:
  std::vector<std::unique_ptr<CacheLevel>> levels_;
  CacheLevel* l1i_ = nullptr;
  CacheLevel* l1d_ = nullptr;
};

} // namespace memsim
