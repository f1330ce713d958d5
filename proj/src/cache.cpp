#include "memsim/cache.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "memsim/errors.hpp"

namespace memsim {

void CacheConfig::validate() const {
  if (sets == 0 || ways == 0) throw ConfigError(name + ": sets and ways must be nonzero");
  if (size_bytes != uint64_t{sets} * ways * kBlockBytes)
    throw ConfigError(name + ": size_bytes " + std::to_string(size_bytes) + " != sets*ways*64 (" +
                      std::to_string(uint64_t{sets} * ways * kBlockBytes) + ")");
  if (rq_size < 1 || wq_size < 1 || mshr_size < 1)
    throw ConfigError(name + ": queue and MSHR sizes must be at least 1");
}

CacheLevel::CacheLevel(CacheConfig config, uint64_t memory_latency)
    : config_(std::move(config)), memory_latency_(memory_latency) {
  config_.validate();
  blocks_.resize(std::size_t{config_.sets} * config_.ways);
  replacement_ = make_replacement_policy(config_.replacement, config_.sets, config_.ways);
  prefetcher_ = make_prefetcher(config_.prefetcher);
}

int CacheLevel::find_way(uint32_t set, uint64_t tag) const {
  for (uint32_t w = 0; w < config_.ways; ++w) {
    const Block& blk = block_at(set, w);
    if (blk.valid && blk.tag == tag) return static_cast<int>(w);
  }
  return -1;
}

int CacheLevel::find_invalid_way(uint32_t set) const {
  for (uint32_t w = 0; w < config_.ways; ++w)
    if (!block_at(set, w).valid) return static_cast<int>(w);
  return -1;
}

bool CacheLevel::admit(uint64_t cycle, bool is_write) {
  if (cycle != admit_cycle_) {
    admit_cycle_ = cycle;
    reads_this_cycle_ = 0;
    writes_this_cycle_ = 0;
  }
  uint32_t& count = is_write ? writes_this_cycle_ : reads_this_cycle_;
  uint32_t limit = is_write ? config_.wq_size : config_.rq_size;
  if (count >= limit) return false;
  ++count;
  return true;
}

void CacheLevel::drain(uint64_t cycle) {
  while (!writeback_queue_.empty() && writeback_queue_.front().ready_cycle <= cycle) {
    WritebackEntry wb = writeback_queue_.front();
    writeback_queue_.pop_front();
    apply_writeback(wb.address, cycle);
  }

  if (mshr_.empty()) return;
  std::vector<MshrEntry> ready;
  for (auto it = mshr_.begin(); it != mshr_.end();) {
    if (it->second.ready_cycle <= cycle) {
      ready.push_back(it->second);
      it = mshr_.erase(it);
    } else {
      ++it;
    }
  }
  std::sort(ready.begin(), ready.end(), [](const MshrEntry& a, const MshrEntry& b) {
    return a.ready_cycle != b.ready_cycle ? a.ready_cycle < b.ready_cycle : a.block < b.block;
  });
  for (const MshrEntry& entry : ready) complete_fill(entry, cycle);
}

void CacheLevel::complete_fill(const MshrEntry& entry, uint64_t cycle) {
  uint32_t set = static_cast<uint32_t>(entry.block % config_.sets);
  // A write-back may have landed the block while this miss was in flight;
  // never hold two copies in one set.
  int present = find_way(set, entry.block / config_.sets);
  if (present >= 0) {
    if (entry.fill_dirty) block_at(set, static_cast<uint32_t>(present)).dirty = true;
    return;
  }
  int way = find_invalid_way(set);
  if (way < 0) {
    way = static_cast<int>(replacement_->select_victim(set));
    Block& victim = block_at(set, static_cast<uint32_t>(way));
    ++stats_.evictions;
    if (victim.dirty) {
      uint64_t victim_address = (victim.tag * config_.sets + set) << kBlockShift;
      if (next_) next_->enqueue_writeback(victim_address, cycle);
    }
  }
  Block& blk = block_at(set, static_cast<uint32_t>(way));
  blk.tag = entry.block / config_.sets;
  blk.valid = true;
  blk.dirty = entry.fill_dirty;
  blk.prefetched = entry.prefetch_origin;
  blk.referenced_since_fill = false;
  replacement_->on_fill(set, static_cast<uint32_t>(way), FillContext{entry.ip, set});

  if (prefetcher_ && !entry.is_prefetch)
    prefetcher_->demand_fill(entry.block, entry.request_cycle, entry.ready_cycle);
}

void CacheLevel::enqueue_writeback(uint64_t address, uint64_t cycle) {
  if (writeback_queue_.size() >= config_.wq_size) {
    WritebackEntry oldest = writeback_queue_.front();
    writeback_queue_.pop_front();
    apply_writeback(oldest.address, cycle);
  }
  writeback_queue_.push_back(WritebackEntry{address, cycle});
}

void CacheLevel::apply_writeback(uint64_t address, uint64_t cycle) {
  ++stats_.writebacks_received;
  uint64_t block = address >> kBlockShift;
  uint32_t set = static_cast<uint32_t>(block % config_.sets);
  uint64_t tag = block / config_.sets;
  int way = find_way(set, tag);
  if (way >= 0) {
    block_at(set, static_cast<uint32_t>(way)).dirty = true;
    return;
  }
  // Allocate the written-back block locally (non-inclusive victim handling).
  way = find_invalid_way(set);
  if (way < 0) {
    way = static_cast<int>(replacement_->select_victim(set));
    Block& victim = block_at(set, static_cast<uint32_t>(way));
    ++stats_.evictions;
    if (victim.dirty) {
      uint64_t victim_address = (victim.tag * config_.sets + set) << kBlockShift;
      if (next_) next_->enqueue_writeback(victim_address, cycle);
    }
  }
  Block& blk = block_at(set, static_cast<uint32_t>(way));
  blk.tag = tag;
  blk.valid = true;
  blk.dirty = true;
  blk.prefetched = false;
  blk.referenced_since_fill = false;
  replacement_->on_fill(set, static_cast<uint32_t>(way), FillContext{0, set});
}

uint64_t CacheLevel::forward_miss(const AccessRequest& request, bool& stalled) {
  uint64_t forward_cycle = request.cycle + config_.hit_latency;
  if (!next_) {
    stalled = false;
    return forward_cycle + memory_latency_;
  }
  AccessRequest down = request;
  down.cycle = forward_cycle;
  down.is_write = false; // misses fetch the block; dirtiness stays local
  AccessResult result = next_->access(down);
  if (result.outcome == AccessOutcome::stalled || result.outcome == AccessOutcome::rejected) {
    stalled = true;
    return 0;
  }
  stalled = false;
  return result.completion_cycle;
}

AccessResult CacheLevel::access(const AccessRequest& request) {
  drain(request.cycle);

  const bool demand = !request.is_prefetch;
  if (demand && !admit(request.cycle, request.is_write)) return {AccessOutcome::rejected, 0};

  uint64_t block = request.address >> kBlockShift;
  uint32_t set = static_cast<uint32_t>(block % config_.sets);
  uint64_t tag = block / config_.sets;

  int way = find_way(set, tag);
  if (way >= 0) {
    Block& blk = block_at(set, static_cast<uint32_t>(way));
    uint64_t completion = request.cycle + config_.hit_latency;
    if (!demand) return {AccessOutcome::hit, completion};

    ++stats_.demand_accesses;
    ++stats_.hits;
    if (!request.is_write && logger_) logger_->record(config_.name, request.cycle, request.address);
    replacement_->on_hit(set, static_cast<uint32_t>(way));
    if (blk.prefetched && !blk.referenced_since_fill) {
      ++stats_.useful_prefetches;
      blk.prefetched = false;
    }
    blk.referenced_since_fill = true;
    if (request.is_write) blk.dirty = true;
    run_prefetcher(request, true);
    return {AccessOutcome::hit, completion};
  }

  auto merged = mshr_.find(block);
  if (merged != mshr_.end()) {
    MshrEntry& entry = merged->second;
    if (!demand) return {AccessOutcome::merged, entry.ready_cycle};
    ++stats_.demand_accesses;
    ++stats_.misses;
    if (!request.is_write && logger_) logger_->record(config_.name, request.cycle, request.address);
    ++entry.requestors;
    if (request.is_write) entry.fill_dirty = true;
    if (entry.is_prefetch) {
      // A demand caught up with an in-flight prefetch; the fill now serves
      // demand and must not be scored useful again later.
      entry.is_prefetch = false;
      entry.prefetch_origin = false;
      entry.ip = request.ip;
      entry.request_cycle = request.cycle;
    }
    run_prefetcher(request, false);
    return {AccessOutcome::merged, entry.ready_cycle};
  }

  if (mshr_.size() >= config_.mshr_size) return {AccessOutcome::stalled, 0};

  bool stalled = false;
  uint64_t completion = forward_miss(request, stalled);
  if (stalled) return {AccessOutcome::stalled, 0};

  MshrEntry entry;
  entry.block = block;
  entry.ready_cycle = completion;
  entry.request_cycle = request.cycle;
  entry.ip = request.ip;
  entry.is_prefetch = request.is_prefetch;
  entry.prefetch_origin = false;
  entry.fill_dirty = request.is_write;
  mshr_.emplace(block, entry);

  if (demand) {
    ++stats_.demand_accesses;
    ++stats_.misses;
    if (!request.is_write && logger_) logger_->record(config_.name, request.cycle, request.address);
    run_prefetcher(request, false);
  }
  return {AccessOutcome::miss, completion};
}

void CacheLevel::run_prefetcher(const AccessRequest& request, bool hit) {
  if (!prefetcher_) return;
  candidate_scratch_.clear();
  PrefetchAccess access{request.ip, request.address >> kBlockShift, request.cycle, hit};
  prefetcher_->observe(access, candidate_scratch_);
  for (uint64_t candidate : candidate_scratch_)
    issue_prefetch(candidate, request.ip, request.cycle);
}

void CacheLevel::issue_prefetch(uint64_t block, uint64_t ip, uint64_t cycle) {
  uint32_t set = static_cast<uint32_t>(block % config_.sets);
  if (find_way(set, block / config_.sets) >= 0) return;
  if (mshr_.count(block) > 0) return;
  if (mshr_.size() >= config_.mshr_size) return;

  AccessRequest request;
  request.address = block << kBlockShift;
  request.ip = ip;
  request.cycle = cycle;
  request.is_write = false;
  request.is_prefetch = true;
  bool stalled = false;
  uint64_t completion = forward_miss(request, stalled);
  if (stalled) return;

  MshrEntry entry;
  entry.block = block;
  entry.ready_cycle = completion;
  entry.request_cycle = cycle;
  entry.ip = ip;
  entry.is_prefetch = true;
  entry.prefetch_origin = true;
  mshr_.emplace(block, entry);
  ++stats_.prefetches_issued;
}

void CacheLevel::reset_stats() {
  stats_ = LevelStats{};
  for (Block& blk : blocks_) blk.prefetched = false;
}

bool CacheLevel::resident(uint64_t address) const { return probe(address) != nullptr; }

const Block* CacheLevel::probe(uint64_t address) const {
  uint64_t block = address >> kBlockShift;
  uint32_t set = static_cast<uint32_t>(block % config_.sets);
  int way = find_way(set, block / config_.sets);
  return way < 0 ? nullptr : &block_at(set, static_cast<uint32_t>(way));
}

uint32_t CacheLevel::resident_copies(uint64_t address) const {
  uint64_t block = address >> kBlockShift;
  uint32_t set = static_cast<uint32_t>(block % config_.sets);
  uint64_t tag = block / config_.sets;
  uint32_t copies = 0;
  for (uint32_t w = 0; w < config_.ways; ++w) {
    const Block& blk = block_at(set, w);
    if (blk.valid && blk.tag == tag) ++copies;
  }
  return copies;
}

HierarchyConfig default_hierarchy_config() {
  HierarchyConfig config;
  config.memory_latency = 200;
  config.caches = {
      CacheConfig{"L1I", 32 * 1024, 64, 8, 64, 64, 8, 4, "none", "lru"},
      CacheConfig{"L1D", 48 * 1024, 64, 12, 64, 64, 16, 4, "none", "lru"},
      CacheConfig{"L2C", 512 * 1024, 1024, 8, 32, 32, 32, 12, "none", "lru"},
      CacheConfig{"LLC", 4096 * 1024, 4096, 16, 32, 32, 64, 40, "none", "lru"},
  };
  return config;
}

namespace {

CacheConfig cache_config_from_json(const nlohmann::json& j) {
  CacheConfig config;
  config.name = j.at("name").get<std::string>();
  config.size_bytes = j.at("size_bytes").get<uint64_t>();
  config.sets = j.at("sets").get<uint32_t>();
  config.ways = j.at("ways").get<uint32_t>();
  config.rq_size = j.at("rq_size").get<uint32_t>();
  config.wq_size = j.at("wq_size").get<uint32_t>();
  config.mshr_size = j.at("mshr_size").get<uint32_t>();
  config.hit_latency = j.at("hit_latency").get<uint32_t>();
  config.prefetcher = j.value("prefetcher", std::string{"none"});
  config.replacement = j.value("replacement", std::string{"lru"});
  return config;
}

} // namespace

HierarchyConfig hierarchy_config_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad config JSON: ") + e.what());
  }
  try {
    HierarchyConfig config;
    config.memory_latency = j.value("memory_latency", uint64_t{200});
    for (const auto& cache : j.at("caches")) config.caches.push_back(cache_config_from_json(cache));
    for (const auto& cache : config.caches) cache.validate();
    return config;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad config JSON: ") + e.what());
  }
}

HierarchyConfig hierarchy_config_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return hierarchy_config_from_json(text.str());
}

std::string hierarchy_config_to_json(const HierarchyConfig& config) {
  nlohmann::json j;
  j["memory_latency"] = config.memory_latency;
  j["caches"] = nlohmann::json::array();
  for (const auto& cache : config.caches) {
    j["caches"].push_back({{"name", cache.name},
                           {"size_bytes", cache.size_bytes},
                           {"sets", cache.sets},
                           {"ways", cache.ways},
                           {"rq_size", cache.rq_size},
                           {"wq_size", cache.wq_size},
                           {"mshr_size", cache.mshr_size},
                           {"hit_latency", cache.hit_latency},
                           {"prefetcher", cache.prefetcher},
                           {"replacement", cache.replacement}});
  }
  return j.dump(2);
}

CacheHierarchy::CacheHierarchy(const HierarchyConfig& config) {
  for (const auto& cache : config.caches)
    levels_.push_back(std::make_unique<CacheLevel>(cache, config.memory_latency));

  CacheLevel* l2 = find("L2C");
  CacheLevel* llc = find("LLC");
  l1i_ = find("L1I");
  l1d_ = find("L1D");
  if (!l1i_ || !l1d_) throw ConfigError("hierarchy requires L1I and L1D levels");

  CacheLevel* below_l1 = l2 ? l2 : llc;
  l1i_->set_next(below_l1);
  l1d_->set_next(below_l1);
  if (l2) l2->set_next(llc);
}

CacheLevel* CacheHierarchy::find(const std::string& name) {
  for (auto& level : levels_)
    if (level->config().name == name) return level.get();
  return nullptr;
}

void CacheHierarchy::reset_stats() {
  for (auto& level : levels_) level->reset_stats();
}

void CacheHierarchy::drain_all(uint64_t cycle) {
  for (auto& level : levels_) level->drain(cycle);
}

} // namespace memsim
