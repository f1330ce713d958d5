#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "memsim/cache.hpp"
#include "memsim/trace.hpp"

namespace testutil {

inline memsim::TraceRecord random_record(std::mt19937_64& rng) {
  memsim::TraceRecord rec;
  rec.ip = rng();
  rec.is_branch = (rng() % 5) == 0;
  rec.branch_taken = rec.is_branch && (rng() % 2) == 0;
  for (auto& reg : rec.dest_registers) reg = static_cast<uint8_t>(rng() % 256);
  for (auto& reg : rec.src_registers) reg = static_cast<uint8_t>(rng() % 256);
  for (auto& addr : rec.dest_memory) addr = (rng() % 3) ? rng() : 0;
  for (auto& addr : rec.src_memory) addr = (rng() % 3) ? rng() : 0;
  return rec;
}

// A small level with no prefetcher: 8 sets x 4 ways unless overridden.
inline memsim::CacheConfig small_config(const std::string& replacement = "lru", uint32_t sets = 8,
                                        uint32_t ways = 4) {
  memsim::CacheConfig config;
  config.name = "TEST";
  config.sets = sets;
  config.ways = ways;
  config.size_bytes = uint64_t{sets} * ways * 64;
  config.rq_size = 64;
  config.wq_size = 64;
  config.mshr_size = 16;
  config.hit_latency = 2;
  config.prefetcher = "none";
  config.replacement = replacement;
  return config;
}

// Byte address of the n-th distinct block landing in `set` of a level with
// `sets` sets.
inline uint64_t block_in_set(uint32_t set, uint32_t sets, uint64_t n) {
  return (uint64_t{set} + n * sets) << 6;
}

inline std::string temp_path(const std::string& name) {
  return std::string("/tmp/memsim_test_") + name;
}

} // namespace testutil
