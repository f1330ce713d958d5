#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "memsim/trace.hpp"

namespace memsim {

struct TokenArraySpec {
  uint64_t base = 0x32d6544;
  uint32_t element_size = 24;
  uint32_t element_count = 512;
};

// Decoder-shaped workload: per generated token, one sequential read sweep
// over the weight region (one read per 64-byte block), a strided walk over
// that token's slice of the token array, and repeated reads of a small hot
// set. The first weight block doubles as the token marker: it is read exactly
// once per token, as the token's first instruction. One-shot addresses are
// touched once, during the first token. Every token occupies exactly
// token_period_instructions instruction slots (padded with no-operand
// filler), so marker periodicity is exact in instruction counts; cycle
// periodicity then follows up to stall jitter.
struct WorkloadSpec {
  uint32_t tokens = 128;
  uint32_t weight_blocks = 1000;
  uint64_t weight_base = 0x10000000;
  TokenArraySpec token_array;
  uint32_t hot_addresses = 100;
  uint64_t hot_base = 0x7ffde0000000;
  uint32_t hot_repeats = 8; // reads of each hot address per token
  uint32_t one_shot_addresses = 64;
  uint64_t token_period_instructions = 10000;
  uint32_t walk_spacing = 300; // filler instructions between walk reads
  uint64_t rng_seed = 1;

  uint32_t elements_per_token() const;
  // Instruction count of one token's body before padding (the first token
  // carries the one-shot reads).
  uint64_t body_instructions(bool first_token) const;
  // Throws ConfigError on overlapping regions, zero tokens, or a period
  // smaller than the emitted body.
  void validate() const;
};

struct AddressRegion {
  std::string name;
  uint64_t low = 0;
  uint64_t high = 0; // inclusive
};

struct GroundTruth {
  std::map<uint64_t, uint64_t> expected_counts; // read count per byte address
  uint64_t marker_address = 0;
  std::vector<uint64_t> marker_instruction_indexes; // one per token
  std::vector<AddressRegion> regions;               // weights, token_array, stack
  uint64_t instructions_per_token = 0;
  uint64_t total_instructions = 0;
};

using RecordConsumer = std::function<void(const TraceRecord&)>;

GroundTruth generate_decoder_trace(const WorkloadSpec& spec, const RecordConsumer& consume);

struct GeneratedWorkload {
  std::vector<TraceRecord> records;
  GroundTruth truth;
};

GeneratedWorkload generate_decoder_trace(const WorkloadSpec& spec);

WorkloadSpec workload_spec_from_json(const std::string& json_text);
WorkloadSpec workload_spec_from_file(const std::string& path);
std::string workload_spec_to_json(const WorkloadSpec& spec);

void write_manifest_csv(const GroundTruth& truth, std::ostream& out);

} // namespace memsim
