#include <doctest.h>

#include <map>

#include "helpers.hpp"
#include "memsim/errors.hpp"
#include "memsim/synth.hpp"

using namespace memsim;

namespace {

// Small spec that keeps unit tests fast.
WorkloadSpec small_spec() {
  WorkloadSpec spec;
  spec.tokens = 8;
  spec.weight_blocks = 50;
  spec.token_array.element_count = 32; // 4 elements per token
  spec.hot_addresses = 10;
  spec.hot_repeats = 4;
  spec.one_shot_addresses = 16;
  spec.token_period_instructions = 1000;
  spec.walk_spacing = 10;
  return spec;
}

// Trace-level oracle: read operand counts straight off the records.
std::map<uint64_t, uint64_t> counted_reads(const std::vector<TraceRecord>& records) {
  std::map<uint64_t, uint64_t> counts;
  for (const auto& rec : records)
    for (uint64_t address : rec.src_memory)
      if (address != 0) ++counts[address];
  return counts;
}

} // namespace

TEST_CASE("generated counts match the manifest exactly") {
  GeneratedWorkload workload = generate_decoder_trace(small_spec());
  auto counts = counted_reads(workload.records);
  CHECK(counts.size() == workload.truth.expected_counts.size());
  CHECK(counts == workload.truth.expected_counts);
}

TEST_CASE("every weight block is read exactly once per token") {
  WorkloadSpec spec = small_spec();
  GeneratedWorkload workload = generate_decoder_trace(spec);

  uint64_t weights_at_token_count = 0;
  for (const auto& [address, count] : workload.truth.expected_counts)
    if (count == spec.tokens) ++weights_at_token_count;
  CHECK(weights_at_token_count == spec.weight_blocks);

  for (uint32_t blk = 0; blk < spec.weight_blocks; ++blk)
    CHECK(workload.truth.expected_counts.at(spec.weight_base + 64 * uint64_t{blk}) == spec.tokens);
}

TEST_CASE("the marker is the first weight block, once per token, period-exact") {
  WorkloadSpec spec = small_spec();
  GeneratedWorkload workload = generate_decoder_trace(spec);

  CHECK(workload.truth.marker_address == spec.weight_base);
  REQUIRE(workload.truth.marker_instruction_indexes.size() == spec.tokens);
  for (uint32_t t = 0; t < spec.tokens; ++t)
    CHECK(workload.truth.marker_instruction_indexes[t] == uint64_t{t} * spec.token_period_instructions);

  // The record at each marker index really is the marker read.
  for (uint64_t index : workload.truth.marker_instruction_indexes)
    CHECK(workload.records[index].src_memory[0] == spec.weight_base);
}

TEST_CASE("each token occupies exactly the configured instruction period") {
  WorkloadSpec spec = small_spec();
  GeneratedWorkload workload = generate_decoder_trace(spec);
  CHECK(workload.records.size() == uint64_t{spec.tokens} * spec.token_period_instructions);
  CHECK(workload.truth.total_instructions == workload.records.size());
}

TEST_CASE("a single-token workload reads every weight once") {
  WorkloadSpec spec = small_spec();
  spec.tokens = 1;
  spec.token_array.element_count = 4;
  GeneratedWorkload workload = generate_decoder_trace(spec);
  for (uint32_t blk = 0; blk < spec.weight_blocks; ++blk)
    CHECK(workload.truth.expected_counts.at(spec.weight_base + 64 * uint64_t{blk}) == 1);
}

TEST_CASE("one-shot and walk addresses are singletons; hot addresses are neither") {
  WorkloadSpec spec = small_spec();
  GeneratedWorkload workload = generate_decoder_trace(spec);

  uint64_t singles = 0;
  for (const auto& [address, count] : workload.truth.expected_counts)
    if (count == 1) ++singles;
  // one-shots plus every accessed token-array element
  CHECK(singles == spec.one_shot_addresses + uint64_t{spec.elements_per_token()} * spec.tokens);

  for (uint32_t i = 0; i < spec.hot_addresses; ++i)
    CHECK(workload.truth.expected_counts.at(spec.hot_base + 8 * uint64_t{i}) ==
          uint64_t{spec.hot_repeats} * spec.tokens);
}

TEST_CASE("the manifest names three disjoint regions") {
  GeneratedWorkload workload = generate_decoder_trace(small_spec());
  REQUIRE(workload.truth.regions.size() == 3);
  for (const auto& a : workload.truth.regions)
    for (const auto& b : workload.truth.regions)
      if (a.name != b.name) CHECK((a.high < b.low || b.high < a.low));
  // Every expected address falls inside exactly one region.
  for (const auto& [address, count] : workload.truth.expected_counts) {
    (void)count;
    int owners = 0;
    for (const auto& region : workload.truth.regions)
      if (address >= region.low && address <= region.high) ++owners;
    CHECK(owners == 1);
  }
}

TEST_CASE("generated records are valid and codec-clean") {
  GeneratedWorkload workload = generate_decoder_trace(small_spec());
  for (std::size_t i = 0; i < workload.records.size(); i += 97) {
    const TraceRecord& rec = workload.records[i];
    CHECK(rec.valid());
    CHECK(decode_record(encode_record(rec)) == rec);
  }
}

TEST_CASE("overlapping regions are rejected") {
  WorkloadSpec spec = small_spec();
  spec.token_array.base = spec.weight_base + 64; // inside the weight region
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("a period smaller than the body is rejected") {
  WorkloadSpec spec = small_spec();
  spec.token_period_instructions = 10;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("a token array smaller than the token count is rejected") {
  WorkloadSpec spec = small_spec();
  spec.token_array.element_count = spec.tokens / 2;
  CHECK_THROWS_AS(spec.validate(), ConfigError);
}

TEST_CASE("bucket counts scale linearly with the spec") {
  WorkloadSpec spec = small_spec();
  spec.weight_blocks = 40;
  GeneratedWorkload a = generate_decoder_trace(spec);
  spec.weight_blocks = 80;
  GeneratedWorkload b = generate_decoder_trace(spec);

  auto count_special = [&](const GeneratedWorkload& w) {
    uint64_t n = 0;
    for (const auto& [address, count] : w.truth.expected_counts)
      if (count == spec.tokens) ++n;
    return n;
  };
  CHECK(count_special(b) == 2 * count_special(a));
}

TEST_CASE("generation is seed-deterministic") {
  WorkloadSpec spec = small_spec();
  GeneratedWorkload a = generate_decoder_trace(spec);
  GeneratedWorkload b = generate_decoder_trace(spec);
  CHECK(a.records == b.records);

  spec.rng_seed = 99;
  GeneratedWorkload c = generate_decoder_trace(spec);
  CHECK(a.records != c.records); // one-shot order differs
  CHECK(a.truth.expected_counts == c.truth.expected_counts);
}

TEST_CASE("workload spec json round trips") {
  WorkloadSpec spec = small_spec();
  spec.rng_seed = 1234;
  WorkloadSpec back = workload_spec_from_json(workload_spec_to_json(spec));
  CHECK(back.tokens == spec.tokens);
  CHECK(back.weight_blocks == spec.weight_blocks);
  CHECK(back.weight_base == spec.weight_base);
  CHECK(back.token_array.element_count == spec.token_array.element_count);
  CHECK(back.rng_seed == spec.rng_seed);
  CHECK_THROWS_AS(workload_spec_from_json("]["), FormatError);
}

TEST_CASE("the stock spec is valid and matches the shrunk-scale defaults") {
  WorkloadSpec spec;
  CHECK_NOTHROW(spec.validate());
  CHECK(spec.tokens == 128);
  CHECK(spec.weight_blocks == 1000);
  CHECK(spec.token_array.element_count == 512);
  CHECK(spec.token_array.element_size == 24);
}
