#include "memsim/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "memsim/errors.hpp"

namespace memsim {

namespace {

constexpr uint64_t kIpWeight = 0x401000;
constexpr uint64_t kIpHot = 0x401008;
constexpr uint64_t kIpWalk = 0x401010;
constexpr uint64_t kIpOneShot = 0x401018;
constexpr uint64_t kIpBranch = 0x401020;
constexpr uint64_t kIpFillerBase = 0x401040;
constexpr uint32_t kFillerIps = 16;

} // namespace

uint32_t WorkloadSpec::elements_per_token() const {
  return tokens == 0 ? 0 : token_array.element_count / tokens;
}

uint64_t WorkloadSpec::body_instructions(bool first_token) const {
  // weight read + 4 filler each; hot read + 1 filler each; walk read +
  // walk_spacing filler each; one-shot read + 1 filler each (first token).
  uint64_t body = uint64_t{weight_blocks} * 5;
  body += uint64_t{hot_repeats} * hot_addresses * 2;
  body += uint64_t{elements_per_token()} * (walk_spacing + 1);
  if (first_token) body += uint64_t{one_shot_addresses} * 2;
  return body;
}

namespace {

struct Regions {
  AddressRegion weights;
  AddressRegion token_array;
  AddressRegion stack;
};

Regions regions_of(const WorkloadSpec& spec) {
  Regions r;
  r.weights = {"weights", spec.weight_base, spec.weight_base + uint64_t{spec.weight_blocks} * 64 - 1};
  uint64_t accessed_elements = uint64_t{spec.elements_per_token()} * spec.tokens;
  r.token_array = {"token_array", spec.token_array.base,
                   spec.token_array.base + accessed_elements * spec.token_array.element_size - 1};
  uint64_t stack_span = (uint64_t{spec.hot_addresses} + spec.one_shot_addresses) * 8;
  r.stack = {"stack", spec.hot_base, spec.hot_base + stack_span - 1};
  return r;
}

bool overlaps(const AddressRegion& a, const AddressRegion& b) {
  return a.low <= b.high && b.low <= a.high;
}

} // namespace

void WorkloadSpec::validate() const {
  if (tokens < 1) throw ConfigError("workload needs at least 1 token");
  if (weight_blocks < 1) throw ConfigError("workload needs at least 1 weight block");
  if (elements_per_token() < 1)
    throw ConfigError("token array too small: need at least one element per token");
  if (hot_addresses < 1) throw ConfigError("workload needs at least 1 hot address");
  Regions r = regions_of(*this);
  for (const auto* a : {&r.weights, &r.token_array, &r.stack})
    for (const auto* b : {&r.weights, &r.token_array, &r.stack})
      if (a != b && overlaps(*a, *b))
        throw ConfigError("regions overlap: " + a->name + " and " + b->name);
  uint64_t body = body_instructions(true);
  if (token_period_instructions < body)
    throw ConfigError("token period " + std::to_string(token_period_instructions) +
                      " is below the emitted body of " + std::to_string(body) + " instructions");
}

namespace {

class Emitter {
public:
  Emitter(const RecordConsumer& consume, GroundTruth& truth) : consume_(consume), truth_(truth) {}

  void read(uint64_t ip, uint64_t address) {
    TraceRecord rec;
    rec.ip = ip;
    rec.add_src_memory(address);
    consume_(rec);
    ++emitted_;
    ++truth_.expected_counts[address];
  }

  void filler(uint64_t count) {
    TraceRecord rec;
    for (uint64_t i = 0; i < count; ++i) {
      rec.ip = kIpFillerBase + 8 * (filler_rotation_++ % kFillerIps);
      consume_(rec);
      ++emitted_;
    }
  }

  void branch() {
    TraceRecord rec;
    rec.ip = kIpBranch;
    rec.is_branch = true;
    rec.branch_taken = true;
    consume_(rec);
    ++emitted_;
  }

  uint64_t emitted() const { return emitted_; }

private:
  const RecordConsumer& consume_;
  GroundTruth& truth_;
  uint64_t emitted_ = 0;
  uint64_t filler_rotation_ = 0;
};

} // namespace

GroundTruth generate_decoder_trace(const WorkloadSpec& spec, const RecordConsumer& consume) {
  spec.validate();

  GroundTruth truth;
  truth.marker_address = spec.weight_base;
  truth.instructions_per_token = spec.token_period_instructions;
  truth.total_instructions = spec.token_period_instructions * spec.tokens;
  Regions regions = regions_of(spec);
  truth.regions = {regions.weights, regions.token_array, regions.stack};

  // One-shot addresses land after the hot set, in seed-shuffled order.
  uint64_t one_shot_base = spec.hot_base + uint64_t{spec.hot_addresses} * 8;
  std::vector<uint64_t> one_shots;
  one_shots.reserve(spec.one_shot_addresses);
  for (uint32_t i = 0; i < spec.one_shot_addresses; ++i) one_shots.push_back(one_shot_base + 8 * i);
  std::mt19937_64 rng(spec.rng_seed);
  std::shuffle(one_shots.begin(), one_shots.end(), rng);

  Emitter emit(consume, truth);
  uint32_t elements = spec.elements_per_token();

  for (uint32_t token = 0; token < spec.tokens; ++token) {
    uint64_t token_start = emit.emitted();
    truth.marker_instruction_indexes.push_back(token_start);

    // Weight sweep; the first read is the token marker.
    for (uint32_t blk = 0; blk < spec.weight_blocks; ++blk) {
      emit.read(kIpWeight, spec.weight_base + uint64_t{blk} * 64);
      emit.filler(4);
    }

    for (uint32_t round = 0; round < spec.hot_repeats; ++round) {
      for (uint32_t i = 0; i < spec.hot_addresses; ++i) {
        emit.read(kIpHot, spec.hot_base + uint64_t{i} * 8);
        if (i + 1 == spec.hot_addresses)
          emit.branch(); // loop back-edge
        else
          emit.filler(1);
      }
    }

    // This token's slice of the token array.
    for (uint32_t e = 0; e < elements; ++e) {
      uint64_t element_index = uint64_t{token} * elements + e;
      emit.read(kIpWalk, spec.token_array.base + element_index * spec.token_array.element_size);
      emit.filler(spec.walk_spacing);
    }

    if (token == 0) {
      for (uint64_t address : one_shots) {
        emit.read(kIpOneShot, address);
        emit.filler(1);
      }
    }

    uint64_t used = emit.emitted() - token_start;
    emit.filler(spec.token_period_instructions - used);
  }

  return truth;
}

GeneratedWorkload generate_decoder_trace(const WorkloadSpec& spec) {
  GeneratedWorkload out;
  out.records.reserve(spec.token_period_instructions * spec.tokens);
  out.truth = generate_decoder_trace(spec, [&](const TraceRecord& rec) { out.records.push_back(rec); });
  return out;
}

namespace {

uint64_t address_field(const nlohmann::json& j, const char* key, uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_string()) return std::stoull(v.get<std::string>(), nullptr, 0);
  return v.get<uint64_t>();
}

} // namespace

WorkloadSpec workload_spec_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad workload spec JSON: ") + e.what());
  }
  WorkloadSpec spec;
  try {
    spec.tokens = j.value("tokens", spec.tokens);
    spec.weight_blocks = j.value("weight_blocks", spec.weight_blocks);
    spec.weight_base = address_field(j, "weight_base", spec.weight_base);
    if (j.contains("token_array")) {
      const auto& t = j.at("token_array");
      spec.token_array.base = address_field(t, "base", spec.token_array.base);
      spec.token_array.element_size = t.value("element_size", spec.token_array.element_size);
      spec.token_array.element_count = t.value("element_count", spec.token_array.element_count);
    }
    spec.hot_addresses = j.value("hot_addresses", spec.hot_addresses);
    spec.hot_base = address_field(j, "hot_base", spec.hot_base);
    spec.hot_repeats = j.value("hot_repeats", spec.hot_repeats);
    spec.one_shot_addresses = j.value("one_shot_addresses", spec.one_shot_addresses);
    spec.token_period_instructions =
        j.value("token_period_instructions", spec.token_period_instructions);
    spec.walk_spacing = j.value("walk_spacing", spec.walk_spacing);
    spec.rng_seed = j.value("rng_seed", spec.rng_seed);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad workload spec JSON: ") + e.what());
  }
  return spec;
}

WorkloadSpec workload_spec_from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open workload spec " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return workload_spec_from_json(text.str());
}

std::string workload_spec_to_json(const WorkloadSpec& spec) {
  nlohmann::json j;
  j["tokens"] = spec.tokens;
  j["weight_blocks"] = spec.weight_blocks;
  j["weight_base"] = spec.weight_base;
  j["token_array"] = {{"base", spec.token_array.base},
                      {"element_size", spec.token_array.element_size},
                      {"element_count", spec.token_array.element_count}};
  j["hot_addresses"] = spec.hot_addresses;
  j["hot_base"] = spec.hot_base;
  j["hot_repeats"] = spec.hot_repeats;
  j["one_shot_addresses"] = spec.one_shot_addresses;
  j["token_period_instructions"] = spec.token_period_instructions;
  j["walk_spacing"] = spec.walk_spacing;
  j["rng_seed"] = spec.rng_seed;
  return j.dump(2);
}

void write_manifest_csv(const GroundTruth& truth, std::ostream& out) {
  char buf[128];
  out << "kind,a,b\n";
  out << "meta_instructions_per_token," << truth.instructions_per_token << ",\n";
  out << "meta_total_instructions," << truth.total_instructions << ",\n";
  std::snprintf(buf, sizeof(buf), "meta_marker_address,0x%llx,\n",
                static_cast<unsigned long long>(truth.marker_address));
  out << buf;
  for (const auto& region : truth.regions) {
    std::snprintf(buf, sizeof(buf), "region_%s,0x%llx,0x%llx\n", region.name.c_str(),
                  static_cast<unsigned long long>(region.low),
                  static_cast<unsigned long long>(region.high));
    out << buf;
  }
  for (std::size_t i = 0; i < truth.marker_instruction_indexes.size(); ++i)
    out << "marker," << i << ',' << truth.marker_instruction_indexes[i] << '\n';
  for (const auto& [address, count] : truth.expected_counts) {
    std::snprintf(buf, sizeof(buf), "count,0x%llx,%llu\n",
                  static_cast<unsigned long long>(address),
                  static_cast<unsigned long long>(count));
    out << buf;
  }
}

} // namespace memsim
