#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace memsim {

// Prefetchers operate on 64-byte block numbers (byte address >> 6) and see
// 4kB pages as 64-block windows.
inline constexpr uint32_t kBlocksPerPage = 64;
inline constexpr uint64_t kMaxBlockNumber = (uint64_t{1} << 58) - 1;

inline uint64_t page_of_block(uint64_t block) { return block / kBlocksPerPage; }
inline uint32_t page_offset_of_block(uint64_t block) {
  return static_cast<uint32_t>(block % kBlocksPerPage);
}

struct PrefetchAccess {
  uint64_t ip = 0;
  uint64_t block = 0;
  uint64_t cycle = 0;
  bool hit = false;
};

// Observes the demand stream at one cache level and proposes candidate
// blocks. demand_fill reports the completion of demand misses at the same
// level (timeliness feedback).
class Prefetcher {
public:
  virtual ~Prefetcher() = default;
  virtual void observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) = 0;
  virtual void demand_fill(uint64_t /*block*/, uint64_t /*request_cycle*/,
                           uint64_t /*completion_cycle*/) {}
  virtual const char* name() const = 0;
};

class NextLinePrefetcher final : public Prefetcher {
public:
  explicit NextLinePrefetcher(uint32_t degree = 1) : degree_(degree) {}
  void observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) override;
  const char* name() const override { return "next_line"; }

private:
  uint32_t degree_;
};

// Classic per-IP stride table: a 2-bit confidence counter guards emission.
// A matching stride raises confidence; a mismatch lowers it, and the new
// stride is adopted once confidence has drained to zero.
class IpStridePrefetcher final : public Prefetcher {
public:
  static constexpr uint32_t kTableEntries = 256;
  static constexpr uint8_t kConfidenceMax = 3;
  static constexpr uint8_t kEmitThreshold = 2;

  explicit IpStridePrefetcher(uint32_t degree = 1) : degree_(degree) {}
  void observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) override;
  const char* name() const override { return "ip_stride"; }

private:
  struct Entry {
    uint64_t ip_tag = 0;
    uint64_t last_block = 0;
    int64_t stride = 0;
    uint8_t confidence = 0;
    bool has_stride = false;
    bool valid = false;
  };

  uint32_t degree_;
  std::array<Entry, kTableEntries> table_{};
};

// Signature-path prefetcher: per-page signatures index a delta pattern table;
// predictions chain while the confidence product stays above threshold, and a
// small global register carries signatures across page boundaries.
class SppPrefetcher final : public Prefetcher {
public:
  static constexpr uint32_t kSignatureTableEntries = 64;
  static constexpr uint32_t kPatternTableEntries = 512;
  static constexpr uint32_t kDeltasPerPattern = 4;
  static constexpr uint32_t kGhrEntries = 8;
  static constexpr uint32_t kMaxLookahead = 8;
  static constexpr double kConfidenceThreshold = 0.25;

  void observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) override;
  const char* name() const override { return "spp"; }

  static uint16_t advance_signature(uint16_t signature, int32_t delta);

private:
  struct SignatureEntry {
    uint64_t page = 0;
    uint16_t signature = 0;
    uint8_t last_offset = 0;
    bool valid = false;
  };
  struct PatternEntry {
    uint16_t tag = 0;
    bool valid = false;
    std::array<int16_t, kDeltasPerPattern> delta{};
    std::array<uint16_t, kDeltasPerPattern> count{};
    uint16_t total = 0;
  };
  struct GhrEntry {
    uint16_t signature = 0;
    double confidence = 0.0;
    uint8_t last_offset = 0;
    int16_t delta = 0;
    bool valid = false;
  };

  void pattern_update(uint16_t signature, int32_t delta);
  bool pattern_lookup(uint16_t signature, int32_t& delta, double& ratio) const;

  std::array<SignatureEntry, kSignatureTableEntries> signature_table_{};
  std::array<PatternEntry, kPatternTableEntries> pattern_table_{};
  std::array<GhrEntry, kGhrEntries> ghr_{};
  uint32_t ghr_next_ = 0;
};

// Spatial footprint prefetcher over 2kB (32-block) regions. Completed region
// generations are committed under a precise long event (ip, region) and a
// generalizing short event (ip, trigger offset); the long event wins on
// lookup.
class BingoPrefetcher final : public Prefetcher {
public:
  static constexpr uint32_t kRegionBlocks = 32;
  static constexpr uint32_t kActiveGenerations = 64;
  static constexpr uint32_t kTableEntries = 2048;

  void observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) override;
  const char* name() const override { return "bingo"; }

  // Ends all active generations, committing their footprints.
  void flush();

private:
  struct Generation {
    uint64_t region = 0;
    uint64_t trigger_ip = 0;
    uint8_t trigger_offset = 0;
    uint32_t footprint = 0;
    uint64_t order = 0;
  };

  struct FootprintTable {
    std::unordered_map<uint64_t, uint32_t> map;
    std::vector<uint64_t> fifo;
    void put(uint64_t key, uint32_t footprint, uint32_t capacity);
    const uint32_t* get(uint64_t key) const;
  };

  void commit(const Generation& gen);

  std::unordered_map<uint64_t, Generation> active_;
  uint64_t order_counter_ = 0;
  FootprintTable long_events_;
  FootprintTable short_events_;
};

// Instruction-pointer classifier: each IP is constant-stride, complex
// (delta-signature driven), or part of a global stream detected by region
// access density.
class IpcpPrefetcher final : public Prefetcher {
public:
  static constexpr uint32_t kIpEntries = 64;
  static constexpr uint32_t kComplexEntries = 256;
  static constexpr uint32_t kRegionRing = 8;
  static constexpr uint32_t kStreamDensityThreshold = 48; // of 64 blocks
  static constexpr uint8_t kConfidenceMax = 3;
  static constexpr uint32_t kConstantDegree = 2;
  static constexpr uint32_t kStreamDegree = 4;

  enum class IpClass { untrained, constant, complex, global_stream };

  void observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) override;
  const char* name() const override { return "ipcp"; }

  IpClass classify(uint64_t ip) const;

private:
  struct IpEntry {
    uint64_t ip_tag = 0;
    uint64_t last_block = 0;
    int64_t stride = 0;
    uint8_t confidence = 0;
    uint16_t delta_signature = 0;
    IpClass cls = IpClass::untrained;
    bool has_stride = false;
    bool valid = false;
  };
  struct ComplexEntry {
    uint16_t tag = 0;
    int32_t delta = 0;
    uint8_t confidence = 0;
    bool valid = false;
  };
  struct RegionEntry {
    uint64_t page = 0;
    uint64_t touched = 0; // bit per block
    uint64_t trigger_ip = 0;
    bool triggered = false;
    bool valid = false;
  };

  void track_region(uint64_t page, uint32_t offset, uint64_t ip);

  std::array<IpEntry, kIpEntries> ips_{};
  std::array<ComplexEntry, kComplexEntries> complex_{};
  std::array<RegionEntry, kRegionRing> regions_{};
  uint32_t region_next_ = 0;
};

// Timely-delta prefetcher: per-page access history is scored against demand
// fill completions; a delta becomes active once it would have been timely for
// at least 65% of scored fills. Cold pages burst-fill up to the active delta.
class BertiPrefetcher final : public Prefetcher {
public:
  static constexpr uint32_t kPagesTracked = 16;
  static constexpr uint32_t kHistoryPerPage = 16;
  static constexpr double kCoverageThreshold = 0.65;

  void observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) override;
  void demand_fill(uint64_t block, uint64_t request_cycle, uint64_t completion_cycle) override;
  const char* name() const override { return "berti"; }

  int32_t active_delta_for_page(uint64_t page) const;
  // Scoreboard introspection; counts stay bounded by the history capacity.
  uint32_t timely_count(uint64_t page, int32_t delta) const;
  uint32_t fills_scored(uint64_t page) const;

private:
  struct PageEntry {
    uint64_t page = 0;
    std::vector<std::pair<uint8_t, uint64_t>> history; // (offset, cycle), bounded
    std::unordered_map<int32_t, uint32_t> timely;
    uint32_t fills_scored = 0;
    uint64_t fill_latency = 0;
    int32_t active_delta = 0;
    uint64_t lru = 0;
    bool valid = false;
  };

  PageEntry* find(uint64_t page);
  PageEntry& insert(uint64_t page);

  std::array<PageEntry, kPagesTracked> pages_{};
  uint64_t lru_clock_ = 0;
  int32_t global_delta_ = 0;
};

// Names: "none" | "next_line" | "ip_stride" | "spp" | "bingo" | "ipcp" | "berti".
// "none" yields an empty pointer.
std::unique_ptr<Prefetcher> make_prefetcher(const std::string& prefetcher_name);

} // namespace memsim
