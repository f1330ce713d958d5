#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "memsim/cache.hpp"

namespace memsim {

enum class LogLevel : uint8_t { L1I, L1D, LLC };

const char* log_level_name(LogLevel level);
LogLevel log_level_from_name(const std::string& name);

struct AccessLogEntry {
  uint64_t address = 0;
  uint64_t cycle = 0;
  LogLevel level = LogLevel::L1D;
};

// Collects demand-read lookups in memory, in emission order.
class VectorAccessLogger final : public AccessLogger {
public:
  void record(const std::string& level, uint64_t cycle, uint64_t address) override;
  const std::vector<AccessLogEntry>& entries() const { return entries_; }

private:
  std::vector<AccessLogEntry> entries_;
};

// Streams `level,cycle,address` rows (address in hex) to an output stream.
class CsvAccessLogger final : public AccessLogger {
public:
  explicit CsvAccessLogger(std::ostream& out);
  void record(const std::string& level, uint64_t cycle, uint64_t address) override;

private:
  std::ostream& out_;
};

std::vector<AccessLogEntry> read_access_log(const std::string& path);
void write_access_log(const std::vector<AccessLogEntry>& log, std::ostream& out);

struct FrequencyTable {
  std::unordered_map<uint64_t, uint64_t> counts;
  uint64_t total_accesses = 0;

  uint64_t distinct_addresses() const { return counts.size(); }
};

FrequencyTable count_accesses(const std::vector<AccessLogEntry>& log,
                              std::optional<LogLevel> level_filter = std::nullopt);

// Distinct-address buckets: accessed exactly once, exactly special_count
// times, and everything else. Percentages are of distinct addresses,
// recomputed from the bucket counts and rounded to 3 decimals.
struct FrequencySummary {
  uint64_t special_count = 0;
  uint64_t once_addresses = 0;
  uint64_t special_addresses = 0;
  uint64_t other_addresses = 0;
  uint64_t distinct_addresses = 0;
  double once_percentage = 0.0;
  double special_percentage = 0.0;
  double other_percentage = 0.0;
};

FrequencySummary summarize_frequencies(const FrequencyTable& table, uint64_t special_count);

struct StrideRow {
  uint64_t cycle = 0;
  std::optional<int64_t> delta_to_next; // empty on the last row
};

// All access cycles of one address with consecutive deltas. Throws
// ConfigError when the address is absent or seen only once.
std::vector<StrideRow> stride_table_for_address(const std::vector<AccessLogEntry>& log,
                                                uint64_t address,
                                                std::optional<LogLevel> level_filter = std::nullopt);

struct Band {
  uint32_t band_id = 0;
  uint64_t low_address = 0;
  uint64_t high_address = 0;
  uint64_t total_accesses = 0;
  uint64_t address_count = 0;
};

inline constexpr uint64_t kDefaultBandGranularity = uint64_t{1} << 20;

// Groups addresses by address / granularity and merges adjacent non-empty
// groups into bands; granularity must be a power of two. Bands are disjoint
// and sorted ascending, and every address of the table lands in exactly one.
std::vector<Band> classify_bands(const FrequencyTable& table,
                                 uint64_t granularity = kDefaultBandGranularity);

struct ScatterPoint {
  uint64_t cycle = 0;
  uint64_t address = 0;
};

// Entries with cycle in [start, end), cycle-sorted. start must be < end.
std::vector<ScatterPoint> export_scatter(const std::vector<AccessLogEntry>& log, uint64_t start,
                                         uint64_t end,
                                         std::optional<LogLevel> level_filter = std::nullopt);

void write_frequency_csv(const FrequencyTable& table, std::ostream& out);
void write_summary_csv(const FrequencySummary& summary, std::ostream& out);
void write_stride_csv(const std::vector<StrideRow>& rows, std::ostream& out);
void write_bands_csv(const std::vector<Band>& bands, std::ostream& out);
void write_scatter_csv(const std::vector<ScatterPoint>& points, std::ostream& out);

} // namespace memsim
