#include "memsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

#include "memsim/errors.hpp"

namespace memsim {

const char* log_level_name(LogLevel level) {
  switch (level) {
  case LogLevel::L1I: return "L1I";
  case LogLevel::L1D: return "L1D";
  case LogLevel::LLC: return "LLC";
  }
  return "?";
}

LogLevel log_level_from_name(const std::string& name) {
  if (name == "L1I") return LogLevel::L1I;
  if (name == "L1D") return LogLevel::L1D;
  if (name == "LLC") return LogLevel::LLC;
  throw FormatError("unknown log level: " + name);
}

void VectorAccessLogger::record(const std::string& level, uint64_t cycle, uint64_t address) {
  entries_.push_back(AccessLogEntry{address, cycle, log_level_from_name(level)});
}

CsvAccessLogger::CsvAccessLogger(std::ostream& out) : out_(out) { out_ << "level,cycle,address\n"; }

void CsvAccessLogger::record(const std::string& level, uint64_t cycle, uint64_t address) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), ",%llu,0x%llx\n", static_cast<unsigned long long>(cycle),
                static_cast<unsigned long long>(address));
  out_ << level << buf;
}

std::vector<AccessLogEntry> read_access_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open access log " + path);
  std::vector<AccessLogEntry> log;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("level,", 0) == 0) continue; // header
    }
    std::size_t c1 = line.find(',');
    std::size_t c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw FormatError("bad access log row: " + line);
    AccessLogEntry entry;
    entry.level = log_level_from_name(line.substr(0, c1));
    entry.cycle = std::stoull(line.substr(c1 + 1, c2 - c1 - 1));
    entry.address = std::stoull(line.substr(c2 + 1), nullptr, 0);
    log.push_back(entry);
  }
  return log;
}

void write_access_log(const std::vector<AccessLogEntry>& log, std::ostream& out) {
  out << "level,cycle,address\n";
  char buf[64];
  for (const auto& entry : log) {
    std::snprintf(buf, sizeof(buf), ",%llu,0x%llx\n", static_cast<unsigned long long>(entry.cycle),
                  static_cast<unsigned long long>(entry.address));
    out << log_level_name(entry.level) << buf;
  }
}

FrequencyTable count_accesses(const std::vector<AccessLogEntry>& log,
                              std::optional<LogLevel> level_filter) {
  FrequencyTable table;
  for (const auto& entry : log) {
    if (level_filter && entry.level != *level_filter) continue;
    ++table.counts[entry.address];
    ++table.total_accesses;
  }
  return table;
}

namespace {

double pct_of(uint64_t part, uint64_t whole) {
  if (whole == 0) return 0.0;
  return std::round(100000.0 * static_cast<double>(part) / static_cast<double>(whole)) / 1000.0;
}

} // namespace

FrequencySummary summarize_frequencies(const FrequencyTable& table, uint64_t special_count) {
  if (special_count < 1) throw ConfigError("special count must be at least 1");
  FrequencySummary summary;
  summary.special_count = special_count;
  for (const auto& [address, count] : table.counts) {
    (void)address;
    if (count == special_count)
      ++summary.special_addresses;
    else if (count == 1)
      ++summary.once_addresses;
    else
      ++summary.other_addresses;
  }
  summary.distinct_addresses = table.counts.size();
  summary.once_percentage = pct_of(summary.once_addresses, summary.distinct_addresses);
  summary.special_percentage = pct_of(summary.special_addresses, summary.distinct_addresses);
  summary.other_percentage = pct_of(summary.other_addresses, summary.distinct_addresses);
  return summary;
}

std::vector<StrideRow> stride_table_for_address(const std::vector<AccessLogEntry>& log,
                                                uint64_t address,
                                                std::optional<LogLevel> level_filter) {
  std::vector<uint64_t> cycles;
  for (const auto& entry : log) {
    if (entry.address != address) continue;
    if (level_filter && entry.level != *level_filter) continue;
    cycles.push_back(entry.cycle);
  }
  if (cycles.size() < 2)
    throw ConfigError("address seen " + std::to_string(cycles.size()) +
                      " times; need at least 2 for a stride table");
  std::vector<StrideRow> rows;
  rows.reserve(cycles.size());
  for (std::size_t i = 0; i < cycles.size(); ++i) {
    StrideRow row;
    row.cycle = cycles[i];
    if (i + 1 < cycles.size())
      row.delta_to_next = static_cast<int64_t>(cycles[i + 1]) - static_cast<int64_t>(cycles[i]);
    rows.push_back(row);
  }
  return rows;
}

std::vector<Band> classify_bands(const FrequencyTable& table, uint64_t granularity) {
  if (granularity == 0 || (granularity & (granularity - 1)) != 0)
    throw ConfigError("band granularity must be a power of two");

  struct GroupStats {
    uint64_t low = UINT64_MAX;
    uint64_t high = 0;
    uint64_t accesses = 0;
    uint64_t addresses = 0;
  };
  std::map<uint64_t, GroupStats> groups;
  for (const auto& [address, count] : table.counts) {
    GroupStats& g = groups[address / granularity];
    g.low = std::min(g.low, address);
    g.high = std::max(g.high, address);
    g.accesses += count;
    ++g.addresses;
  }

  std::vector<Band> bands;
  uint64_t prev_group = 0;
  for (const auto& [group, stats] : groups) {
    if (bands.empty() || group != prev_group + 1) {
      Band band;
      band.band_id = static_cast<uint32_t>(bands.size());
      band.low_address = stats.low;
      band.high_address = stats.high;
      band.total_accesses = stats.accesses;
      band.address_count = stats.addresses;
      bands.push_back(band);
    } else {
      Band& band = bands.back();
      band.high_address = std::max(band.high_address, stats.high);
      band.total_accesses += stats.accesses;
      band.address_count += stats.addresses;
    }
    prev_group = group;
  }
  return bands;
}

std::vector<ScatterPoint> export_scatter(const std::vector<AccessLogEntry>& log, uint64_t start,
                                         uint64_t end, std::optional<LogLevel> level_filter) {
  if (start >= end) throw ConfigError("scatter window start must be below end");
  std::vector<ScatterPoint> points;
  for (const auto& entry : log) {
    if (entry.cycle < start || entry.cycle >= end) continue;
    if (level_filter && entry.level != *level_filter) continue;
    points.push_back(ScatterPoint{entry.cycle, entry.address});
  }
  std::stable_sort(points.begin(), points.end(),
                   [](const ScatterPoint& a, const ScatterPoint& b) { return a.cycle < b.cycle; });
  return points;
}

void write_frequency_csv(const FrequencyTable& table, std::ostream& out) {
  std::vector<std::pair<uint64_t, uint64_t>> rows(table.counts.begin(), table.counts.end());
  std::sort(rows.begin(), rows.end());
  out << "address,count\n";
  char buf[64];
  for (const auto& [address, count] : rows) {
    std::snprintf(buf, sizeof(buf), "0x%llx,%llu\n", static_cast<unsigned long long>(address),
                  static_cast<unsigned long long>(count));
    out << buf;
  }
}

void write_summary_csv(const FrequencySummary& summary, std::ostream& out) {
  out << "bucket,addresses,percentage\n";
  char buf[96];
  std::snprintf(buf, sizeof(buf), "1,%llu,%.3f\n",
                static_cast<unsigned long long>(summary.once_addresses), summary.once_percentage);
  out << buf;
  std::snprintf(buf, sizeof(buf), "%llu,%llu,%.3f\n",
                static_cast<unsigned long long>(summary.special_count),
                static_cast<unsigned long long>(summary.special_addresses),
                summary.special_percentage);
  out << buf;
  std::snprintf(buf, sizeof(buf), "other,%llu,%.3f\n",
                static_cast<unsigned long long>(summary.other_addresses), summary.other_percentage);
  out << buf;
}

void write_stride_csv(const std::vector<StrideRow>& rows, std::ostream& out) {
  out << "cycle,delta_to_next\n";
  for (const auto& row : rows) {
    out << row.cycle << ',';
    if (row.delta_to_next) out << *row.delta_to_next;
    out << '\n';
  }
}

void write_bands_csv(const std::vector<Band>& bands, std::ostream& out) {
  out << "band_id,low_address,high_address,total_accesses,address_count\n";
  char buf[128];
  for (const auto& band : bands) {
    std::snprintf(buf, sizeof(buf), "%u,0x%llx,0x%llx,%llu,%llu\n", band.band_id,
                  static_cast<unsigned long long>(band.low_address),
                  static_cast<unsigned long long>(band.high_address),
                  static_cast<unsigned long long>(band.total_accesses),
                  static_cast<unsigned long long>(band.address_count));
    out << buf;
  }
}

void write_scatter_csv(const std::vector<ScatterPoint>& points, std::ostream& out) {
  out << "cycle,address\n";
  char buf[64];
  for (const auto& point : points) {
    std::snprintf(buf, sizeof(buf), "%llu,0x%llx\n", static_cast<unsigned long long>(point.cycle),
                  static_cast<unsigned long long>(point.address));
    out << buf;
  }
}

} // namespace memsim
