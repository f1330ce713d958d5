#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "memsim/errors.hpp"

namespace memsim {

// One retired instruction. Encodes to a fixed 64-byte record:
//   bytes  0..7   instruction pointer, little-endian
//   byte   8      is_branch
//   byte   9      branch_taken
//   bytes 10..11  destination register ids
//   bytes 12..15  source register ids
//   bytes 16..31  destination memory addresses, 2 x 8B little-endian
//   bytes 32..63  source memory addresses, 4 x 8B little-endian
// Zero marks an unused operand slot; register id 0 is therefore not
// representable as a real operand (format limitation).
inline constexpr std::size_t kRecordBytes = 64;
inline constexpr std::size_t kMaxDestRegisters = 2;
inline constexpr std::size_t kMaxSrcRegisters = 4;
inline constexpr std::size_t kMaxDestMemory = 2;
inline constexpr std::size_t kMaxSrcMemory = 4;

struct TraceRecord {
  uint64_t ip = 0;
  bool is_branch = false;
  bool branch_taken = false;
  std::array<uint8_t, kMaxDestRegisters> dest_registers{};
  std::array<uint8_t, kMaxSrcRegisters> src_registers{};
  std::array<uint64_t, kMaxDestMemory> dest_memory{};
  std::array<uint64_t, kMaxSrcMemory> src_memory{};

  // Append into the first free slot; throws ConfigError when all slots are taken.
  void add_dest_register(uint8_t reg);
  void add_src_register(uint8_t reg);
  void add_dest_memory(uint64_t addr);
  void add_src_memory(uint64_t addr);

  bool valid() const { return is_branch || !branch_taken; }

  bool operator==(const TraceRecord&) const = default;
};

std::array<uint8_t, kRecordBytes> encode_record(const TraceRecord& rec);

// Throws FormatError unless bytes.size() == 64.
TraceRecord decode_record(std::span<const uint8_t> bytes);

enum class TraceCompression { none, xz };

// Sequential byte source; concrete implementations read plain files,
// xz containers, or in-memory buffers.
class ByteSource {
public:
  virtual ~ByteSource() = default;
  // Reads up to n bytes, returns the count actually read (0 at end of stream).
  virtual std::size_t read(uint8_t* out, std::size_t n) = 0;
};

class ByteSink {
public:
  virtual ~ByteSink() = default;
  virtual void write(const uint8_t* data, std::size_t n) = 0;
  virtual void finish() = 0;
};

std::unique_ptr<ByteSource> open_file_source(const std::string& path);
std::unique_ptr<ByteSource> open_memory_source(std::vector<uint8_t> bytes);
// Wraps a raw source in an xz decoder.
std::unique_ptr<ByteSource> open_xz_source(std::unique_ptr<ByteSource> raw);

std::unique_ptr<ByteSink> open_file_sink(const std::string& path);
std::unique_ptr<ByteSink> open_memory_sink(std::vector<uint8_t>* out);
std::unique_ptr<ByteSink> open_xz_sink(std::unique_ptr<ByteSink> raw, uint32_t preset = 1);

// Anything the simulation engine can pull records from.
class RecordSource {
public:
  virtual ~RecordSource() = default;
  // Returns false at clean end of stream; throws FormatError on a torn record.
  virtual bool next(TraceRecord& out) = 0;
};

// Streaming reader over a trace file. The container is auto-detected from
// the xz magic bytes. Single consumer; yields records strictly in file order.
class TraceReader : public RecordSource {
public:
  explicit TraceReader(const std::string& path);
  explicit TraceReader(std::unique_ptr<ByteSource> raw);
  ~TraceReader() override;

  bool next(TraceRecord& out) override;
  uint64_t records_read() const { return records_read_; }
  TraceCompression compression() const { return compression_; }

private:
  std::unique_ptr<ByteSource> source_;
  TraceCompression compression_ = TraceCompression::none;
  uint64_t records_read_ = 0;
};

class TraceWriter {
public:
  TraceWriter(const std::string& path, TraceCompression compression, uint32_t preset = 1);
  explicit TraceWriter(std::unique_ptr<ByteSink> sink);
  ~TraceWriter();

  void write(const TraceRecord& rec);
  void finish();
  uint64_t records_written() const { return records_written_; }

private:
  std::unique_ptr<ByteSink> sink_;
  uint64_t records_written_ = 0;
  bool finished_ = false;
};

// Replays an in-memory record vector.
class VectorRecordSource : public RecordSource {
public:
  explicit VectorRecordSource(const std::vector<TraceRecord>* records) : records_(records) {}
  bool next(TraceRecord& out) override {
    if (pos_ >= records_->size()) return false;
    out = (*records_)[pos_++];
    return true;
  }

private:
  const std::vector<TraceRecord>* records_;
  std::size_t pos_ = 0;
};

// Chooses the container from the file suffix: ".xz" -> xz, anything else raw.
TraceCompression compression_for_path(const std::string& path);

struct SplitResult {
  uint64_t prefix_records = 0;
  uint64_t suffix_records = 0;
};

// Copies the first split_at records of input to prefix_path and the rest to
// suffix_path, preserving the input's container kind. Throws ConfigError if
// split_at exceeds the record count.
SplitResult split_trace(const std::string& input, uint64_t split_at,
                        const std::string& prefix_path, const std::string& suffix_path);

std::vector<TraceRecord> read_all_records(const std::string& path);
void write_all_records(const std::string& path, const std::vector<TraceRecord>& records);

} // namespace memsim
