#include "memsim/trace.hpp"

#include <lzma.h>

#include <cstring>
#include <filesystem>

namespace memsim {

namespace {

constexpr std::array<uint8_t, 6> kXzMagic = {0xFD, '7', 'z', 'X', 'Z', 0x00};

void store_le64(uint8_t* out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out[i] = static_cast<uint8_t>(v >> (8 * i));
}

uint64_t load_le64(const uint8_t* in) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | in[i];
  return v;
}

template <typename T, std::size_t N>
void append_slot(std::array<T, N>& slots, T value, const char* what) {
  for (auto& slot : slots) {
    if (slot == 0) {
      slot = value;
      return;
    }
  }
  throw ConfigError(std::string("no free ") + what + " slot");
}

} // namespace

void TraceRecord::add_dest_register(uint8_t reg) { append_slot(dest_registers, reg, "destination register"); }
void TraceRecord::add_src_register(uint8_t reg) { append_slot(src_registers, reg, "source register"); }
void TraceRecord::add_dest_memory(uint64_t addr) { append_slot(dest_memory, addr, "destination memory"); }
void TraceRecord::add_src_memory(uint64_t addr) { append_slot(src_memory, addr, "source memory"); }

std::array<uint8_t, kRecordBytes> encode_record(const TraceRecord& rec) {
  std::array<uint8_t, kRecordBytes> out{};
  store_le64(out.data(), rec.ip);
  out[8] = rec.is_branch ? 1 : 0;
  out[9] = rec.branch_taken ? 1 : 0;
  out[10] = rec.dest_registers[0];
  out[11] = rec.dest_registers[1];
  for (std::size_t i = 0; i < kMaxSrcRegisters; ++i) out[12 + i] = rec.src_registers[i];
  for (std::size_t i = 0; i < kMaxDestMemory; ++i) store_le64(out.data() + 16 + 8 * i, rec.dest_memory[i]);
  for (std::size_t i = 0; i < kMaxSrcMemory; ++i) store_le64(out.data() + 32 + 8 * i, rec.src_memory[i]);
  return out;
}

TraceRecord decode_record(std::span<const uint8_t> bytes) {
  if (bytes.size() != kRecordBytes)
    throw FormatError("trace record must be exactly 64 bytes, got " + std::to_string(bytes.size()));
  TraceRecord rec;
  rec.ip = load_le64(bytes.data());
  rec.is_branch = bytes[8] != 0;
  rec.branch_taken = bytes[9] != 0;
  rec.dest_registers[0] = bytes[10];
  rec.dest_registers[1] = bytes[11];
  for (std::size_t i = 0; i < kMaxSrcRegisters; ++i) rec.src_registers[i] = bytes[12 + i];
  for (std::size_t i = 0; i < kMaxDestMemory; ++i) rec.dest_memory[i] = load_le64(bytes.data() + 16 + 8 * i);
  for (std::size_t i = 0; i < kMaxSrcMemory; ++i) rec.src_memory[i] = load_le64(bytes.data() + 32 + 8 * i);
  return rec;
}

namespace {

class FileSource final : public ByteSource {
public:
  explicit FileSource(const std::string& path) : file_(std::fopen(path.c_str(), "rb")) {
    if (!file_) throw FormatError("cannot open " + path);
  }
  ~FileSource() override {
    if (file_) std::fclose(file_);
  }
  std::size_t read(uint8_t* out, std::size_t n) override { return std::fread(out, 1, n, file_); }

private:
  std::FILE* file_;
};

class MemorySource final : public ByteSource {
public:
  explicit MemorySource(std::vector<uint8_t> bytes) : bytes_(std::move(bytes)) {}
  std::size_t read(uint8_t* out, std::size_t n) override {
    std::size_t take = std::min(n, bytes_.size() - pos_);
    std::memcpy(out, bytes_.data() + pos_, take);
    pos_ += take;
    return take;
  }

private:
  std::vector<uint8_t> bytes_;
  std::size_t pos_ = 0;
};

class XzSource final : public ByteSource {
public:
  explicit XzSource(std::unique_ptr<ByteSource> raw) : raw_(std::move(raw)) {
    if (lzma_stream_decoder(&strm_, UINT64_MAX, LZMA_CONCATENATED) != LZMA_OK)
      throw FormatError("xz decoder init failed");
  }
  ~XzSource() override { lzma_end(&strm_); }

  std::size_t read(uint8_t* out, std::size_t n) override {
    strm_.next_out = out;
    strm_.avail_out = n;
    while (strm_.avail_out > 0 && !done_) {
      if (strm_.avail_in == 0 && !input_done_) {
        in_fill_ = raw_->read(in_buf_.data(), in_buf_.size());
        strm_.next_in = in_buf_.data();
        strm_.avail_in = in_fill_;
        if (in_fill_ == 0) input_done_ = true;
      }
      lzma_ret ret = lzma_code(&strm_, input_done_ ? LZMA_FINISH : LZMA_RUN);
      if (ret == LZMA_STREAM_END) {
        done_ = true;
      } else if (ret != LZMA_OK) {
        throw FormatError("xz decode error (code " + std::to_string(ret) + ")");
      }
    }
    return n - strm_.avail_out;
  }

private:
  std::unique_ptr<ByteSource> raw_;
  lzma_stream strm_ = LZMA_STREAM_INIT;
  std::array<uint8_t, 1 << 16> in_buf_{};
  std::size_t in_fill_ = 0;
  bool input_done_ = false;
  bool done_ = false;
};

class FileSink final : public ByteSink {
public:
  explicit FileSink(const std::string& path) : file_(std::fopen(path.c_str(), "wb")) {
    if (!file_) throw FormatError("cannot create " + path);
  }
  ~FileSink() override {
    if (file_) std::fclose(file_);
  }
  void write(const uint8_t* data, std::size_t n) override {
    if (std::fwrite(data, 1, n, file_) != n) throw FormatError("short write");
  }
  void finish() override {
    if (file_) {
      std::fclose(file_);
      file_ = nullptr;
    }
  }

private:
  std::FILE* file_;
};

class MemorySink final : public ByteSink {
public:
  explicit MemorySink(std::vector<uint8_t>* out) : out_(out) {}
  void write(const uint8_t* data, std::size_t n) override { out_->insert(out_->end(), data, data + n); }
  void finish() override {}

private:
  std::vector<uint8_t>* out_;
};

class XzSink final : public ByteSink {
public:
  XzSink(std::unique_ptr<ByteSink> raw, uint32_t preset) : raw_(std::move(raw)) {
    if (lzma_easy_encoder(&strm_, preset, LZMA_CHECK_CRC64) != LZMA_OK)
      throw FormatError("xz encoder init failed");
  }
  ~XzSink() override { lzma_end(&strm_); }

  void write(const uint8_t* data, std::size_t n) override {
    strm_.next_in = data;
    strm_.avail_in = n;
    pump(LZMA_RUN);
  }

  void finish() override {
    if (finished_) return;
    strm_.next_in = nullptr;
    strm_.avail_in = 0;
    pump(LZMA_FINISH);
    raw_->finish();
    finished_ = true;
  }

private:
  void pump(lzma_action action) {
    for (;;) {
      strm_.next_out = out_buf_.data();
      strm_.avail_out = out_buf_.size();
      lzma_ret ret = lzma_code(&strm_, action);
      if (ret != LZMA_OK && ret != LZMA_STREAM_END)
        throw FormatError("xz encode error (code " + std::to_string(ret) + ")");
      std::size_t produced = out_buf_.size() - strm_.avail_out;
      if (produced > 0) raw_->write(out_buf_.data(), produced);
      if (action == LZMA_RUN && strm_.avail_in == 0) break;
      if (ret == LZMA_STREAM_END) break;
    }
  }

  std::unique_ptr<ByteSink> raw_;
  lzma_stream strm_ = LZMA_STREAM_INIT;
  std::array<uint8_t, 1 << 16> out_buf_{};
  bool finished_ = false;
};

// Lets the reader sniff magic bytes and push them back for the real decoder.
class PrefixedSource final : public ByteSource {
public:
  PrefixedSource(std::vector<uint8_t> prefix, std::unique_ptr<ByteSource> rest)
      : prefix_(std::move(prefix)), rest_(std::move(rest)) {}
  std::size_t read(uint8_t* out, std::size_t n) override {
    std::size_t total = 0;
    if (pos_ < prefix_.size()) {
      std::size_t take = std::min(n, prefix_.size() - pos_);
      std::memcpy(out, prefix_.data() + pos_, take);
      pos_ += take;
      total += take;
    }
    if (total < n) total += rest_->read(out + total, n - total);
    return total;
  }

private:
  std::vector<uint8_t> prefix_;
  std::size_t pos_ = 0;
  std::unique_ptr<ByteSource> rest_;
};

} // namespace

std::unique_ptr<ByteSource> open_file_source(const std::string& path) {
  return std::make_unique<FileSource>(path);
}
std::unique_ptr<ByteSource> open_memory_source(std::vector<uint8_t> bytes) {
  return std::make_unique<MemorySource>(std::move(bytes));
}
std::unique_ptr<ByteSource> open_xz_source(std::unique_ptr<ByteSource> raw) {
  return std::make_unique<XzSource>(std::move(raw));
}
std::unique_ptr<ByteSink> open_file_sink(const std::string& path) {
  return std::make_unique<FileSink>(path);
}
std::unique_ptr<ByteSink> open_memory_sink(std::vector<uint8_t>* out) {
  return std::make_unique<MemorySink>(out);
}
std::unique_ptr<ByteSink> open_xz_sink(std::unique_ptr<ByteSink> raw, uint32_t preset) {
  return std::make_unique<XzSink>(std::move(raw), preset);
}

TraceReader::TraceReader(const std::string& path) : TraceReader(open_file_source(path)) {}

TraceReader::TraceReader(std::unique_ptr<ByteSource> raw) {
  std::vector<uint8_t> head(kXzMagic.size());
  std::size_t got = 0;
  while (got < head.size()) {
    std::size_t r = raw->read(head.data() + got, head.size() - got);
    if (r == 0) break;
    got += r;
  }
  head.resize(got);
  bool is_xz = got == kXzMagic.size() && std::memcmp(head.data(), kXzMagic.data(), kXzMagic.size()) == 0;
  auto rewound = std::make_unique<PrefixedSource>(std::move(head), std::move(raw));
  if (is_xz) {
    compression_ = TraceCompression::xz;
    source_ = open_xz_source(std::move(rewound));
  } else {
    compression_ = TraceCompression::none;
    source_ = std::move(rewound);
  }
}

TraceReader::~TraceReader() = default;

bool TraceReader::next(TraceRecord& out) {
  std::array<uint8_t, kRecordBytes> buf;
  std::size_t got = 0;
  while (got < kRecordBytes) {
    std::size_t r = source_->read(buf.data() + got, kRecordBytes - got);
    if (r == 0) break;
    got += r;
  }
  if (got == 0) return false;
  if (got != kRecordBytes)
    throw FormatError("trace truncated mid-record after " + std::to_string(records_read_) + " records");
  out = decode_record(buf);
  ++records_read_;
  return true;
}

TraceWriter::TraceWriter(const std::string& path, TraceCompression compression, uint32_t preset) {
  auto file = open_file_sink(path);
  sink_ = compression == TraceCompression::xz ? open_xz_sink(std::move(file), preset) : std::move(file);
}

TraceWriter::TraceWriter(std::unique_ptr<ByteSink> sink) : sink_(std::move(sink)) {}

TraceWriter::~TraceWriter() {
  if (!finished_) {
    try {
      finish();
    } catch (...) {
    }
  }
}

void TraceWriter::write(const TraceRecord& rec) {
  auto bytes = encode_record(rec);
  sink_->write(bytes.data(), bytes.size());
  ++records_written_;
}

void TraceWriter::finish() {
  if (finished_) return;
  sink_->finish();
  finished_ = true;
}

TraceCompression compression_for_path(const std::string& path) {
  return path.size() >= 3 && path.compare(path.size() - 3, 3, ".xz") == 0 ? TraceCompression::xz
                                                                          : TraceCompression::none;
}

SplitResult split_trace(const std::string& input, uint64_t split_at,
                        const std::string& prefix_path, const std::string& suffix_path) {
  TraceReader reader(input);
  TraceWriter prefix(prefix_path, reader.compression());
  TraceWriter suffix(suffix_path, reader.compression());

  TraceRecord rec;
  SplitResult result;
  while (reader.next(rec)) {
    if (result.prefix_records < split_at) {
      prefix.write(rec);
      ++result.prefix_records;
    } else {
      suffix.write(rec);
      ++result.suffix_records;
    }
  }
  if (result.prefix_records < split_at)
    throw ConfigError("split point " + std::to_string(split_at) + " exceeds trace length " +
                      std::to_string(result.prefix_records + result.suffix_records));
  prefix.finish();
  suffix.finish();
  return result;
}

std::vector<TraceRecord> read_all_records(const std::string& path) {
  TraceReader reader(path);
  std::vector<TraceRecord> records;
  TraceRecord rec;
  while (reader.next(rec)) records.push_back(rec);
  return records;
}

void write_all_records(const std::string& path, const std::vector<TraceRecord>& records) {
  TraceWriter writer(path, compression_for_path(path));
  for (const auto& rec : records) writer.write(rec);
  writer.finish();
}

} // namespace memsim
