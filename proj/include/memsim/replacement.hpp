#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace memsim {

struct FillContext {
  uint64_t ip = 0; // requesting instruction, 0 for prefetch and write-back fills
  uint32_t set_index = 0;
};

// Per-set replacement state behind three hooks. select_victim is only called
// on a full set; invalid ways are filled by the cache before a victim is ever
// needed. Tie-breaking is always the lowest way index.
class ReplacementPolicy {
public:
  virtual ~ReplacementPolicy() = default;
  virtual void on_hit(uint32_t set, uint32_t way) = 0;
  virtual void on_fill(uint32_t set, uint32_t way, const FillContext& ctx) = 0;
  virtual uint32_t select_victim(uint32_t set) = 0;
  virtual const char* name() const = 0;
};

class LruPolicy final : public ReplacementPolicy {
public:
  LruPolicy(uint32_t sets, uint32_t ways);
  void on_hit(uint32_t set, uint32_t way) override;
  void on_fill(uint32_t set, uint32_t way, const FillContext& ctx) override;
  uint32_t select_victim(uint32_t set) override;
  const char* name() const override { return "lru"; }

  uint64_t stamp(uint32_t set, uint32_t way) const { return stamps_[set * ways_ + way]; }

private:
  uint32_t ways_;
  uint64_t clock_ = 0;
  std::vector<uint64_t> stamps_;
};

class NruPolicy final : public ReplacementPolicy {
public:
  NruPolicy(uint32_t sets, uint32_t ways);
  void on_hit(uint32_t set, uint32_t way) override;
  void on_fill(uint32_t set, uint32_t way, const FillContext& ctx) override;
  uint32_t select_victim(uint32_t set) override;
  const char* name() const override { return "nru"; }

  bool distant(uint32_t set, uint32_t way) const { return bits_[set * ways_ + way] != 0; }

private:
  uint32_t ways_;
  std::vector<uint8_t> bits_; // 1 = predicted distant
};

inline constexpr uint8_t kRrpvMax = 3; // 2-bit re-reference prediction values
inline constexpr uint8_t kRrpvLong = 2;

class SrripPolicy final : public ReplacementPolicy {
public:
  SrripPolicy(uint32_t sets, uint32_t ways);
  void on_hit(uint32_t set, uint32_t way) override;
  void on_fill(uint32_t set, uint32_t way, const FillContext& ctx) override;
  uint32_t select_victim(uint32_t set) override;
  const char* name() const override { return "srrip"; }

  uint8_t rrpv(uint32_t set, uint32_t way) const { return rrpv_[set * ways_ + way]; }

private:
  uint32_t ways_;
  std::vector<uint8_t> rrpv_;
};

// Set dueling between static insertion (rrpv=2) and bimodal insertion
// (rrpv=3, every 32nd fill rrpv=2; deterministic counter). Misses in leader
// sets train a 10-bit PSEL; follower sets use whichever side is winning.
class DrripPolicy final : public ReplacementPolicy {
public:
  enum class SetRole { srrip_leader, brrip_leader, follower };
  static constexpr uint32_t kPselMax = 1023;
  static constexpr uint32_t kPselThreshold = 512;
  static constexpr uint32_t kBimodalPeriod = 32;

  DrripPolicy(uint32_t sets, uint32_t ways);
  void on_hit(uint32_t set, uint32_t way) override;
  void on_fill(uint32_t set, uint32_t way, const FillContext& ctx) override;
  uint32_t select_victim(uint32_t set) override;
  const char* name() const override { return "drrip"; }

  SetRole set_role(uint32_t set) const;
  uint32_t psel() const { return psel_; }
  bool followers_use_brrip() const { return psel_ >= kPselThreshold; }
  uint8_t rrpv(uint32_t set, uint32_t way) const { return rrpv_[set * ways_ + way]; }

private:
  void insert_brrip(uint32_t index);

  uint32_t ways_;
  uint32_t leader_period_;
  uint32_t psel_ = 0; // high half = bimodal side winning
  uint64_t brip_fills_ = 0;
  std::vector<uint8_t> rrpv_;
};

// Signature-based insertion on top of the static RRIP automaton. Each filled
// block remembers a 14-bit hash of the requesting instruction pointer; a table
// of 2-bit counters learns whether that signature's blocks see reuse.
class ShipPolicy final : public ReplacementPolicy {
public:
  static constexpr uint32_t kShctEntries = 16384;
  static constexpr uint8_t kShctMax = 3;
  static constexpr uint8_t kShctInit = 1;

  ShipPolicy(uint32_t sets, uint32_t ways);
  void on_hit(uint32_t set, uint32_t way) override;
  void on_fill(uint32_t set, uint32_t way, const FillContext& ctx) override;
  uint32_t select_victim(uint32_t set) override;
  const char* name() const override { return "ship"; }

  static uint32_t signature_for_ip(uint64_t ip);
  uint8_t shct_value(uint32_t signature) const { return shct_[signature]; }
  uint8_t rrpv(uint32_t set, uint32_t way) const { return rrpv_[set * ways_ + way]; }

private:
  struct Slot {
    uint32_t signature = 0;
    bool outcome = false; // saw a demand re-reference
    bool tracked = false;
  };

  uint32_t ways_;
  std::vector<uint8_t> rrpv_;
  std::vector<Slot> slots_;
  std::vector<uint8_t> shct_;
};

// Names: "lru" | "nru" | "srrip" | "drrip" | "ship".
std::unique_ptr<ReplacementPolicy> make_replacement_policy(const std::string& policy_name,
                                                           uint32_t sets, uint32_t ways);

} // namespace memsim
