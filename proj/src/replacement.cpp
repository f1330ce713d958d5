#include "memsim/replacement.hpp"

#include <algorithm>

#include "memsim/errors.hpp"

namespace memsim {

LruPolicy::LruPolicy(uint32_t sets, uint32_t ways) : ways_(ways), stamps_(std::size_t{sets} * ways, 0) {}

void LruPolicy::on_hit(uint32_t set, uint32_t way) { stamps_[set * ways_ + way] = ++clock_; }

void LruPolicy::on_fill(uint32_t set, uint32_t way, const FillContext&) {
  stamps_[set * ways_ + way] = ++clock_;
}

uint32_t LruPolicy::select_victim(uint32_t set) {
  const uint64_t* row = &stamps_[set * ways_];
  uint32_t victim = 0;
  for (uint32_t w = 1; w < ways_; ++w)
    if (row[w] < row[victim]) victim = w;
  return victim;
}

NruPolicy::NruPolicy(uint32_t sets, uint32_t ways) : ways_(ways), bits_(std::size_t{sets} * ways, 1) {}

void NruPolicy::on_hit(uint32_t set, uint32_t way) { bits_[set * ways_ + way] = 0; }

void NruPolicy::on_fill(uint32_t set, uint32_t way, const FillContext&) { bits_[set * ways_ + way] = 0; }

uint32_t NruPolicy::select_victim(uint32_t set) {
  uint8_t* row = &bits_[set * ways_];
  for (uint32_t w = 0; w < ways_; ++w)
    if (row[w]) return w;
  // Nothing predicted distant: age the whole set, then take the leftmost.
  std::fill(row, row + ways_, uint8_t{1});
  return 0;
}

namespace {

// Shared RRIP victim search: age every way until a distant one appears,
// then take the leftmost. Bounded by kRrpvMax rounds.
uint32_t rrip_select(uint8_t* row, uint32_t ways) {
  for (;;) {
    for (uint32_t w = 0; w < ways; ++w)
      if (row[w] == kRrpvMax) return w;
    for (uint32_t w = 0; w < ways; ++w) ++row[w];
  }
}

} // namespace

SrripPolicy::SrripPolicy(uint32_t sets, uint32_t ways)
    : ways_(ways), rrpv_(std::size_t{sets} * ways, kRrpvMax) {}

void SrripPolicy::on_hit(uint32_t set, uint32_t way) { rrpv_[set * ways_ + way] = 0; }

void SrripPolicy::on_fill(uint32_t set, uint32_t way, const FillContext&) {
  rrpv_[set * ways_ + way] = kRrpvLong;
}

uint32_t SrripPolicy::select_victim(uint32_t set) { return rrip_select(&rrpv_[set * ways_], ways_); }

DrripPolicy::DrripPolicy(uint32_t sets, uint32_t ways)
    : ways_(ways), leader_period_(std::max(4u, sets / 32)),
      rrpv_(std::size_t{sets} * ways, kRrpvMax) {}

DrripPolicy::SetRole DrripPolicy::set_role(uint32_t set) const {
  if (set % leader_period_ == 0) return SetRole::srrip_leader;
  if (set % leader_period_ == leader_period_ / 2) return SetRole::brrip_leader;
  return SetRole::follower;
}

void DrripPolicy::on_hit(uint32_t set, uint32_t way) { rrpv_[set * ways_ + way] = 0; }

void DrripPolicy::insert_brrip(uint32_t index) {
  ++brip_fills_;
  rrpv_[index] = (brip_fills_ % kBimodalPeriod == 0) ? kRrpvLong : kRrpvMax;
}

void DrripPolicy::on_fill(uint32_t set, uint32_t way, const FillContext&) {
  uint32_t index = set * ways_ + way;
  switch (set_role(set)) {
  case SetRole::srrip_leader:
    psel_ = std::min(psel_ + 1, kPselMax); // static side missed
    rrpv_[index] = kRrpvLong;
    break;
  case SetRole::brrip_leader:
    if (psel_ > 0) --psel_; // bimodal side missed
    insert_brrip(index);
    break;
  case SetRole::follower:
    if (followers_use_brrip())
      insert_brrip(index);
    else
      rrpv_[index] = kRrpvLong;
    break;
  }
}

uint32_t DrripPolicy::select_victim(uint32_t set) { return rrip_select(&rrpv_[set * ways_], ways_); }

ShipPolicy::ShipPolicy(uint32_t sets, uint32_t ways)
    : ways_(ways), rrpv_(std::size_t{sets} * ways, kRrpvMax),
      slots_(std::size_t{sets} * ways), shct_(kShctEntries, kShctInit) {}

uint32_t ShipPolicy::signature_for_ip(uint64_t ip) {
  return static_cast<uint32_t>((ip * 0x9E3779B97F4A7C15ull) >> 50); // top 14 bits
}

void ShipPolicy::on_hit(uint32_t set, uint32_t way) {
  uint32_t index = set * ways_ + way;
  rrpv_[index] = 0;
  Slot& slot = slots_[index];
  if (slot.tracked) {
    slot.outcome = true;
    shct_[slot.signature] = std::min<uint8_t>(shct_[slot.signature] + 1, kShctMax);
  }
}

void ShipPolicy::on_fill(uint32_t set, uint32_t way, const FillContext& ctx) {
  uint32_t index = set * ways_ + way;
  Slot& slot = slots_[index];
  // Train on the block being replaced: a tracked block leaving without any
  // re-reference demotes its signature.
  if (slot.tracked && !slot.outcome && shct_[slot.signature] > 0) --shct_[slot.signature];

  slot.signature = signature_for_ip(ctx.ip);
  slot.outcome = false;
  slot.tracked = true;
  rrpv_[index] = (shct_[slot.signature] == 0) ? kRrpvMax : kRrpvLong;
}

uint32_t ShipPolicy::select_victim(uint32_t set) { return rrip_select(&rrpv_[set * ways_], ways_); }

std::unique_ptr<ReplacementPolicy> make_replacement_policy(const std::string& policy_name,
                                                           uint32_t sets, uint32_t ways) {
  if (policy_name == "lru") return std::make_unique<LruPolicy>(sets, ways);
  if (policy_name == "nru") return std::make_unique<NruPolicy>(sets, ways);
  if (policy_name == "srrip") return std::make_unique<SrripPolicy>(sets, ways);
  if (policy_name == "drrip") return std::make_unique<DrripPolicy>(sets, ways);
  if (policy_name == "ship") return std::make_unique<ShipPolicy>(sets, ways);
  throw ConfigError("unknown replacement policy: " + policy_name);
}

} // namespace memsim
