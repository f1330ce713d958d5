#include "memsim/prefetch.hpp"

#include <algorithm>
#include <bit>

#include "memsim/errors.hpp"

namespace memsim {

namespace {

uint64_t mix_hash(uint64_t v) {
  v ^= v >> 33;
  v *= 0xFF51AFD7ED558CCDull;
  v ^= v >> 33;
  return v;
}

void emit(std::vector<uint64_t>& candidates, uint64_t trigger, int64_t target) {
  if (target <= 0) return;
  uint64_t block = static_cast<uint64_t>(target);
  if (block > kMaxBlockNumber || block == trigger) return;
  candidates.push_back(block);
}

// 7-bit sign-magnitude image of a small block delta, used in signature rolls.
uint32_t signed_delta_code(int32_t delta) {
  return delta < 0 ? ((static_cast<uint32_t>(-delta) & 0x3F) | 0x40)
                   : (static_cast<uint32_t>(delta) & 0x3F);
}

} // namespace

void NextLinePrefetcher::observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) {
  for (uint32_t i = 1; i <= degree_; ++i)
    emit(candidates, access.block, static_cast<int64_t>(access.block) + i);
}

void IpStridePrefetcher::observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) {
  Entry& e = table_[mix_hash(access.ip) % kTableEntries];
  if (!e.valid || e.ip_tag != access.ip) {
    e = Entry{};
    e.ip_tag = access.ip;
    e.last_block = access.block;
    e.valid = true;
    return;
  }

  int64_t delta = static_cast<int64_t>(access.block) - static_cast<int64_t>(e.last_block);
  e.last_block = access.block;
  if (delta == 0) return;

  if (!e.has_stride) {
    e.stride = delta;
    e.has_stride = true;
    e.confidence = 1;
    return;
  }

  if (delta == e.stride) {
    e.confidence = std::min<uint8_t>(e.confidence + 1, kConfidenceMax);
    if (e.confidence >= kEmitThreshold) {
      for (uint32_t i = 1; i <= degree_; ++i)
        emit(candidates, access.block, static_cast<int64_t>(access.block) + e.stride * i);
    }
  } else {
    if (e.confidence > 0) --e.confidence;
    if (e.confidence == 0) e.stride = delta;
  }
}

uint16_t SppPrefetcher::advance_signature(uint16_t signature, int32_t delta) {
  return static_cast<uint16_t>(((signature << 3) ^ signed_delta_code(delta)) & 0xFFF);
}

void SppPrefetcher::pattern_update(uint16_t signature, int32_t delta) {
  PatternEntry& p = pattern_table_[signature % kPatternTableEntries];
  if (!p.valid || p.tag != signature) {
    p = PatternEntry{};
    p.tag = signature;
    p.valid = true;
  }
  int free_slot = -1;
  int min_slot = 0;
  for (uint32_t i = 0; i < kDeltasPerPattern; ++i) {
    if (p.count[i] == 0 && free_slot < 0) free_slot = static_cast<int>(i);
    if (p.count[i] < p.count[min_slot]) min_slot = static_cast<int>(i);
    if (p.count[i] > 0 && p.delta[i] == delta) {
      ++p.count[i];
      ++p.total;
      if (p.total >= 4096) {
        for (auto& c : p.count) c = static_cast<uint16_t>(c >> 1);
        p.total = static_cast<uint16_t>(p.total >> 1);
      }
      return;
    }
  }
  int slot = free_slot >= 0 ? free_slot : min_slot;
  p.delta[slot] = static_cast<int16_t>(delta);
  p.count[slot] = 1;
  ++p.total;
}

bool SppPrefetcher::pattern_lookup(uint16_t signature, int32_t& delta, double& ratio) const {
  const PatternEntry& p = pattern_table_[signature % kPatternTableEntries];
  if (!p.valid || p.tag != signature || p.total == 0) return false;
  uint32_t best = 0;
  for (uint32_t i = 1; i < kDeltasPerPattern; ++i)
    if (p.count[i] > p.count[best]) best = i;
  if (p.count[best] == 0) return false;
  delta = p.delta[best];
  ratio = static_cast<double>(p.count[best]) / static_cast<double>(p.total);
  return true;
}

void SppPrefetcher::observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) {
  uint64_t page = page_of_block(access.block);
  uint32_t offset = page_offset_of_block(access.block);

  SignatureEntry& st = signature_table_[mix_hash(page) % kSignatureTableEntries];
  uint16_t signature = 0;
  double confidence = 1.0;
  bool have_signature = false;

  if (st.valid && st.page == page) {
    int32_t delta = static_cast<int32_t>(offset) - static_cast<int32_t>(st.last_offset);
    if (delta == 0) return;
    pattern_update(st.signature, delta);
    signature = advance_signature(st.signature, delta);
    st.signature = signature;
    st.last_offset = static_cast<uint8_t>(offset);
    have_signature = true;
  } else {
    // New page: try to resume a signature parked when a prediction crossed
    // out of its source page.
    for (auto& g : ghr_) {
      if (!g.valid) continue;
      int32_t landing = static_cast<int32_t>(g.last_offset) + g.delta;
      bool crossed = landing < 0 || landing >= static_cast<int32_t>(kBlocksPerPage);
      uint32_t landing_offset =
          static_cast<uint32_t>((landing % static_cast<int32_t>(kBlocksPerPage) + kBlocksPerPage) %
                                kBlocksPerPage);
      if (crossed && landing_offset == offset) {
        signature = advance_signature(g.signature, g.delta);
        confidence = g.confidence;
        have_signature = true;
        break;
      }
    }
    st.page = page;
    st.signature = signature;
    st.last_offset = static_cast<uint8_t>(offset);
    st.valid = true;
  }

  if (!have_signature) return;

  // Lookahead walk: follow the best delta chain until confidence drains.
  uint16_t cur_signature = signature;
  int64_t cur_block = static_cast<int64_t>(access.block);
  uint32_t cur_offset = offset;
  bool ghr_stored = false;
  for (uint32_t depth = 0; depth < kMaxLookahead; ++depth) {
    int32_t delta = 0;
    double ratio = 0.0;
    if (!pattern_lookup(cur_signature, delta, ratio)) break;
    confidence *= ratio;
    if (confidence < kConfidenceThreshold) break;

    int64_t target = cur_block + delta;
    emit(candidates, access.block, target);

    int32_t landing = static_cast<int32_t>(cur_offset) + delta;
    if ((landing < 0 || landing >= static_cast<int32_t>(kBlocksPerPage)) && !ghr_stored) {
      GhrEntry& g = ghr_[ghr_next_];
      ghr_next_ = (ghr_next_ + 1) % kGhrEntries;
      g = GhrEntry{cur_signature, confidence, static_cast<uint8_t>(cur_offset),
                   static_cast<int16_t>(delta), true};
      ghr_stored = true;
    }

    if (target <= 0) break;
    cur_signature = advance_signature(cur_signature, delta);
    cur_block = target;
    cur_offset = page_offset_of_block(static_cast<uint64_t>(target));
  }
}

void BingoPrefetcher::FootprintTable::put(uint64_t key, uint32_t footprint, uint32_t capacity) {
  auto [it, inserted] = map.insert_or_assign(key, footprint);
  (void)it;
  if (inserted) {
    fifo.push_back(key);
    if (fifo.size() > capacity) {
      map.erase(fifo.front());
      fifo.erase(fifo.begin());
    }
  }
}

const uint32_t* BingoPrefetcher::FootprintTable::get(uint64_t key) const {
  auto it = map.find(key);
  return it == map.end() ? nullptr : &it->second;
}

void BingoPrefetcher::commit(const Generation& gen) {
  uint64_t long_key = mix_hash(gen.trigger_ip) ^ mix_hash(gen.region * 2 + 1);
  uint64_t short_key = mix_hash(gen.trigger_ip) ^ mix_hash(gen.trigger_offset * 2);
  long_events_.put(long_key, gen.footprint, kTableEntries);
  short_events_.put(short_key, gen.footprint, kTableEntries);
}

void BingoPrefetcher::flush() {
  for (auto& [region, gen] : active_) commit(gen);
  active_.clear();
}

void BingoPrefetcher::observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) {
  uint64_t region = access.block / kRegionBlocks;
  uint32_t offset = static_cast<uint32_t>(access.block % kRegionBlocks);

  auto it = active_.find(region);
  if (it != active_.end()) {
    it->second.footprint |= uint32_t{1} << offset;
    return;
  }

  // Region trigger: a new generation starts here.
  if (active_.size() >= kActiveGenerations) {
    auto oldest = active_.begin();
    for (auto g = active_.begin(); g != active_.end(); ++g)
      if (g->second.order < oldest->second.order) oldest = g;
    commit(oldest->second);
    active_.erase(oldest);
  }
  Generation gen{region, access.ip, static_cast<uint8_t>(offset), uint32_t{1} << offset,
                 ++order_counter_};
  active_.emplace(region, gen);

  uint64_t long_key = mix_hash(access.ip) ^ mix_hash(region * 2 + 1);
  uint64_t short_key = mix_hash(access.ip) ^ mix_hash(uint64_t{offset} * 2);
  const uint32_t* footprint = long_events_.get(long_key);
  if (!footprint) footprint = short_events_.get(short_key);
  if (!footprint) return;

  for (uint32_t i = 0; i < kRegionBlocks; ++i) {
    if (i == offset || (*footprint & (uint32_t{1} << i)) == 0) continue;
    emit(candidates, access.block, static_cast<int64_t>(region * kRegionBlocks + i));
  }
}

IpcpPrefetcher::IpClass IpcpPrefetcher::classify(uint64_t ip) const {
  const IpEntry& e = ips_[mix_hash(ip) % kIpEntries];
  if (!e.valid || e.ip_tag != ip) return IpClass::untrained;
  return e.cls;
}

void IpcpPrefetcher::track_region(uint64_t page, uint32_t offset, uint64_t ip) {
  for (auto& r : regions_) {
    if (r.valid && r.page == page) {
      r.touched |= uint64_t{1} << offset;
      if (!r.triggered && static_cast<uint32_t>(std::popcount(r.touched)) >= kStreamDensityThreshold) {
        r.triggered = true;
        IpEntry& e = ips_[mix_hash(r.trigger_ip) % kIpEntries];
        if (!e.valid || e.ip_tag != r.trigger_ip) {
          e = IpEntry{};
          e.ip_tag = r.trigger_ip;
          e.valid = true;
        }
        e.cls = IpClass::global_stream;
      }
      return;
    }
  }
  RegionEntry& r = regions_[region_next_];
  region_next_ = (region_next_ + 1) % kRegionRing;
  r = RegionEntry{page, uint64_t{1} << offset, ip, false, true};
}

void IpcpPrefetcher::observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) {
  track_region(page_of_block(access.block), page_offset_of_block(access.block), access.ip);

  IpEntry& e = ips_[mix_hash(access.ip) % kIpEntries];
  if (!e.valid || e.ip_tag != access.ip) {
    e = IpEntry{};
    e.ip_tag = access.ip;
    e.last_block = access.block;
    e.valid = true;
    return;
  }

  int64_t delta64 = static_cast<int64_t>(access.block) - static_cast<int64_t>(e.last_block);
  e.last_block = access.block;
  if (delta64 == 0) return;
  int32_t delta = static_cast<int32_t>(std::clamp<int64_t>(delta64, -4096, 4096));

  if (e.cls == IpClass::global_stream) {
    for (uint32_t i = 1; i <= kStreamDegree; ++i)
      emit(candidates, access.block, static_cast<int64_t>(access.block) + i);
    return;
  }

  // Learn the complex predictor alongside the stride automaton so a demoted
  // IP already has delta history.
  ComplexEntry& learn = complex_[e.delta_signature % kComplexEntries];
  if (learn.valid && learn.tag == e.delta_signature && learn.delta == delta) {
    learn.confidence = std::min<uint8_t>(learn.confidence + 1, kConfidenceMax);
  } else if (!learn.valid || learn.confidence == 0) {
    learn = ComplexEntry{e.delta_signature, delta, 1, true};
  } else {
    --learn.confidence;
  }
  e.delta_signature =
      static_cast<uint16_t>(((e.delta_signature << 2) ^ signed_delta_code(delta)) & 0xFFF);

  if (!e.has_stride) {
    e.stride = delta64;
    e.has_stride = true;
    e.confidence = 1;
    return;
  }

  if (delta64 == e.stride) {
    e.confidence = std::min<uint8_t>(e.confidence + 1, kConfidenceMax);
    if (e.confidence >= 2) {
      e.cls = IpClass::constant;
      for (uint32_t i = 1; i <= kConstantDegree; ++i)
        emit(candidates, access.block, static_cast<int64_t>(access.block) + e.stride * i);
    }
    return;
  }

  // Mismatch: a confident constant IP tolerates one glitch before demotion.
  if (e.confidence > 0) {
    --e.confidence;
    if (e.confidence == 0) e.stride = delta64;
    return;
  }
  // Repeated stride failure: the delta-signature predictor takes over.
  e.stride = delta64;
  e.cls = IpClass::complex;
  const ComplexEntry& predict = complex_[e.delta_signature % kComplexEntries];
  if (predict.valid && predict.tag == e.delta_signature && predict.confidence >= 2)
    emit(candidates, access.block, static_cast<int64_t>(access.block) + predict.delta);
}

BertiPrefetcher::PageEntry* BertiPrefetcher::find(uint64_t page) {
  for (auto& p : pages_) {
    if (p.valid && p.page == page) {
      p.lru = ++lru_clock_;
      return &p;
    }
  }
  return nullptr;
}

BertiPrefetcher::PageEntry& BertiPrefetcher::insert(uint64_t page) {
  PageEntry* victim = &pages_[0];
  for (auto& p : pages_) {
    if (!p.valid) {
      victim = &p;
      break;
    }
    if (p.lru < victim->lru) victim = &p;
  }
  *victim = PageEntry{};
  victim->page = page;
  victim->valid = true;
  victim->lru = ++lru_clock_;
  return *victim;
}

int32_t BertiPrefetcher::active_delta_for_page(uint64_t page) const {
  for (const auto& p : pages_)
    if (p.valid && p.page == page) return p.active_delta;
  return 0;
}

uint32_t BertiPrefetcher::timely_count(uint64_t page, int32_t delta) const {
  for (const auto& p : pages_) {
    if (!p.valid || p.page != page) continue;
    auto it = p.timely.find(delta);
    return it == p.timely.end() ? 0 : it->second;
  }
  return 0;
}

uint32_t BertiPrefetcher::fills_scored(uint64_t page) const {
  for (const auto& p : pages_)
    if (p.valid && p.page == page) return p.fills_scored;
  return 0;
}

void BertiPrefetcher::observe(const PrefetchAccess& access, std::vector<uint64_t>& candidates) {
  uint64_t page = page_of_block(access.block);
  uint32_t offset = page_offset_of_block(access.block);

  PageEntry* p = find(page);
  if (!p) {
    PageEntry& fresh = insert(page);
    fresh.history.emplace_back(static_cast<uint8_t>(offset), access.cycle);
    // Burst mode: cover the cold page from the first access up to the delta.
    if (global_delta_ > 0) {
      for (int32_t d = 1; d <= global_delta_; ++d) {
        uint32_t target_offset = offset + static_cast<uint32_t>(d);
        if (target_offset >= kBlocksPerPage) break;
        emit(candidates, access.block, static_cast<int64_t>(page * kBlocksPerPage + target_offset));
      }
    }
    return;
  }

  if (p->active_delta != 0) {
    int32_t landing = static_cast<int32_t>(offset) + p->active_delta;
    if (landing >= 0 && landing < static_cast<int32_t>(kBlocksPerPage))
      emit(candidates, access.block, static_cast<int64_t>(page * kBlocksPerPage + landing));
  }

  p->history.emplace_back(static_cast<uint8_t>(offset), access.cycle);
  if (p->history.size() > kHistoryPerPage) p->history.erase(p->history.begin());
}

void BertiPrefetcher::demand_fill(uint64_t block, uint64_t request_cycle, uint64_t completion_cycle) {
  uint64_t page = page_of_block(block);
  uint32_t offset = page_offset_of_block(block);
  PageEntry* p = find(page);
  if (!p) return;

  p->fill_latency = completion_cycle - request_cycle;

  // Score deltas from earlier accesses of the page: a delta is timely if a
  // prefetch launched at that earlier access would have completed before this
  // demand was even requested.
  bool has_peer = false;
  std::vector<int32_t> scored;
  for (const auto& [hist_offset, hist_cycle] : p->history) {
    if (hist_offset == offset || hist_cycle > request_cycle) continue;
    has_peer = true;
    int32_t delta = static_cast<int32_t>(offset) - static_cast<int32_t>(hist_offset);
    if (hist_cycle + p->fill_latency > request_cycle) continue; // would arrive late
    if (std::find(scored.begin(), scored.end(), delta) != scored.end()) continue;
    scored.push_back(delta);
    ++p->timely[delta];
  }
  if (!has_peer) return;
  ++p->fills_scored;
  // Age the scoreboard so counts never outgrow the history window.
  if (p->fills_scored >= kHistoryPerPage) {
    p->fills_scored /= 2;
    for (auto& [delta, count] : p->timely) count /= 2;
  }

  int32_t best_delta = 0;
  uint32_t best_count = 0;
  for (const auto& [delta, count] : p->timely) {
    if (count > best_count || (count == best_count && best_delta != 0 && delta < best_delta)) {
      best_delta = delta;
      best_count = count;
    }
  }
  if (best_count > 0 &&
      static_cast<double>(best_count) / static_cast<double>(p->fills_scored) >= kCoverageThreshold) {
    p->active_delta = best_delta;
    if (best_delta > 0) global_delta_ = best_delta;
  }
}

std::unique_ptr<Prefetcher> make_prefetcher(const std::string& prefetcher_name) {
  if (prefetcher_name == "none" || prefetcher_name.empty()) return nullptr;
  if (prefetcher_name == "next_line") return std::make_unique<NextLinePrefetcher>();
  if (prefetcher_name == "ip_stride") return std::make_unique<IpStridePrefetcher>();
  if (prefetcher_name == "spp") return std::make_unique<SppPrefetcher>();
  if (prefetcher_name == "bingo") return std::make_unique<BingoPrefetcher>();
  if (prefetcher_name == "ipcp") return std::make_unique<IpcpPrefetcher>();
  if (prefetcher_name == "berti") return std::make_unique<BertiPrefetcher>();
  throw ConfigError("unknown prefetcher: " + prefetcher_name);
}

} // namespace memsim
