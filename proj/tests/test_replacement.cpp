#include <doctest.h>

#include <list>
#include <random>

#include "helpers.hpp"
#include "memsim/cache.hpp"
#include "memsim/errors.hpp"
#include "memsim/replacement.hpp"

using namespace memsim;

TEST_CASE("lru evicts the least recently touched way") {
  LruPolicy lru(1, 2);
  lru.on_fill(0, 0, {});
  lru.on_fill(0, 1, {});
  CHECK(lru.select_victim(0) == 0);
  lru.on_hit(0, 0);
  CHECK(lru.select_victim(0) == 1);
}

TEST_CASE("lru hit leaves the way with the maximum stamp") {
  LruPolicy lru(1, 4);
  for (uint32_t w = 0; w < 4; ++w) lru.on_fill(0, w, {});
  lru.on_hit(0, 1);
  for (uint32_t w = 0; w < 4; ++w)
    if (w != 1) CHECK(lru.stamp(0, 1) > lru.stamp(0, w));
}

TEST_CASE("nru with no distant way ages the set and evicts way 0") {
  NruPolicy nru(1, 4);
  for (uint32_t w = 0; w < 4; ++w) nru.on_fill(0, w, {}); // all near
  CHECK(nru.select_victim(0) == 0);
  // After the search at least one way must be marked distant.
  bool any_distant = false;
  for (uint32_t w = 0; w < 4; ++w) any_distant = any_distant || nru.distant(0, w);
  CHECK(any_distant);
}

TEST_CASE("srrip automaton steps as expected") {
  SrripPolicy srrip(1, 4);
  FillContext ctx{};
  for (uint32_t w = 0; w < 4; ++w) {
    srrip.on_fill(0, w, ctx);
    CHECK(srrip.rrpv(0, w) == kRrpvLong);
  }
  srrip.on_hit(0, 0);
  CHECK(srrip.rrpv(0, 0) == 0);

  // One aging round: way0 1, others 3; leftmost distant is way 1.
  CHECK(srrip.select_victim(0) == 1);
  CHECK(srrip.rrpv(0, 0) == 1);
  CHECK(srrip.rrpv(0, 1) == 3);
  CHECK(srrip.rrpv(0, 2) == 3);
  CHECK(srrip.rrpv(0, 3) == 3);
}

TEST_CASE("srrip victim search terminates from the youngest state") {
  SrripPolicy srrip(1, 4);
  for (uint32_t w = 0; w < 4; ++w) {
    srrip.on_fill(0, w, {});
    srrip.on_hit(0, w); // all rrpv 0: worst case, three aging rounds
  }
  CHECK(srrip.select_victim(0) == 0);
  for (uint32_t w = 0; w < 4; ++w) CHECK(srrip.rrpv(0, w) == 3);
}

TEST_CASE("drrip leader mapping matches the stock geometry") {
  DrripPolicy drrip(4096, 16);
  uint32_t srrip_leaders = 0, brrip_leaders = 0;
  for (uint32_t set = 0; set < 4096; ++set) {
    switch (drrip.set_role(set)) {
    case DrripPolicy::SetRole::srrip_leader:
      ++srrip_leaders;
      CHECK(set % 128 == 0);
      break;
    case DrripPolicy::SetRole::brrip_leader:
      ++brrip_leaders;
      CHECK(set % 128 == 64);
      break;
    default: break;
    }
  }
  CHECK(srrip_leaders == 32);
  CHECK(brrip_leaders == 32);
}

TEST_CASE("drrip bimodal leader inserts distant except every 32nd fill") {
  DrripPolicy drrip(8, 4); // leader period 4: sets 0 and 2 are the dueling leaders
  REQUIRE(drrip.set_role(2) == DrripPolicy::SetRole::brrip_leader);
  for (int fill = 1; fill <= 64; ++fill) {
    drrip.on_fill(2, 0, {});
    if (fill % 32 == 0)
      CHECK(drrip.rrpv(2, 0) == kRrpvLong);
    else
      CHECK(drrip.rrpv(2, 0) == kRrpvMax);
  }
}

TEST_CASE("drrip psel trains toward the bimodal side on static-leader misses") {
  DrripPolicy drrip(8, 4);
  REQUIRE(drrip.set_role(0) == DrripPolicy::SetRole::srrip_leader);
  CHECK(!drrip.followers_use_brrip());
  for (int i = 0; i < 600; ++i) drrip.on_fill(0, static_cast<uint32_t>(i % 4), {});
  CHECK(drrip.psel() >= DrripPolicy::kPselThreshold);
  CHECK(drrip.followers_use_brrip());
  // Follower insertion now follows the bimodal pattern.
  REQUIRE(drrip.set_role(3) == DrripPolicy::SetRole::follower);
  drrip.on_fill(3, 0, {});
  CHECK(drrip.rrpv(3, 0) == kRrpvMax);
}

TEST_CASE("ship hit strengthens the signature counter") {
  ShipPolicy ship(1, 4);
  uint64_t ip = 0xabcd00;
  uint32_t sig = ShipPolicy::signature_for_ip(ip);
  CHECK(ship.shct_value(sig) == ShipPolicy::kShctInit);
  ship.on_fill(0, 0, {ip, 0});
  ship.on_hit(0, 0);
  CHECK(ship.shct_value(sig) == ShipPolicy::kShctInit + 1);
}

TEST_CASE("ship demotes dead signatures and inserts them distant") {
  ShipPolicy ship(1, 4);
  uint64_t ip = 0x1234560;
  uint32_t sig = ShipPolicy::signature_for_ip(ip);
  REQUIRE(ship.shct_value(sig) == 1);

  // Fill, then replace without any re-reference: counter drains to 0.
  ship.on_fill(0, 0, {ip, 0});
  CHECK(ship.rrpv(0, 0) == kRrpvLong);
  ship.on_fill(0, 0, {ip, 0}); // replaces the tracked block, outcome never set
  CHECK(ship.shct_value(sig) == 0);

  ship.on_fill(0, 1, {ip, 0}); // untrained-signature insertion is distant
  CHECK(ship.rrpv(0, 1) == kRrpvMax);
}

TEST_CASE("ship signatures that never see reuse converge to distant insertion") {
  ShipPolicy ship(4, 2);
  uint64_t ip = 0x777000;
  uint32_t sig = ShipPolicy::signature_for_ip(ip);
  for (int i = 0; i < 10; ++i) ship.on_fill(static_cast<uint32_t>(i % 4), i % 2 == 0 ? 0u : 1u, {ip, 0});
  CHECK(ship.shct_value(sig) == 0);
  ship.on_fill(0, 0, {ip, 0});
  CHECK(ship.rrpv(0, 0) == kRrpvMax);
}

TEST_CASE("policy factory knows every name") {
  for (const char* name : {"lru", "nru", "srrip", "drrip", "ship"}) {
    auto policy = make_replacement_policy(name, 8, 4);
    CHECK(std::string(policy->name()) == name);
  }
  CHECK_THROWS_AS(make_replacement_policy("belady", 8, 4), ConfigError);
}

namespace {

// List-based reference model: one MRU-ordered list per set.
class ListLru {
public:
  ListLru(uint32_t sets, uint32_t ways) : ways_(ways), sets_(sets) {}
  bool access(uint64_t block) {
    auto& order = order_[block % sets_];
    for (auto it = order.begin(); it != order.end(); ++it) {
      if (*it == block) {
        order.erase(it);
        order.push_front(block);
        return true;
      }
    }
    order.push_front(block);
    if (order.size() > ways_) order.pop_back();
    return false;
  }

private:
  uint32_t ways_;
  uint32_t sets_;
  std::unordered_map<uint64_t, std::list<uint64_t>> order_;
};

} // namespace

TEST_CASE("cache-level lru matches the list oracle on random streams") {
  std::mt19937_64 rng(17);
  CacheLevel level(testutil::small_config("lru"), 50);
  ListLru oracle(8, 4);

  uint64_t cycle = 0;
  for (int i = 0; i < 10000; ++i) {
    uint64_t block = rng() % 64; // 64 blocks over 8 sets stresses evictions
    cycle += 1000;               // let every fill land before the next access
    AccessResult result = level.access({block << 6, 0x1000, cycle, false, false});
    bool oracle_hit = oracle.access(block);
    CHECK(result.outcome == (oracle_hit ? AccessOutcome::hit : AccessOutcome::miss));
  }
}

TEST_CASE("thrash pattern: lru starves while bimodal insertion retains blocks") {
  // Cyclic pattern of 2x-associativity distinct blocks in one set.
  const uint32_t ways = 4;
  const uint32_t blocks = 2 * ways;
  const int rounds = 200;

  auto run = [&](const std::string& policy, uint32_t set) {
    CacheLevel level(testutil::small_config(policy), 50);
    uint64_t cycle = 0;
    uint64_t warm_hits = 0;
    for (int r = 0; r < rounds; ++r) {
      for (uint32_t b = 0; b < blocks; ++b) {
        cycle += 1000;
        level.access({testutil::block_in_set(set, 8, b), 0x2000, cycle, false, false});
      }
      if (r == rounds / 2) warm_hits = level.stats().hits;
    }
    return level.stats().hits - warm_hits;
  };

  CHECK(run("lru", 2) == 0);
  CHECK(run("drrip", 2) > 0); // set 2 is a bimodal leader at this geometry
}
