//===- test_bufalloc.cc - allocator laws ------------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "wgkit/bufalloc.hpp"

#include <map>
#include <random>
#include <vector>

using namespace wgkit::bufalloc;

namespace {

// Naive reference: a flat byte map scanned from address zero.
struct NaiveAlloc {
  uint64_t size, align;
  std::vector<bool> used;
  std::map<uint64_t, uint64_t> live; // offset -> aligned size

  NaiveAlloc(uint64_t s, uint64_t a) : size(s), align(a), used(s, false) {}

  uint64_t round(uint64_t n) const { return (n + align - 1) / align * align; }

  bool fits(uint64_t off, uint64_t want) const {
    if (off + want > size)
      return false;
    for (uint64_t i = off; i < off + want; ++i)
      if (used[i])
        return false;
    return true;
  }

  // first fit over aligned offsets
  std::optional<uint64_t> alloc(uint64_t n) {
    uint64_t want = round(n);
    for (uint64_t off = 0; off + want <= size; off += align) {
      // candidate offsets are aligned boundaries of free runs
      if (fits(off, want)) {
        // must also be the *lowest* free location: scan strictly
        for (uint64_t i = off; i < off + want; ++i)
          used[i] = true;
        live[off] = want;
        return off;
      }
    }
    return std::nullopt;
  }

  void free(uint64_t off) {
    auto it = live.find(off);
    REQUIRE(it != live.end());
    for (uint64_t i = off; i < off + it->second; ++i)
      used[i] = false;
    live.erase(it);
  }
};

} // namespace

TEST_CASE("fresh region allocates from offset zero with alignment") {
  Region r(1024);
  CHECK(r.dump() == "[0 1024 F]");
  CHECK(r.alloc(100) == 0);
  CHECK(r.dump() == "[0 112 A] [112 912 F]"); // 100 rounds to 112
  CHECK(r.alloc(200) == 112);                 // contiguous successor
  r.check_invariants();
}

TEST_CASE("first fit reuses the earliest hole") {
  Region r(1024);
  uint64_t a = r.alloc(100);
  r.alloc(200);
  r.free(a);
  CHECK(r.alloc(50) == 0); // the hole, not the tail
  r.check_invariants();
}

TEST_CASE("greedy mode is contiguous and falls back to holes") {
  Region r(1024);
  CHECK(r.alloc_greedy(100) == 0);
  CHECK(r.alloc_greedy(100) == 112);
  CHECK(r.alloc_greedy(100) == 224);
  r.check_invariants();

  // carve a big hole at 0, shrink the sentinel, then greedy must fall back
  Region r2(1024);
  uint64_t h = r2.alloc(500);
  r2.alloc(400); // sentinel now 1024-512-400 = 112
  r2.free(h);
  CHECK(r2.alloc_greedy(200) == 0); // does not fit the 112-byte sentinel
  r2.check_invariants();
}

TEST_CASE("sentinel exhaustion removes the tail chunk") {
  Region r(256);
  r.alloc(128);
  uint64_t b = r.alloc_greedy(128); // exactly consumes the sentinel
  CHECK(b == 128);
  r.check_invariants();
  CHECK(r.chunks().size() == 2);
  CHECK(r.chunks().back().allocated);
  CHECK_THROWS_AS(r.alloc_greedy(16), OutOfMemory);
  r.free(b);
  CHECK(r.alloc_greedy(16) == 128); // tail space exists again
}

TEST_CASE("free errors") {
  Region r(256);
  uint64_t a = r.alloc(16);
  r.free(a);
  CHECK_THROWS_AS(r.free(a), BadFree);   // double free
  CHECK_THROWS_AS(r.free(999), BadFree); // unknown offset
  CHECK(r.dump() == "[0 256 F]");        // back to one span
}

TEST_CASE("free middle then refit lands on the same offset") {
  Region r(1024);
  r.alloc(64);
  uint64_t b = r.alloc(64);
  r.alloc(64);
  r.free(b);
  CHECK(r.alloc(64) == b);
}

TEST_CASE("tiny region: accepted, but aligned requests may never fit") {
  Region r(1, 16);
  CHECK_THROWS_AS(r.alloc(1), OutOfMemory); // 1 rounds to 16 > region
  r.check_invariants();
}

TEST_CASE("bookkeeping works for huge regions with no backing memory") {
  Region r(uint64_t(1) << 31);
  uint64_t a = r.alloc(uint64_t(1) << 30);
  CHECK(a == 0);
  CHECK(r.alloc(uint64_t(1) << 30) == (uint64_t(1) << 30));
  r.check_invariants();
}

TEST_CASE("zero-size allocation is rejected") {
  Region r(256);
  CHECK_THROWS(r.alloc(0));
  CHECK_THROWS(r.alloc_greedy(0));
}

TEST_CASE("first-fit law and tiling hold against the naive oracle") {
  std::mt19937_64 rng(4242);
  for (int round = 0; round < 200; ++round) {
    uint64_t size = 1 << (8 + int(rng() % 5));
    Region r(size);
    NaiveAlloc ref(size, 16);
    std::vector<uint64_t> live;
    for (int op = 0; op < 50; ++op) {
      r.check_invariants();
      bool do_free = !live.empty() && (rng() % 3 == 0);
      if (do_free) {
        size_t i = rng() % live.size();
        r.free(live[i]);
        ref.free(live[i]);
        live.erase(live.begin() + long(i));
      } else {
        uint64_t n = 1 + rng() % (size / 4);
        std::optional<uint64_t> expect = ref.alloc(n);
        if (!expect) {
          CHECK_THROWS_AS(r.alloc(n), OutOfMemory);
        } else {
          uint64_t got = r.alloc(n);
          INFO("round ", round, " op ", op);
          CHECK(got == *expect);
          live.push_back(got);
        }
      }
    }
  }
}

TEST_CASE("greedy reduces fragmentation on a group workload") {
  // groups of buffers allocated together and freed together
  auto run = [&](bool greedy) {
    std::mt19937_64 rng(7);
    Region r(1 << 16);
    std::vector<std::vector<uint64_t>> groups;
    size_t max_free_chunks = 0;
    for (int step = 0; step < 200; ++step) {
      if (groups.size() >= 4 || (rng() % 3 == 0 && !groups.empty())) {
        size_t i = rng() % groups.size();
        for (uint64_t off : groups[i])
          r.free(off);
        groups.erase(groups.begin() + long(i));
      } else {
        std::vector<uint64_t> g;
        int n = 2 + int(rng() % 4);
        for (int j = 0; j < n; ++j) {
          uint64_t sz = 64 + rng() % 2048;
          try {
            g.push_back(greedy ? r.alloc_greedy(sz) : r.alloc(sz));
          } catch (const OutOfMemory &) {
            break;
          }
        }
        groups.push_back(std::move(g));
      }
      size_t free_chunks = 0;
      for (const Chunk &c : r.chunks())
        if (!c.allocated)
          ++free_chunks;
      max_free_chunks = std::max(max_free_chunks, free_chunks);
    }
    return max_free_chunks;
  };
  CHECK(run(true) <= run(false));
}
