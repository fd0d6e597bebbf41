//===- test_regions.cc - subgraphs, replication, tail duplication, peel -----===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "helpers.hpp"
#include "wgkit/exec.hpp"
#include "wgkit/kernelgen.hpp"
#include "wgkit/regions.hpp"

#include <random>

using namespace wgkit;

TEST_CASE("create_subgraph basics") {
  auto k = parse_kernel(R"(
kernel @k(value bool %c) dims 1 {
a:
  br b
b:
  br %c c d
c:
  br e
d:
  br e
e:
  ret
}
)");
  BlockId a = k.find_block("a"), b = k.find_block("b"), c = k.find_block("c"),
          d = k.find_block("d"), e = k.find_block("e");
  CHECK(create_subgraph(k, a, a) == std::set<BlockId>{a});
  CHECK(create_subgraph(k, a, b) == std::set<BlockId>{a, b});
  CHECK(create_subgraph(k, b, e) == std::set<BlockId>{b, c, d, e});
  CHECK(create_subgraph(k, a, e) == std::set<BlockId>{a, b, c, d, e});
  CHECK(create_subgraph(k, c, e) == std::set<BlockId>{c, e});
  CHECK_THROWS_AS(create_subgraph(k, c, d), ValidationError);
}

TEST_CASE("create_subgraph matches reachability oracle on random CFGs") {
  std::mt19937 rng(99);
  int checked = 0;
  for (int iter = 0; iter < 150; ++iter) {
    int n = std::uniform_int_distribution<int>(3, 12)(rng);
    auto k = testutil::random_cfg(rng, n);
    auto reach = reachable_from_entry(k);
    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      if (!reach[b])
        continue;
      auto sub = create_subgraph(k, k.entry, b);
      // independent check: forward reach (BFS) and backward ability to reach b
      for (BlockId x = 0; x < k.blocks.size(); ++x) {
        bool fwd = !testutil::all_simple_paths(k, k.entry, x).empty();
        bool bwd = fwd && !testutil::all_simple_paths(k, x, b).empty();
        INFO("iter ", iter, " target ", b, " block ", x);
        // reachable-from-entry and reaches-b iff in the subgraph; simple-path
        // existence equals reachability
        CHECK(sub.count(x) == (fwd && bwd));
        ++checked;
      }
    }
  }
  CHECK(checked > 2000);
}

TEST_CASE("replicate_cfg copies a straight-line block") {
  auto k = parse_kernel(R"(
kernel @k(global i32 %p) dims 1 {
entry:
  %z = const i32 0
  %v = load global %p [%z]
  br next
next:
  %one = const i32 1
  %w = add %v %one
  store global %w %p [%z]
  ret
}
)");
  size_t before = k.num_live_blocks();
  BlockId next = k.find_block("next");
  auto m = replicate_cfg(k, {next});
  CHECK(k.num_live_blocks() == before + 1);
  BlockId copy = m.block_map.at(next);
  CHECK(k.block(copy).body.size() == k.block(next).body.size());
  // identical body under renaming
  CHECK(k.block(copy).body[1].op == Opcode::Add);
  CHECK(k.block(copy).body[1].operands[0] == k.find_value("v"));
  CHECK(k.block(copy).term.kind == Terminator::Kind::Ret);
}

TEST_CASE("replicate_cfg keeps external edges and stays SSA-valid") {
  auto k = parse_kernel(R"(
kernel @k(value bool %c, value i32 %a) dims 1 {
entry:
  br %c b x
b:
  %t = add %a %a
  br d
d:
  %u = add %t %a
  br exit
x:
  br exit
exit:
  ret
}
)");
  BlockId b = k.find_block("b"), d = k.find_block("d");
  auto m = replicate_cfg(k, {b, d});
  // copies wired B'->D', D'->exit
  BlockId b2 = m.block_map.at(b), d2 = m.block_map.at(d);
  CHECK(k.block(b2).term.succ[0] == d2);
  CHECK(k.block(d2).term.succ[0] == k.find_block("exit"));
  // copies are unreachable until retargeted; make them reachable and validate
  k.block(k.entry).term.succ[1] = b2;
  validate(k);
  auto k2 = parse_kernel(print_kernel(k));
  validate(k2);
}

namespace {

int count_regions(const char *src) {
  auto k = canonicalize_barriers(
      normalize_single_exit(parse_kernel(src)));
  auto rs = form_parallel_regions(tail_duplicate(k));
  return int(rs.regions.size());
}

} // namespace

TEST_CASE("region counts for the basic shapes") {
  // no barriers: one region spanning the whole kernel
  CHECK(count_regions(R"(
kernel @a(global i32 %p) dims 1 {
entry:
  %lid = get_local_id 0
  store global %lid %p [%lid]
  ret
}
)") == 1);

  // one unconditional barrier: two regions
  CHECK(count_regions(R"(
kernel @b(global i32 %p) dims 1 {
entry:
  %lid = get_local_id 0
  store global %lid %p [%lid]
  barrier
  %v = load global %p [%lid]
  store global %v %p [%lid]
  ret
}
)") == 2);

  // a barrier-free inner loop stays inside one region
  CHECK(count_regions(R"(
kernel @c(global i32 %p, value i32 %n) dims 1 {
entry:
  %zero = const i32 0
  br head
head:
  %i = phi i32 [entry %zero] [body %i1]
  %c = cmp.lt %i %n
  br %c body exit
body:
  %one = const i32 1
  %i1 = add %i %one
  br head
exit:
  ret
}
)") == 1);
}

TEST_CASE("region formation includes loop bodies") {
  auto k = canonicalize_barriers(parse_kernel(R"(
kernel @c(global i32 %p, value i32 %n) dims 1 {
entry:
  %zero = const i32 0
  br head
head:
  %i = phi i32 [entry %zero] [body %i1]
  %c = cmp.lt %i %n
  br %c body exit
body:
  %one = const i32 1
  %i1 = add %i %one
  br head
exit:
  ret
}
)"));
  auto rs = form_parallel_regions(k);
  REQUIRE(rs.regions.size() == 1);
  const auto &r = rs.regions[0];
  // the loop body belongs to the region; the bare ret block is the exit anchor
  for (const char *name : {"entry", "head", "body"}) {
    BlockId b = k.find_block(name);
    INFO(name);
    CHECK(std::find(r.blocks.begin(), r.blocks.end(), b) != r.blocks.end());
  }
  CHECK(r.exit == k.find_block("exit"));
}

TEST_CASE("form_parallel_regions rejects unprocessed conditional barriers") {
  const char *src = R"(
kernel @cond(global i32 %p, value i32 %mode) dims 1 {
entry:
  %zero = const i32 0
  %take = cmp.gt %mode %zero
  br %take yes no
yes:
  barrier
  br join
no:
  br join
join:
  ret
}
)";
  auto k = canonicalize_barriers(parse_kernel(src));
  CHECK_THROWS_WITH_AS(form_parallel_regions(k),
                       doctest::Contains("tail duplication"), ValidationError);
  // after tail duplication it forms fine
  auto kd = tail_duplicate(k);
  auto rs = form_parallel_regions(kd);
  CHECK(rs.regions.size() >= 2);
}

TEST_CASE("tail duplication: unconditional-only kernels are unchanged") {
  const char *src = R"(
kernel @u(global i32 %p) dims 1 {
entry:
  %lid = get_local_id 0
  store global %lid %p [%lid]
  barrier
  %v = load global %p [%lid]
  store global %v %p [%lid]
  ret
}
)";
  auto k = canonicalize_barriers(parse_kernel(src));
  auto kd = tail_duplicate(k);
  CHECK(kd.num_live_blocks() == k.num_live_blocks());
}

TEST_CASE("tail duplication removes multi-predecessor barriers") {
  std::mt19937 rng(2024);
  int with_cond = 0;
  for (uint64_t seed = 1; seed <= 60; ++seed) {
    GenConfig cfg;
    cfg.barriers = 1 + int(seed % 3);
    cfg.cond_barrier_prob = 1.0;
    auto k = generate_random_kernel(seed, cfg);
    auto kc = canonicalize_barriers(normalize_single_exit(k));
    if (!has_conditional_barrier(kc))
      continue;
    ++with_cond;

    // Proposition 1 forward: some node has more than one immediate
    // predecessor barrier before the transformation.
    auto before = build_barrier_cfg(kc);
    CHECK(before.has_multi_predecessor_node());

    auto kd = tail_duplicate(kc);
    auto after = build_barrier_cfg(kd);
    for (size_t n = 0; n < after.nodes.size(); ++n) {
      INFO("seed ", seed, " node ", n);
      CHECK(after.preds[n].size() <= 1);
    }

    // growth bound: 2^(#conditional barriers) x original block count
    auto dom = compute_dominators(kc);
    int cond = 0;
    for (auto &[b, cls] : classify_barriers(kc, dom))
      if (cls == BarrierClass::Conditional)
        ++cond;
    CHECK(kd.num_live_blocks() <=
          (size_t(1) << std::min(cond, 20)) * kc.num_live_blocks());

    // behavior preserved
    for (int lx : {1, 2, 4, 7}) {
      Launch launch = make_launch(k, {lx, 1, 1}, {2, 1, 1}, seed);
      MemoryImage img = make_image(k, launch, seed);
      auto r1 = run_oracle(kc, launch, img);
      auto r2 = run_oracle(kd, launch, img);
      CHECK(r1.mem.bit_equal(r2.mem));
    }
  }
  CHECK(with_cond >= 30);
}

TEST_CASE("peeling is the identity without cross-region branches") {
  const char *src = R"(
kernel @u(global i32 %p) dims 1 {
entry:
  %lid = get_local_id 0
  store global %lid %p [%lid]
  barrier
  %v = load global %p [%lid]
  store global %v %p [%lid]
  ret
}
)";
  auto k = canonicalize_barriers(parse_kernel(src));
  auto rs = form_parallel_regions(k);
  auto kp = peel_first_iteration(k, rs);
  CHECK(structurally_equal(k, kp));
}

TEST_CASE("peeling produces reducible region bodies") {
  const char *src = R"(
kernel @cond(global i32 %p, value i32 %mode) dims 1 {
entry:
  %lid = get_local_id 0
  %gid = get_global_id 0
  %zero = const i32 0
  store global %lid %p [%gid]
  %take = cmp.gt %mode %zero
  br %take yes no
yes:
  barrier
  br join
no:
  barrier
  br join
join:
  %v = load global %p [%gid]
  %one = const i32 1
  %w = add %v %one
  store global %w %p [%gid]
  ret
}
)";
  auto k = tail_duplicate(canonicalize_barriers(parse_kernel(src)));
  auto rs = form_parallel_regions(k);
  auto kp = peel_first_iteration(k, rs);
  validate(kp);
  CHECK(is_reducible(kp));
  // re-formation after peeling: the shared selector feeds no value outward,
  // so peeling again changes nothing
  auto rs2 = form_parallel_regions(kp);
  auto kp2 = peel_first_iteration(kp, rs2);
  CHECK(structurally_equal(kp, kp2));
}
