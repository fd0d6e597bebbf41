//===- test_exec.cc - oracle and compiled-engine behavior -------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "helpers.hpp"
#include "wgkit/barriers.hpp"
#include "wgkit/exec.hpp"

using namespace wgkit;

namespace {

MemoryImage dot_image(int n) {
  MemoryImage m;
  m.add_buffer("a", ScalarKind::F32, 4 * n);
  m.add_buffer("b", ScalarKind::F32, 4 * n);
  m.add_buffer("c", ScalarKind::F32, n);
  for (int i = 0; i < 4 * n; ++i) {
    m["a"].set(i, Scalar::make_f32(0.5f * float(i) - 3.0f));
    m["b"].set(i, Scalar::make_f32(0.25f * float(i % 7) + 1.0f));
  }
  return m;
}

} // namespace

TEST_CASE("oracle computes the dot product for all work-items") {
  auto k = parse_kernel(testutil::kDotProduct);
  Launch launch;
  launch.local = {4, 1, 1};
  launch.num_groups = {2, 1, 1};
  auto img = dot_image(8);
  auto res = run_oracle(k, launch, img);
  for (int g = 0; g < 8; ++g) {
    float expect = 0;
    for (int l = 0; l < 4; ++l) {
      // same association order as the kernel: ((m0+m1)+m2)+m3
      if (l == 0)
        expect = img["a"].get(4 * g).as_f32() * img["b"].get(4 * g).as_f32();
      else
        expect += img["a"].get(4 * g + l).as_f32() * img["b"].get(4 * g + l).as_f32();
    }
    CHECK(res.mem["c"].get(g).as_f32() == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("empty kernel leaves memory unchanged") {
  auto k = parse_kernel("kernel @k(global i32 %p) dims 1 { entry: ret }");
  MemoryImage m;
  m.add_buffer("p", ScalarKind::I32, 4);
  m["p"].set(2, Scalar::make_i32(42));
  Launch launch;
  launch.local = {2, 1, 1};
  auto res = run_oracle(k, launch, m);
  CHECK(res.mem.bit_equal(m));
}

TEST_CASE("divergent barrier raises DivergenceError") {
  // Work-item 0 skips the barrier the others take.
  const char *src = R"(
kernel @k() dims 1 {
entry:
  %lid = get_local_id 0
  %zero = const i32 0
  %is0 = cmp.eq %lid %zero
  br %is0 skip sync
sync:
  barrier
  br done
skip:
  br done
done:
  ret
}
)";
  auto k = parse_kernel(src);
  Launch launch;
  launch.local = {4, 1, 1};
  MemoryImage m;
  CHECK_THROWS_AS(run_oracle(k, launch, m), DivergenceError);
}

TEST_CASE("some work-items returning while others wait is divergence") {
  const char *src = R"(
kernel @k() dims 1 {
entry:
  %lid = get_local_id 0
  %zero = const i32 0
  %is0 = cmp.eq %lid %zero
  br %is0 out sync
sync:
  barrier
  ret
out:
  ret
}
)";
  auto k = parse_kernel(src);
  Launch launch;
  launch.local = {2, 1, 1};
  MemoryImage m;
  CHECK_THROWS_AS(run_oracle(k, launch, m), DivergenceError);
}

TEST_CASE("barrier communication through local memory") {
  // Work-items write their id, sync, then read their neighbor's slot.
  const char *src = R"(
kernel @k(local i32 %buf, global i32 %out) dims 1 {
entry:
  %lid = get_local_id 0
  %gid = get_global_id 0
  store local %lid %buf [%lid]
  barrier
  %n = get_local_size 0
  %one = const i32 1
  %n1 = sub %n %one
  %rev = sub %n1 %lid
  %v = load local %buf [%rev]
  store global %v %out [%gid]
  ret
}
)";
  auto k = parse_kernel(src);
  Launch launch;
  launch.local = {4, 1, 1};
  launch.num_groups = {2, 1, 1};
  launch.local_elems["buf"] = 4;
  MemoryImage m;
  m.add_buffer("out", ScalarKind::I32, 8);
  auto res = run_oracle(k, launch, m);
  for (int g = 0; g < 2; ++g)
    for (int l = 0; l < 4; ++l)
      CHECK(res.mem["out"].get(4 * g + l).as_i32() == 3 - l);
}

TEST_CASE("oracle is deterministic and schedule-independent for race-free kernels") {
  auto k = parse_kernel(testutil::kDotProduct);
  Launch launch;
  launch.local = {7, 1, 1};
  launch.num_groups = {1, 1, 1};
  auto img = dot_image(7);
  ExecOptions o1, o2, o3;
  o1.schedule_seed = 0;
  o2.schedule_seed = 12345;
  o3.schedule_seed = 999;
  auto r1 = run_oracle(k, launch, img, o1);
  auto r2 = run_oracle(k, launch, img, o2);
  auto r3 = run_oracle(k, launch, img, o3);
  CHECK(r1.mem.bit_equal(r2.mem));
  CHECK(r1.mem.bit_equal(r3.mem));
  auto r1b = run_oracle(k, launch, img, o1);
  CHECK(r1.mem.bit_equal(r1b.mem));
}

TEST_CASE("out-of-bounds access traps") {
  const char *src = R"(
kernel @k(global i32 %p) dims 1 {
entry:
  %i = const i32 99
  %v = load global %p [%i]
  store global %v %p [%i]
  ret
}
)";
  auto k = parse_kernel(src);
  Launch launch;
  launch.local = {1, 1, 1};
  MemoryImage m;
  m.add_buffer("p", ScalarKind::I32, 4);
  CHECK_THROWS_AS(run_oracle(k, launch, m), TrapError);
}

TEST_CASE("b-loop lock-step violation raises LockStepError") {
  // Each work-item loops lid+1 times with a barrier inside the loop.
  const char *src = R"(
kernel @k() dims 1 {
entry:
  %lid = get_local_id 0
  %one = const i32 1
  %n = add %lid %one
  %zero = const i32 0
  br head
head:
  %i = phi i32 [entry %zero] [body %i1]
  %c = cmp.lt %i %n
  br %c body done
body:
  barrier
  %i1 = add %i %one
  br head
done:
  ret
}
)";
  auto k = parse_kernel(src);
  Launch launch;
  launch.local = {3, 1, 1};
  MemoryImage m;
  // Divergence manifests either as a rendezvous mismatch or a lock-step
  // counter mismatch depending on the trip counts; both reject the kernel.
  CHECK_THROWS(run_oracle(k, launch, m));
}

TEST_CASE("compiled engine rejects residual barriers") {
  auto k = parse_kernel("kernel @k() dims 1 { entry: barrier\nret }");
  Launch launch;
  MemoryImage m;
  CHECK_THROWS_AS(run_compiled(k, launch, m), ExecError);
}

TEST_CASE("compiled engine runs plain single-threaded code") {
  const char *src = R"(
kernel @k(global i32 %out) dims 1 {
entry:
  %g = get_group_id 0
  %n = get_local_size 0
  %v = mul %g %n
  store global %v %out [%g]
  ret
}
)";
  auto k = parse_kernel(src);
  Launch launch;
  launch.local = {4, 1, 1};
  launch.num_groups = {3, 1, 1};
  MemoryImage m;
  m.add_buffer("out", ScalarKind::I32, 3);
  auto res = run_compiled(k, launch, m);
  for (int g = 0; g < 3; ++g)
    CHECK(res.mem["out"].get(g).as_i32() == 4 * g);
}

TEST_CASE("barrier split canonicalization") {
  const char *src = R"(
kernel @k(global i32 %p) dims 1 {
entry:
  %z = const i32 0
  barrier
  %v = load global %p [%z]
  barrier
  store global %v %p [%z]
  ret
}
)";
  auto k = parse_kernel(src);
  auto ks = canonicalize_barriers(k);
  int barrier_blocks = 0;
  for (BlockId b = 0; b < ks.blocks.size(); ++b) {
    if (ks.blocks[b].dead)
      continue;
    if (block_is_barrier(ks, b)) {
      ++barrier_blocks;
      CHECK(ks.block(b).body.size() == 1);
      CHECK(ks.block(b).phis.empty());
    }
  }
  CHECK(barrier_blocks == 2);
  // behavior unchanged
  Launch launch;
  launch.local = {2, 1, 1};
  MemoryImage m;
  m.add_buffer("p", ScalarKind::I32, 1);
  m["p"].set(0, Scalar::make_i32(7));
  auto r1 = run_oracle(k, launch, m);
  auto r2 = run_oracle(ks, launch, m);
  CHECK(r1.mem.bit_equal(r2.mem));
}
