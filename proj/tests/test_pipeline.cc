//===- test_pipeline.cc - end-to-end compile/execute equivalence ------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "helpers.hpp"
#include "wgkit/exec.hpp"
#include "wgkit/pipeline.hpp"

using namespace wgkit;

namespace {

// Compiles and runs both engines; every comparison is bit-exact.
CompileResult check_equivalence(const KernelFunction &k, Launch launch,
                                const MemoryImage &img, bool hparallel = true) {
  auto oracle = run_oracle(k, launch, img);

  PassConfig cfg;
  cfg.local = launch.local;
  cfg.hparallel = hparallel;
  auto res = compile(k, cfg);
  for (auto &[name, count] : res.local_params)
    launch.local_elems[name] = count;
  auto compiled = run_compiled(res.wg.fn, launch, img);

  CHECK(oracle.mem.bit_equal(compiled.mem));
  REQUIRE(oracle.local_states.size() == compiled.local_states.size());
  for (size_t g = 0; g < oracle.local_states.size(); ++g) {
    REQUIRE(oracle.local_states[g].size() == compiled.local_states[g].size());
    for (size_t i = 0; i < oracle.local_states[g].size(); ++i)
      CHECK(oracle.local_states[g][i].data == compiled.local_states[g][i].data);
  }
  return res;
}

const char *kBloop = R"(
kernel @bloop(local i32 %buf, global i32 %out, value i32 %n) dims 1 {
entry:
  %lid = get_local_id 0
  %gid = get_global_id 0
  %zero = const i32 0
  %one = const i32 1
  %ls = get_local_size 0
  br head
head:
  %i = phi i32 [entry %zero] [body %i1]
  %acc = phi i32 [entry %zero] [body %acc1]
  %c = cmp.lt %i %n
  br %c body done
body:
  %t = add %lid %i
  store local %t %buf [%lid]
  barrier
  %n1 = sub %ls %one
  %rev = sub %n1 %lid
  %v = load local %buf [%rev]
  barrier
  %acc1 = add %acc %v
  %i1 = add %i %one
  br head
done:
  store global %acc %out [%gid]
  ret
}
)";

const char *kCondBarrier = R"(
kernel @cond(global i32 %p, value i32 %mode) dims 1 {
entry:
  %lid = get_local_id 0
  %gid = get_global_id 0
  %zero = const i32 0
  %take = cmp.gt %mode %zero
  br %take left right
left:
  %two = const i32 2
  %a = mul %lid %two
  store global %a %p [%gid]
  barrier
  br join
right:
  %three = const i32 3
  %b = add %lid %three
  store global %b %p [%gid]
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

} // namespace

TEST_CASE("barrier-free kernel compiles to one annotated loop nest") {
  auto k = parse_kernel(testutil::kDotProduct);
  Launch launch;
  launch.local = {4, 1, 1};
  launch.num_groups = {2, 1, 1};
  MemoryImage m;
  m.add_buffer("a", ScalarKind::F32, 32);
  m.add_buffer("b", ScalarKind::F32, 32);
  m.add_buffer("c", ScalarKind::F32, 8);
  for (int i = 0; i < 32; ++i) {
    m["a"].set(i, Scalar::make_f32(0.125f * float(i)));
    m["b"].set(i, Scalar::make_f32(1.0f + float(i % 5)));
  }
  auto res = check_equivalence(k, launch, m);
  CHECK(res.regions.regions.size() == 1);
  CHECK(res.wg.wi_loops.size() == 1);
  CHECK(res.wg.context_arrays.empty());
}

TEST_CASE("unconditional barrier yields two work-item loops") {
  const char *src = R"(
kernel @mid(local i32 %buf, global i32 %out) dims 1 {
entry:
  %lid = get_local_id 0
  %gid = get_global_id 0
  store local %lid %buf [%lid]
  barrier
  %ls = get_local_size 0
  %one = const i32 1
  %n1 = sub %ls %one
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
  auto res = check_equivalence(k, launch, m);
  CHECK(res.regions.regions.size() == 2);
  CHECK(res.wg.wi_loops.size() == 2);
}

TEST_CASE("local size one still works") {
  auto k = parse_kernel(testutil::kDotProduct);
  Launch launch;
  launch.local = {1, 1, 1};
  launch.num_groups = {3, 1, 1};
  MemoryImage m;
  m.add_buffer("a", ScalarKind::F32, 12);
  m.add_buffer("b", ScalarKind::F32, 12);
  m.add_buffer("c", ScalarKind::F32, 3);
  for (int i = 0; i < 12; ++i) {
    m["a"].set(i, Scalar::make_f32(float(i)));
    m["b"].set(i, Scalar::make_f32(2.0f));
  }
  check_equivalence(k, launch, m);
}

TEST_CASE("conditional barriers: tail duplication plus peeling") {
  auto k = parse_kernel(kCondBarrier);
  for (int mode : {0, 1}) {
    for (int lx : {1, 2, 4}) {
      Launch launch;
      launch.local = {lx, 1, 1};
      launch.num_groups = {2, 1, 1};
      launch.scalar_binds["mode"] = Scalar::make_i32(mode);
      MemoryImage m;
      m.add_buffer("p", ScalarKind::I32, size_t(2 * lx));
      check_equivalence(k, launch, m);
    }
  }
}

TEST_CASE("barrier inside a kernel loop (b-loop)") {
  auto k = parse_kernel(kBloop);
  for (int n : {0, 1, 3}) {
    for (int lx : {1, 2, 4}) {
      Launch launch;
      launch.local = {lx, 1, 1};
      launch.num_groups = {2, 1, 1};
      launch.scalar_binds["n"] = Scalar::make_i32(n);
      launch.local_elems["buf"] = size_t(lx);
      MemoryImage m;
      m.add_buffer("out", ScalarKind::I32, size_t(2 * lx));
      check_equivalence(k, launch, m);
    }
  }
}

TEST_CASE("automatic local conversion feeds the launcher") {
  const char *src = R"(
kernel @autoloc(global i32 %out) dims 1 {
entry:
  %scratch = alloca_local i32 4
  %lid = get_local_id 0
  %gid = get_global_id 0
  store local %lid %scratch [%lid]
  barrier
  %ls = get_local_size 0
  %one = const i32 1
  %n1 = sub %ls %one
  %rev = sub %n1 %lid
  %v = load local %scratch [%rev]
  store global %v %out [%gid]
  ret
}
)";
  auto k = parse_kernel(src);
  Launch launch;
  launch.local = {4, 1, 1};
  launch.num_groups = {2, 1, 1};
  MemoryImage m;
  m.add_buffer("out", ScalarKind::I32, 8);

  // the oracle also needs the converted kernel (alloca_local doesn't execute)
  auto conv = convert_automatic_locals(k);
  Launch ol = launch;
  for (auto &[name, count] : conv.added_params)
    ol.local_elems[name] = count;
  auto oracle = run_oracle(conv.fn, ol, m);

  PassConfig cfg;
  cfg.local = launch.local;
  auto res = compile(k, cfg);
  REQUIRE(res.local_params.size() == 1);
  CHECK(res.local_params[0].first == "scratch");
  CHECK(res.local_params[0].second == 4);
  Launch cl = launch;
  for (auto &[name, count] : res.local_params)
    cl.local_elems[name] = count;
  auto compiled = run_compiled(res.wg.fn, cl, m);
  CHECK(oracle.mem.bit_equal(compiled.mem));
}

TEST_CASE("private arrays are expanded per work-item") {
  const char *src = R"(
kernel @privarr(global i32 %out) dims 1 {
entry:
  %tmp = alloca_private i32 2
  %lid = get_local_id 0
  %gid = get_global_id 0
  %zero = const i32 0
  %one = const i32 1
  store private %lid %tmp [%zero]
  %l2 = mul %lid %lid
  store private %l2 %tmp [%one]
  barrier
  %a = load private %tmp [%zero]
  %b = load private %tmp [%one]
  %s = add %a %b
  store global %s %out [%gid]
  ret
}
)";
  auto k = parse_kernel(src);
  Launch launch;
  launch.local = {4, 1, 1};
  launch.num_groups = {1, 1, 1};
  MemoryImage m;
  m.add_buffer("out", ScalarKind::I32, 4);
  check_equivalence(k, launch, m);
  for (int i = 0; i < 4; ++i)
    CHECK(m["out"].get(i).as_i32() == 0); // input untouched
}

TEST_CASE("3d local sizes") {
  const char *src = R"(
kernel @threed(global i32 %out) dims 3 {
entry:
  %x = get_local_id 0
  %y = get_local_id 1
  %z = get_local_id 2
  %gx = get_global_id 0
  %ly = get_local_size 1
  %lz = get_local_size 2
  %a = mul %z %ly
  %b = add %a %y
  %lx = get_local_size 0
  %c = mul %b %lx
  %flat = add %c %x
  %gid = get_group_id 0
  %n = mul %lx %ly
  %n2 = mul %n %lz
  %base = mul %gid %n2
  %at = add %base %flat
  store global %flat %out [%at]
  ret
}
)";
  auto k = parse_kernel(src);
  Launch launch;
  launch.local = {2, 3, 2};
  launch.num_groups = {2, 1, 1};
  MemoryImage m;
  m.add_buffer("out", ScalarKind::I32, 24);
  check_equivalence(k, launch, m);
}

TEST_CASE("pipeline dumps re-parse and resume to the same result") {
  auto k = parse_kernel(kCondBarrier);
  PassConfig cfg;
  cfg.local = {4, 1, 1};
  cfg.dump_after = {"all"};
  auto res = compile(k, cfg);
  CHECK(res.dumps.size() == pipeline_stages().size());

  Launch launch;
  launch.local = {4, 1, 1};
  launch.num_groups = {2, 1, 1};
  launch.scalar_binds["mode"] = Scalar::make_i32(1);
  MemoryImage m;
  m.add_buffer("p", ScalarKind::I32, 8);
  auto oracle = run_oracle(k, launch, m);

  auto &stages = pipeline_stages();
  for (size_t i = 0; i + 1 < stages.size(); ++i) {
    // re-parse the dump of stage i and resume from stage i+1
    auto kd = parse_kernel(res.dumps[i].second);
    PassConfig c2;
    c2.local = cfg.local;
    auto r2 = compile_from(stages[i + 1], kd, c2);
    auto compiled = run_compiled(r2.wg.fn, launch, m);
    INFO("resume after ", stages[i]);
    CHECK(oracle.mem.bit_equal(compiled.mem));
  }
}
