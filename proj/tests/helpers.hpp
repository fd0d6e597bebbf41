//===- helpers.hpp - shared test fixtures ----------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_TESTS_HELPERS_HPP
#define WGKIT_TESTS_HELPERS_HPP

#include "wgkit/cfg.hpp"
#include "wgkit/exec.hpp"
#include "wgkit/ir.hpp"

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace testutil {

using namespace wgkit;

// Fig. 1 dot product transcribed to the toy IR with float4 scalarized to
// four lanes per element.
inline const char *kDotProduct = R"(
kernel @dot_product(constant f32 %a, constant f32 %b, global f32 %c) dims 1 {
entry:
  %gid = get_global_id 0
  %c4 = const i32 4
  %base = mul %gid %c4
  %c1 = const i32 1
  %c2 = const i32 2
  %c3 = const i32 3
  %i1 = add %base %c1
  %i2 = add %base %c2
  %i3 = add %base %c3
  %a0 = load constant %a [%base]
  %a1 = load constant %a [%i1]
  %a2 = load constant %a [%i2]
  %a3 = load constant %a [%i3]
  %b0 = load constant %b [%base]
  %b1 = load constant %b [%i1]
  %b2 = load constant %b [%i2]
  %b3 = load constant %b [%i3]
  %m0 = mul %a0 %b0
  %m1 = mul %a1 %b1
  %m2 = mul %a2 %b2
  %m3 = mul %a3 %b3
  %s0 = add %m0 %m1
  %s1 = add %s0 %m2
  %dot = add %s1 %m3
  store global %dot %c [%gid]
  ret
}
)";

// DCT-style kernel: two uniform-trip accumulation loops around a barrier,
// with a local scratch tile. The loop trip count comes from the blockWidth
// argument, so horizontal parallelization applies.
inline const char *kDct = R"(
kernel @dct(global f32 %output, global f32 %input, global f32 %dct8x8, local f32 %inter, value i32 %width, value i32 %blockWidth, value i32 %inverse) dims 2 {
entry:
  %i = get_local_id 0
  %j = get_local_id 1
  %gx = get_group_id 0
  %gy = get_group_id 1
  %zero = const i32 0
  %one = const i32 1
  %fzero = const f32 0x0p+0
  %inv = cmp.ne %inverse %zero
  br head1
head1:
  %k = phi i32 [entry %zero] [body1 %k1]
  %acc = phi f32 [entry %fzero] [body1 %acc1]
  %c1 = cmp.lt %k %blockWidth
  br %c1 body1 after1
body1:
  %ia = mul %i %blockWidth
  %iak = add %ia %k
  %ka = mul %k %blockWidth
  %kai = add %ka %i
  %index1 = select %inv %iak %kai
  %gyb = mul %gy %blockWidth
  %row = add %gyb %j
  %rw = mul %row %width
  %gxb = mul %gx %blockWidth
  %col = add %gxb %k
  %index2 = add %rw %col
  %d = load global %dct8x8 [%index1]
  %x = load global %input [%index2]
  %m = mul %d %x
  %acc1 = add %acc %m
  %k1 = add %k %one
  br head1
after1:
  %jb = mul %j %blockWidth
  %jbi = add %jb %i
  store local %acc %inter [%jbi]
  barrier
  br head2
head2:
  %k2 = phi i32 [after1 %zero] [body2 %k21]
  %acc2 = phi f32 [after1 %fzero] [body2 %acc21]
  %c2 = cmp.lt %k2 %blockWidth
  br %c2 body2 after2
body2:
  %ja = mul %j %blockWidth
  %jak = add %ja %k2
  %ka2 = mul %k2 %blockWidth
  %kaj = add %ka2 %j
  %index3 = select %inv %jak %kaj
  %kb = mul %k2 %blockWidth
  %kbi = add %kb %i
  %iv = load local %inter [%kbi]
  %d2 = load global %dct8x8 [%index3]
  %m2 = mul %d2 %iv
  %acc21 = add %acc2 %m2
  %k21 = add %k2 %one
  br head2
after2:
  %orow = mul %gy %blockWidth
  %orj = add %orow %j
  %orw = mul %orj %width
  %ocol = mul %gx %blockWidth
  %oci = add %ocol %i
  %oidx = add %orw %oci
  store global %acc2 %output [%oidx]
  ret
}
)";

// Launch and image for the DCT case: blockWidth 4, two groups per dimension.
inline wgkit::Launch dct_launch() {
  wgkit::Launch l;
  l.local = {4, 4, 1};
  l.num_groups = {2, 2, 1};
  l.scalar_binds["width"] = wgkit::Scalar::make_i32(8);
  l.scalar_binds["blockWidth"] = wgkit::Scalar::make_i32(4);
  l.scalar_binds["inverse"] = wgkit::Scalar::make_i32(0);
  l.local_elems["inter"] = 16;
  return l;
}

inline wgkit::MemoryImage dct_image() {
  wgkit::MemoryImage m;
  m.add_buffer("output", wgkit::ScalarKind::F32, 64);
  m.add_buffer("input", wgkit::ScalarKind::F32, 64);
  m.add_buffer("dct8x8", wgkit::ScalarKind::F32, 16);
  for (int i = 0; i < 64; ++i)
    m["input"].set(i, wgkit::Scalar::make_f32(0.25f * float(i % 13) - 1.0f));
  for (int i = 0; i < 16; ++i)
    m["dct8x8"].set(i, wgkit::Scalar::make_f32(0.5f * float((i * 7) % 5) - 0.75f));
  return m;
}

// Random CFG over `n` blocks for structural oracles: every block carries no
// instructions, branches are driven by a bool param. Not meant to execute.
inline KernelFunction random_cfg(std::mt19937 &rng, int n) {
  KernelFunction k;
  k.name = "cfg";
  k.dims = 1;
  ValueId c = k.new_value("cond", Type::scalar(ScalarKind::Bool));
  k.params.push_back(Param{"cond", AddressSpace::Value, ScalarKind::Bool, c});
  for (int i = 0; i < n; ++i)
    k.new_block("b" + std::to_string(i));
  // never branch back to the entry block: kernels keep it predecessor-free
  std::uniform_int_distribution<int> pick(1, n - 1);
  for (int i = 0; i < n; ++i) {
    int kind = std::uniform_int_distribution<int>(0, 9)(rng);
    if (kind < 2 || (i == n - 1)) {
      k.blocks[i].term = Terminator::ret();
    } else if (kind < 6) {
      k.blocks[i].term = Terminator::br(BlockId(pick(rng)));
    } else {
      k.blocks[i].term = Terminator::cond_br(c, BlockId(pick(rng)), BlockId(pick(rng)));
    }
  }
  k.entry = 0;
  return k;
}

// All simple paths from a to b (no repeated nodes), as node sets.
inline void simple_paths(const KernelFunction &k, BlockId cur, BlockId goal,
                         std::vector<BlockId> &path, std::vector<bool> &on,
                         std::vector<std::vector<BlockId>> &out) {
  path.push_back(cur);
  on[cur] = true;
  if (cur == goal) {
    out.push_back(path);
  } else {
    for (BlockId s : successors(k, cur))
      if (!on[s])
        simple_paths(k, s, goal, path, on, out);
  }
  on[cur] = false;
  path.pop_back();
}

inline std::vector<std::vector<BlockId>> all_simple_paths(const KernelFunction &k,
                                                          BlockId a, BlockId b) {
  std::vector<std::vector<BlockId>> out;
  std::vector<BlockId> path;
  std::vector<bool> on(k.blocks.size(), false);
  simple_paths(k, a, b, path, on, out);
  return out;
}

// Brute-force dominance: enumerate every acyclic entry->b path and intersect
// the visited node sets. Any cyclic path reduces to an acyclic one visiting a
// subset of its nodes, so the acyclic intersection decides dominance exactly.
inline std::set<BlockId> oracle_dominators(const KernelFunction &k, BlockId b) {
  auto paths = all_simple_paths(k, k.entry, b);
  std::set<BlockId> doms;
  if (paths.empty())
    return doms; // unreachable: empty by convention
  doms.insert(paths[0].begin(), paths[0].end());
  for (size_t i = 1; i < paths.size(); ++i) {
    std::set<BlockId> here(paths[i].begin(), paths[i].end());
    std::set<BlockId> keep;
    std::set_intersection(doms.begin(), doms.end(), here.begin(), here.end(),
                          std::inserter(keep, keep.begin()));
    doms = keep;
  }
  return doms;
}

} // namespace testutil

#endif
