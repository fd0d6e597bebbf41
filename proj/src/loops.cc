//===- loops.cc - loop passes and uniformity analysis -----------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/loops.hpp"

#include "wgkit/barriers.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace wgkit {

namespace {

// Moves the header phi entries for a group of rerouted predecessors into a
// fresh forwarding block. Each affected phi gets a sibling phi in the new
// block merging the rerouted values.
void reroute_preds_through(KernelFunction &k, BlockId target,
                           const std::vector<BlockId> &preds,
                           const std::string &name) {
  BlockId mid = k.new_block(name);
  std::set<BlockId> moving(preds.begin(), preds.end());

  for (Phi &phi : k.block(target).phis) {
    Phi np;
    np.ty = phi.ty;
    for (const PhiIncoming &pi : phi.incoming)
      if (moving.count(pi.pred))
        np.incoming.push_back(pi);
    phi.incoming.erase(
        std::remove_if(phi.incoming.begin(), phi.incoming.end(),
                       [&](const PhiIncoming &pi) { return moving.count(pi.pred); }),
        phi.incoming.end());
    if (np.incoming.size() == 1) {
      phi.incoming.push_back(PhiIncoming{mid, np.incoming[0].value});
    } else {
      np.result = k.new_value(k.value_name(phi.result) + ".m",
                              Type::scalar(phi.ty));
      k.block(mid).phis.push_back(np);
      phi.incoming.push_back(PhiIncoming{mid, k.block(mid).phis.back().result});
    }
  }
  k.block(mid).term = Terminator::br(target);
  for (BlockId p : preds) {
    Terminator &t = k.block(p).term;
    for (int s = 0; s < t.num_succs(); ++s)
      if (t.succ[s] == target)
        t.succ[s] = mid;
  }
}

} // namespace

KernelFunction canonicalize_loops(const KernelFunction &input) {
  KernelFunction k = input;
  delete_unreachable(k);
  if (!is_reducible(k))
    throw ValidationError("irreducible control flow is not supported");

  for (int round = 0;; ++round) {
    if (round > 1024)
      throw ValidationError("loop canonicalization did not converge");
    auto loops = find_loops(k);
    auto preds = predecessors(k);
    bool changed = false;

    for (const LoopInfo &loop : loops) {
      // 1) single latch
      if (loop.latches.size() > 1) {
        reroute_preds_through(k, loop.header, loop.latches,
                              k.block(loop.header).name + ".latch");
        changed = true;
        break;
      }
      // 2) dedicated preheader: exactly one entering predecessor whose only
      // successor is the header
      std::vector<BlockId> entering;
      for (BlockId p : preds[loop.header])
        if (std::find(loop.latches.begin(), loop.latches.end(), p) ==
            loop.latches.end())
          entering.push_back(p);
      if (entering.empty())
        throw ValidationError("loop header without an entering edge");
      bool needs_preheader = entering.size() != 1;
      if (!needs_preheader &&
          k.block(entering[0]).term.num_succs() != 1)
        needs_preheader = true;
      if (needs_preheader) {
        reroute_preds_through(k, loop.header, entering,
                              k.block(loop.header).name + ".pre");
        changed = true;
        break;
      }
      // 3) single dedicated exit block
      if (loop.exit_targets.size() > 1)
        throw ValidationError("loop exits to multiple targets; cannot "
                              "canonicalize");
      if (loop.exit_targets.size() == 1) {
        BlockId target = loop.exit_targets[0];
        // dedicated: every predecessor of the exit block is inside the loop
        bool dedicated = true;
        for (BlockId p : preds[target])
          if (!loop.contains(p))
            dedicated = false;
        if (!dedicated) {
          reroute_preds_through(k, target, loop.exiting_blocks,
                                k.block(loop.header).name + ".exit");
          changed = true;
          break;
        }
      }
    }
    if (!changed)
      break;
  }
  validate(k);
  return k;
}

namespace {

bool body_last_is_barrier(const BasicBlock &bb) {
  return !bb.body.empty() && bb.body.back().op == Opcode::Barrier;
}

bool body_first_is_barrier(const BasicBlock &bb) {
  return !bb.body.empty() && bb.body.front().op == Opcode::Barrier;
}

// The three placements for one loop. Returns false if already present.
bool insert_loop_barriers(KernelFunction &k, const LoopInfo &loop,
                          const std::vector<std::vector<BlockId>> &preds) {
  if (loop.latches.size() != 1)
    throw ValidationError("b-loop is not canonical (latch count)");
  BlockId latch = loop.latches[0];

  BlockId preheader = kNoBlock;
  for (BlockId p : preds[loop.header])
    if (p != latch)
      preheader = p;
  if (preheader == kNoBlock)
    throw ValidationError("b-loop has no preheader");

  bool changed = false;
  Instruction barrier;
  barrier.op = Opcode::Barrier;

  if (!body_last_is_barrier(k.block(preheader))) {
    k.block(preheader).body.push_back(barrier);
    changed = true;
  }
  if (!body_last_is_barrier(k.block(latch))) {
    k.block(latch).body.push_back(barrier);
    changed = true;
  }
  if (!body_first_is_barrier(k.block(loop.header))) {
    auto &body = k.block(loop.header).body;
    body.insert(body.begin(), barrier);
    changed = true;
  }
  return changed;
}

} // namespace

KernelFunction insert_bloop_barriers(const KernelFunction &input) {
  KernelFunction k = input;
  for (int round = 0;; ++round) {
    if (round > 256)
      throw ValidationError("b-loop barrier insertion did not converge");
    auto loops = find_loops(k);
    auto preds = predecessors(k);
    bool changed = false;
    for (const LoopInfo &loop : loops) {
      bool has_bar = false;
      for (BlockId b : loop.blocks)
        if (has_barrier(k.block(b)))
          has_bar = true;
      if (!has_bar)
        continue;
      if (insert_loop_barriers(k, loop, preds))
        changed = true;
    }
    if (!changed)
      break;
  }
  validate(k);
  return k;
}

//===----------------------------------------------------------------------===//
// Uniformity analysis
//===----------------------------------------------------------------------===//

namespace {

// Transitive control dependence: the set of cond-branch blocks that decide
// whether each of the seed blocks executes.
std::set<BlockId> controlling_branches(const KernelFunction &k,
                                       const PostDomInfo &pdom,
                                       std::set<BlockId> seeds) {
  std::set<BlockId> out;
  std::vector<BlockId> work(seeds.begin(), seeds.end());
  std::set<BlockId> seen = seeds;
  while (!work.empty()) {
    BlockId y = work.back();
    work.pop_back();
    for (BlockId u = 0; u < k.blocks.size(); ++u) {
      if (k.blocks[u].dead || k.block(u).term.kind != Terminator::Kind::CondBr)
        continue;
      const Terminator &t = k.block(u).term;
      bool dep = false;
      // y is control dependent on edge (u, v) iff y post-dominates v but
      // does not strictly post-dominate u (y == u counts as dependent:
      // loop headers depend on their own exit branch).
      for (int s = 0; s < 2; ++s)
        if (pdom.postdominates(y, t.succ[s]) &&
            (y == u || !pdom.postdominates(y, u)))
          dep = true;
      if (dep && !out.count(u)) {
        out.insert(u);
        if (!seen.count(u)) {
          seen.insert(u);
          work.push_back(u);
        }
      }
    }
  }
  return out;
}

} // namespace

UniformityMap analyze_uniformity(const KernelFunction &k) {
  UniformityMap m;
  m.uniform.assign(k.values.size(), true);
  auto pdom = compute_postdominators(k);

  // Cache per-block controlling branches for phi handling.
  std::map<BlockId, std::set<BlockId>> ctrl;
  for (BlockId b = 0; b < k.blocks.size(); ++b)
    if (!k.blocks[b].dead && !k.block(b).phis.empty())
      ctrl[b] = controlling_branches(k, pdom, {b});

  // Optimistic start; demote until fixpoint. Roots that always vary:
  // work-item id builtins and loads from non-constant memory.
  bool changed = true;
  while (changed) {
    changed = false;
    auto demote = [&](ValueId v) {
      if (v != kNoValue && m.uniform[v]) {
        m.uniform[v] = false;
        changed = true;
      }
    };
    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      if (k.blocks[b].dead)
        continue;
      const BasicBlock &bb = k.block(b);
      for (const Phi &phi : bb.phis) {
        bool varying = false;
        for (const PhiIncoming &pi : phi.incoming)
          if (!m.uniform[pi.value])
            varying = true;
        // A phi merges per-path values: the taking of each edge must be
        // uniform too.
        for (BlockId c : ctrl[b])
          if (!m.uniform[k.block(c).term.cond])
            varying = true;
        if (varying)
          demote(phi.result);
      }
      for (const Instruction &in : bb.body) {
        if (in.result == kNoValue)
          continue;
        switch (in.op) {
        case Opcode::GetLocalId:
        case Opcode::GetGlobalId:
        case Opcode::GetFlatLocalId:
          demote(in.result);
          break;
        case Opcode::GetLocalSize:
        case Opcode::GetGroupId:
        case Opcode::Const:
          break; // uniform roots
        case Opcode::AllocaPrivate:
        case Opcode::AllocaLocal:
          break; // pointer handles are shared
        case Opcode::Load: {
          // Only constant-space loads from uniform addresses stay uniform.
          bool ok = in.space == AddressSpace::Constant;
          for (ValueId v : in.operands)
            if (!m.uniform[v])
              ok = false;
          if (!ok)
            demote(in.result);
          break;
        }
        default: {
          for (ValueId v : in.operands)
            if (!m.uniform[v])
              demote(in.result);
          break;
        }
        }
      }
    }
  }
  return m;
}

//===----------------------------------------------------------------------===//
// Horizontal inner-loop parallelization
//===----------------------------------------------------------------------===//

KernelFunction horizontal_parallelize(const KernelFunction &input,
                                      const UniformityMap &u) {
  KernelFunction k = input;
  auto pdom = compute_postdominators(k);
  auto loops = find_loops(k);
  auto preds = predecessors(k);

  std::vector<const LoopInfo *> qualifying;
  for (const LoopInfo &loop : loops) {
    bool has_bar = false;
    for (BlockId b : loop.blocks)
      if (has_barrier(k.block(b)))
        has_bar = true;
    if (has_bar)
      continue;
    if (loop.latches.size() != 1)
      continue; // not canonical; leave alone

    // Every branch the latch execution depends on must be uniform, and so
    // must every exiting branch: the trip count is then identical for all
    // work-items.
    bool ok = true;
    auto latch_ctrl = controlling_branches(k, pdom, {loop.latches[0]});
    for (BlockId c : latch_ctrl)
      if (!u.is_uniform(k.block(c).term.cond))
        ok = false;
    for (BlockId e : loop.exiting_blocks) {
      const Terminator &t = k.block(e).term;
      if (t.kind == Terminator::Kind::CondBr && !u.is_uniform(t.cond))
        ok = false;
    }

    // Predicates on the way to the loop entry must be uniform, or some
    // work-items would skip the loop the barriers get inserted into.
    BlockId preheader = kNoBlock;
    for (BlockId p : preds[loop.header])
      if (std::find(loop.latches.begin(), loop.latches.end(), p) ==
          loop.latches.end())
        preheader = p;
    if (preheader == kNoBlock)
      continue;
    for (BlockId c : controlling_branches(k, pdom, {preheader}))
      if (!u.is_uniform(k.block(c).term.cond))
        ok = false;

    // Enclosing loops must iterate uniformly as well.
    for (const LoopInfo &outer : loops) {
      if (outer.header == loop.header || !outer.contains(loop.header))
        continue;
      for (BlockId l2 : outer.latches)
        for (BlockId c : controlling_branches(k, pdom, {l2}))
          if (!u.is_uniform(k.block(c).term.cond))
            ok = false;
    }
    if (ok)
      qualifying.push_back(&loop);
  }

  if (qualifying.empty())
    return k;

  for (const LoopInfo *loop : qualifying)
    insert_loop_barriers(k, *loop, preds);

  // Fresh implicit barriers may sit inside enclosing loops.
  return insert_bloop_barriers(k);
}

} // namespace wgkit
