//===- cfg.cc - CFG queries -----------------------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/cfg.hpp"

#include <algorithm>
#include <cassert>

namespace wgkit {

std::vector<BlockId> successors(const KernelFunction &k, BlockId b) {
  const Terminator &t = k.block(b).term;
  std::vector<BlockId> out;
  for (int i = 0; i < t.num_succs(); ++i)
    out.push_back(t.succ[i]);
  // A cond-branch with identical targets is a single CFG edge.
  if (out.size() == 2 && out[0] == out[1])
    out.pop_back();
  return out;
}

std::vector<std::vector<BlockId>> predecessors(const KernelFunction &k) {
  std::vector<std::vector<BlockId>> preds(k.blocks.size());
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    for (BlockId s : successors(k, b))
      preds[s].push_back(b);
  }
  return preds;
}

std::vector<BlockId> dfs_preorder(const KernelFunction &k) {
  std::vector<BlockId> order;
  std::vector<bool> seen(k.blocks.size(), false);
  std::vector<BlockId> stack{k.entry};
  seen[k.entry] = true;
  while (!stack.empty()) {
    BlockId b = stack.back();
    stack.pop_back();
    order.push_back(b);
    auto succ = successors(k, b);
    // Push in reverse so succ[0] is visited first.
    for (auto it = succ.rbegin(); it != succ.rend(); ++it)
      if (!seen[*it]) {
        seen[*it] = true;
        stack.push_back(*it);
      }
  }
  return order;
}

std::vector<bool> reachable_from_entry(const KernelFunction &k) {
  std::vector<bool> seen(k.blocks.size(), false);
  for (BlockId b : dfs_preorder(k))
    seen[b] = true;
  return seen;
}

int delete_unreachable(KernelFunction &k) {
  auto seen = reachable_from_entry(k);
  int removed = 0;
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (!k.blocks[b].dead && !seen[b]) {
      k.blocks[b].dead = true;
      ++removed;
    }
  }
  if (removed == 0)
    return 0;
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    for (Phi &phi : k.blocks[b].phis) {
      auto &inc = phi.incoming;
      inc.erase(std::remove_if(inc.begin(), inc.end(),
                               [&](const PhiIncoming &pi) { return !seen[pi.pred]; }),
                inc.end());
    }
  }
  return removed;
}

DomInfo compute_dominators(const KernelFunction &k) {
  size_t n = k.blocks.size();
  DomInfo info;
  info.dom.assign(n, {});
  info.idom.assign(n, kNoBlock);
  auto reach = reachable_from_entry(k);
  auto preds = predecessors(k);

  std::vector<bool> all(n, false);
  for (BlockId b = 0; b < n; ++b)
    all[b] = reach[b];

  for (BlockId b = 0; b < n; ++b) {
    if (!reach[b])
      continue;
    if (b == k.entry) {
      info.dom[b].assign(n, false);
      info.dom[b][b] = true;
    } else {
      info.dom[b] = all;
    }
  }

  bool changed = true;
  auto order = dfs_preorder(k);
  while (changed) {
    changed = false;
    for (BlockId b : order) {
      if (b == k.entry)
        continue;
      std::vector<bool> nd(n, false);
      bool first = true;
      for (BlockId p : preds[b]) {
        if (!reach[p])
          continue;
        if (first) {
          nd = info.dom[p];
          first = false;
        } else {
          for (size_t i = 0; i < n; ++i)
            nd[i] = nd[i] && info.dom[p][i];
        }
      }
      nd[b] = true;
      if (nd != info.dom[b]) {
        info.dom[b] = nd;
        changed = true;
      }
    }
  }

  // idom(b): the strict dominator with the largest dominator set.
  for (BlockId b : order) {
    if (b == k.entry)
      continue;
    BlockId best = kNoBlock;
    size_t best_size = 0;
    for (BlockId d = 0; d < n; ++d) {
      if (d == b || !info.dom[b][d])
        continue;
      size_t sz = 0;
      for (size_t i = 0; i < n; ++i)
        sz += info.dom[d][i] ? 1 : 0;
      if (sz >= best_size) {
        best_size = sz;
        best = d;
      }
    }
    info.idom[b] = best;
  }
  return info;
}

PostDomInfo compute_postdominators(const KernelFunction &k) {
  size_t n = k.blocks.size();
  size_t vexit = n; // virtual exit
  auto reach = reachable_from_entry(k);

  // Reverse adjacency: rpreds[b] = successors of b in the reversed graph.
  std::vector<std::vector<BlockId>> rsucc(n + 1), rpred(n + 1);
  for (BlockId b = 0; b < n; ++b) {
    if (k.blocks[b].dead || !reach[b])
      continue;
    auto succ = successors(k, b);
    if (succ.empty()) {
      rsucc[vexit].push_back(b); // vexit -> ret block in reversed graph
      rpred[b].push_back(BlockId(vexit));
    }
    for (BlockId s : succ) {
      rsucc[s].push_back(b);
      rpred[b].push_back(s);
    }
  }

  std::vector<std::vector<bool>> pd(n + 1);
  std::vector<bool> all(n + 1, true);
  // Blocks that cannot reach an exit never post-dominate anything useful;
  // keep the fixpoint total by seeding them with the full set.
  for (size_t b = 0; b <= n; ++b)
    pd[b] = all;
  pd[vexit].assign(n + 1, false);
  pd[vexit][vexit] = true;

  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t b = 0; b < n; ++b) {
      if (k.blocks[b].dead || !reach[b])
        continue;
      std::vector<bool> nd(n + 1, false);
      bool first = true;
      for (BlockId s : rpred[b]) { // forward successors
        if (first) {
          nd = pd[s];
          first = false;
        } else {
          for (size_t i = 0; i <= n; ++i)
            nd[i] = nd[i] && pd[s][i];
        }
      }
      if (first)
        nd.assign(n + 1, true); // no path to exit
      nd[b] = true;
      if (nd != pd[b]) {
        pd[b] = nd;
        changed = true;
      }
    }
  }

  PostDomInfo out;
  out.pdom.assign(n, std::vector<bool>(n, false));
  for (size_t b = 0; b < n; ++b)
    for (size_t d = 0; d < n; ++d)
      out.pdom[b][d] = pd[b][d];
  return out;
}

static void back_edge_dfs(const KernelFunction &k, BlockId b, std::vector<int> &state,
                          std::vector<std::pair<BlockId, BlockId>> &out) {
  state[b] = 1; // on stack
  for (BlockId s : successors(k, b)) {
    if (state[s] == 1)
      out.emplace_back(b, s);
    else if (state[s] == 0)
      back_edge_dfs(k, s, state, out);
  }
  state[b] = 2;
}

std::vector<std::pair<BlockId, BlockId>> back_edges(const KernelFunction &k) {
  std::vector<int> state(k.blocks.size(), 0);
  std::vector<std::pair<BlockId, BlockId>> out;
  back_edge_dfs(k, k.entry, state, out);
  return out;
}

bool is_reducible(const KernelFunction &k) {
  auto dom = compute_dominators(k);
  for (auto [u, v] : back_edges(k))
    if (!dom.dominates(v, u))
      return false;
  return true;
}

KernelFunction normalize_single_exit(const KernelFunction &input) {
  KernelFunction k = input;
  delete_unreachable(k);
  std::vector<BlockId> rets;
  for (BlockId b = 0; b < k.blocks.size(); ++b)
    if (!k.blocks[b].dead && k.block(b).term.kind == Terminator::Kind::Ret)
      rets.push_back(b);
  if (rets.empty())
    throw ValidationError("kernel has no reachable ret block");
  if (rets.size() == 1)
    return k;
  BlockId ex = k.new_block("exit");
  k.block(ex).term = Terminator::ret();
  for (BlockId b : rets)
    k.block(b).term = Terminator::br(ex);
  validate(k);
  return k;
}

bool LoopInfo::contains(BlockId b) const {
  return std::find(blocks.begin(), blocks.end(), b) != blocks.end();
}

std::vector<LoopInfo> find_loops(const KernelFunction &k) {
  auto bes = back_edges(k);
  auto preds = predecessors(k);

  std::vector<LoopInfo> loops;
  for (auto [latch, header] : bes) {
    LoopInfo *loop = nullptr;
    for (auto &l : loops)
      if (l.header == header)
        loop = &l;
    if (!loop) {
      loops.push_back({});
      loop = &loops.back();
      loop->header = header;
      loop->blocks.push_back(header);
    }
    loop->latches.push_back(latch);
    // Walk predecessors from the latch until the header.
    std::vector<BlockId> work{latch};
    while (!work.empty()) {
      BlockId b = work.back();
      work.pop_back();
      if (loop->contains(b))
        continue;
      loop->blocks.push_back(b);
      // The header is pre-seeded, so the walk stops there.
      for (BlockId p : preds[b])
        work.push_back(p);
    }
  }
  for (auto &l : loops) {
    for (BlockId b : l.blocks)
      for (BlockId s : successors(k, b))
        if (!l.contains(s)) {
          if (std::find(l.exiting_blocks.begin(), l.exiting_blocks.end(), b) ==
              l.exiting_blocks.end())
            l.exiting_blocks.push_back(b);
          if (std::find(l.exit_targets.begin(), l.exit_targets.end(), s) ==
              l.exit_targets.end())
            l.exit_targets.push_back(s);
        }
  }
  return loops;
}

} // namespace wgkit
