//===- cfg.hpp - CFG queries: dominance, loops, reachability --------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_CFG_HPP
#define WGKIT_CFG_HPP

#include "wgkit/ir.hpp"

#include <utility>
#include <vector>

namespace wgkit {

// Successor list of a block (from its terminator).
std::vector<BlockId> successors(const KernelFunction &k, BlockId b);

// Predecessor lists for all blocks (dead blocks get empty lists and are not
// counted as predecessors).
std::vector<std::vector<BlockId>> predecessors(const KernelFunction &k);

std::vector<BlockId> dfs_preorder(const KernelFunction &k);
std::vector<bool> reachable_from_entry(const KernelFunction &k);

// Marks unreachable blocks dead and drops phi entries for edges from them.
// Returns the number of blocks removed.
int delete_unreachable(KernelFunction &k);

struct DomInfo {
  // dom[b][d] == true iff d dominates b. Unreachable blocks have empty sets.
  std::vector<std::vector<bool>> dom;
  std::vector<BlockId> idom; // kNoBlock for entry and unreachable blocks

  bool dominates(BlockId d, BlockId b) const {
    return b < dom.size() && d < dom[b].size() && dom[b][d];
  }
};

DomInfo compute_dominators(const KernelFunction &k);

// Post-dominance over a virtual exit that joins all ret blocks.
struct PostDomInfo {
  std::vector<std::vector<bool>> pdom; // pdom[b][d]: d post-dominates b
  bool postdominates(BlockId d, BlockId b) const {
    return b < pdom.size() && d < pdom[b].size() && pdom[b][d];
  }
};

PostDomInfo compute_postdominators(const KernelFunction &k);

// Edges u->v whose target is on the DFS stack when the edge is traversed.
std::vector<std::pair<BlockId, BlockId>> back_edges(const KernelFunction &k);

// Reducible iff every retreating edge targets a dominator of its source.
bool is_reducible(const KernelFunction &k);

struct LoopInfo {
  BlockId header = kNoBlock;
  std::vector<BlockId> latches;        // sources of back edges into header
  std::vector<BlockId> blocks;         // natural loop body incl. header
  std::vector<BlockId> exiting_blocks; // blocks with an edge leaving the loop
  std::vector<BlockId> exit_targets;   // distinct targets outside the loop
  bool contains(BlockId b) const;
};

// Natural loops grouped by header, innermost-last ordering not guaranteed.
std::vector<LoopInfo> find_loops(const KernelFunction &k);

} // namespace wgkit

#endif // WGKIT_CFG_HPP
