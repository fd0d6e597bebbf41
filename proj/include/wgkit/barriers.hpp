//===- barriers.hpp - barrier canonicalization and the Barrier CFG ----------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_BARRIERS_HPP
#define WGKIT_BARRIERS_HPP

#include "wgkit/cfg.hpp"
#include "wgkit/ir.hpp"

#include <map>
#include <string>
#include <vector>

namespace wgkit {

bool has_barrier(const BasicBlock &bb);
bool block_is_barrier(const KernelFunction &k, BlockId b);

// Splits blocks so every barrier instruction sits alone in its own block, and
// gives every barrier block an unconditional terminator by pushing branches
// into a fresh successor block. The one exception is a barrier block that is
// a loop latch: the original latch branch is retained there.
KernelFunction canonicalize_barriers(const KernelFunction &k);

struct BarrierNode {
  enum class Kind { Entry, Barrier, Exit } kind = Kind::Barrier;
  BlockId block = kNoBlock; // barrier block, or the ret block for Exit
};

// Reduced graph over {entry, barriers, exits}: an edge means a barrier-free
// CFG path connects the two nodes. In Forward mode, paths through loop back
// edges are ignored; region formation runs on that view since the original
// kernel loop edges survive work-group generation unreplicated.
struct BarrierCFG {
  std::vector<BarrierNode> nodes;
  std::vector<std::vector<int>> succs;
  std::vector<std::vector<int>> preds;
  int entry_node = -1;

  int node_of_barrier(BlockId b) const;
  int node_of_exit(BlockId b) const;
  std::vector<int> immediate_predecessor_barriers(int n) const { return preds[n]; }
  // True iff some node has more than one immediate predecessor barrier.
  bool has_multi_predecessor_node() const;
  std::string to_dot(const KernelFunction &k) const;
};

enum class BarrierCfgMode { Full, Forward };

BarrierCFG build_barrier_cfg(const KernelFunction &k,
                             BarrierCfgMode mode = BarrierCfgMode::Full);

enum class BarrierClass { Unconditional, Conditional };

// A barrier is unconditional iff its block dominates every exit block.
std::map<BlockId, BarrierClass> classify_barriers(const KernelFunction &k,
                                                  const DomInfo &dom);

bool has_conditional_barrier(const KernelFunction &k);

} // namespace wgkit

#endif // WGKIT_BARRIERS_HPP
