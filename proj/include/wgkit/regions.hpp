//===- regions.hpp - parallel region formation and tail duplication ---------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_REGIONS_HPP
#define WGKIT_REGIONS_HPP

#include "wgkit/barriers.hpp"
#include "wgkit/ir.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace wgkit {

// Nodes that can potentially be visited when traversing from a to b:
// reachable from a while able to reach b. Includes loops hanging off the
// path, which is what region formation needs. Errors if b is unreachable.
std::set<BlockId> create_subgraph(const KernelFunction &k, BlockId a, BlockId b);

struct ReplicaMap {
  std::map<BlockId, BlockId> block_map;
  std::map<ValueId, ValueId> value_map;
  ValueId mapped_value(ValueId v) const {
    auto it = value_map.find(v);
    return it == value_map.end() ? v : it->second;
  }
};

// Copies a sub-CFG in place: internal edges and SSA uses are remapped to the
// copies, edges to outside blocks keep their original targets, and phis in
// outside successor blocks gain entries for the new predecessor edges. The
// copied entry blocks keep no incoming edges; callers retarget explicitly.
ReplicaMap replicate_cfg(KernelFunction &k, const std::set<BlockId> &blocks);

struct ParallelRegion {
  int id = 0;
  BlockId entry = kNoBlock; // first interior block (kNoBlock when empty)
  BlockId exit = kNoBlock;  // terminating barrier block or ret block
  std::vector<BlockId> blocks; // interior blocks, no barriers inside
  int start_node = -1;         // producing edge in the barrier CFG
  int end_node = -1;
};

struct RegionSet {
  std::vector<ParallelRegion> regions;
  BarrierCFG bcfg; // forward view (loop back edges masked)

  // region ids containing a block (selector prefixes may be shared)
  std::vector<int> regions_of(BlockId b) const;
  bool is_shared(BlockId b) const { return regions_of(b).size() > 1; }
  const ParallelRegion *region_ending_at(BlockId barrier_or_ret) const;
  std::string to_json(const KernelFunction &k) const;
  std::string to_dot(const KernelFunction &k) const;
};

// Alg. 1 over the forward barrier CFG. Requires canonicalized barriers and
// every node to have at most one immediate predecessor barrier; kernels with
// unprocessed conditional barriers fail with a message pointing at
// tail_duplicate.
RegionSet form_parallel_regions(const KernelFunction &k);

// Tail duplication: replicates joined suffixes after barriers until every
// barrier-free path into a node starts at a unique barrier. Loop back edges
// are never duplicated; the original kernel loop edges survive work-group
// generation unreplicated.
KernelFunction tail_duplicate(const KernelFunction &k);

// Extracts the work-item-dependent selector prefix of overlapping region
// families into a side-effect-free peeled evaluation and gives every region
// a straightened private body, so later work-item loops are reducible.
KernelFunction peel_first_iteration(const KernelFunction &k, const RegionSet &rs);

} // namespace wgkit

#endif // WGKIT_REGIONS_HPP
