//===- wg.hpp - work-group function generation -------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Turning a region-formed kernel into a single-threaded work-group function
// happens in kernel-level phases that each preserve oracle behavior:
//
//   convert_automatic_locals   alloca_local -> appended local param
//   demote_boundary_phis       region-entry phis -> per-work-item mailboxes
//   privatize_variables        cross-region values -> context arrays
//   merge_uniform_variables    uniform context arrays -> single scalar slots
//   expand_private_allocas     private arrays widened to one slice per item
//   generate_workgroup_function  wraps region bodies in annotated WI loops,
//                                rewrites id builtins, deletes barriers
//   cleanup_redundancy         dominator-scoped value numbering + DCE
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_WG_HPP
#define WGKIT_WG_HPP

#include "wgkit/ir.hpp"
#include "wgkit/loops.hpp"
#include "wgkit/regions.hpp"

#include <string>
#include <utility>
#include <vector>

namespace wgkit {

struct WgOptions {
  bool dynamic_local_size = false;
  // context array extent when the local size is not compiled in
  int max_wg_size = 256;
};

struct ConvertedLocals {
  KernelFunction fn;
  // name and fixed element count of each appended local param
  std::vector<std::pair<std::string, int64_t>> added_params;
};

ConvertedLocals convert_automatic_locals(const KernelFunction &k);

KernelFunction demote_boundary_phis(const KernelFunction &k, const RegionSet &rs,
                                    const LocalSize &ls, const WgOptions &opts = {});

KernelFunction privatize_variables(const KernelFunction &k, const RegionSet &rs,
                                   const LocalSize &ls, const WgOptions &opts = {});

KernelFunction merge_uniform_variables(const KernelFunction &k,
                                       const UniformityMap &u);

KernelFunction expand_private_allocas(const KernelFunction &k, const LocalSize &ls,
                                      const WgOptions &opts = {});

KernelFunction cleanup_redundancy(const KernelFunction &k);

struct WiLoopMeta {
  int region_id = -1;
  std::vector<BlockId> blocks; // pre, headers, latches
  ValueId iv_x = kNoValue, iv_y = kNoValue, iv_z = kNoValue;
};

struct CtxArrayMeta {
  std::string origin; // value the array privatizes
  ValueId array = kNoValue;
  int64_t extent = 0;
};

struct WorkGroupFunction {
  KernelFunction fn;
  LocalSize local;
  bool dynamic_local_size = false;
  std::vector<WiLoopMeta> wi_loops;
  std::vector<CtxArrayMeta> context_arrays; // per-work-item arrays
  std::vector<CtxArrayMeta> uniform_slots;  // merged scalars (extent 1)
  std::vector<CtxArrayMeta> phi_slots;      // boundary phi mailboxes
};

// Wraps every region body in a z/y/x work-item loop nest with the parallel
// annotation, keeps barrier blocks and shared selector prefixes as
// once-executed skeleton (work-item 0 semantics), rewrites id builtins, and
// deletes the barriers. Expects the demote/privatize/expand phases to have
// run: cross-region dataflow must already go through memory.
WorkGroupFunction generate_workgroup_function(const KernelFunction &k,
                                              const RegionSet &rs,
                                              const LocalSize &ls,
                                              const WgOptions &opts = {});

// Post-generation sanity: valid IR, no barriers, no work-item id builtins,
// reducible control flow.
void validate_workgroup_function(const WorkGroupFunction &wg);

} // namespace wgkit

#endif // WGKIT_WG_HPP
