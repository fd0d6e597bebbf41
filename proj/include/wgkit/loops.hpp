//===- loops.hpp - loop canonicalization, b-loops, uniformity ---------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_LOOPS_HPP
#define WGKIT_LOOPS_HPP

#include "wgkit/cfg.hpp"
#include "wgkit/ir.hpp"

#include <vector>

namespace wgkit {

// Gives every loop a dedicated preheader, a single latch, and a single exit
// block. Irreducible control flow is rejected.
KernelFunction canonicalize_loops(const KernelFunction &k);

// Inserts the three implicit barriers around every loop that contains a
// barrier: end of the preheader, before the latch branch, and after the phi
// region of the header. Runs to a fixpoint so loops enclosing fresh barriers
// are processed too.
KernelFunction insert_bloop_barriers(const KernelFunction &k);

struct UniformityMap {
  // uniform[v]: the value provably holds the same value in every work-item.
  std::vector<bool> uniform;
  bool is_uniform(ValueId v) const { return v < uniform.size() && uniform[v]; }
};

UniformityMap analyze_uniformity(const KernelFunction &k);

// Converts barrier-free inner loops whose exit conditions and controlling
// path predicates are uniform into b-loops, so region formation interchanges
// them with the work-item loop. Non-qualifying loops are skipped.
KernelFunction horizontal_parallelize(const KernelFunction &k,
                                      const UniformityMap &u);

} // namespace wgkit

#endif // WGKIT_LOOPS_HPP
