//===- kernelgen.hpp - randomized kernel generator ---------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_KERNELGEN_HPP
#define WGKIT_KERNELGEN_HPP

#include "wgkit/exec.hpp"
#include "wgkit/ir.hpp"

namespace wgkit {

// Generated kernels are barrier-legal by construction: barriers appear at
// the top level or under branch conditions derived only from kernel scalar
// arguments and constants, so every work-item takes the same path to each
// barrier. Stores only target the work-item's own slot; loads from slots
// other work-items own happen only when no store in the current barrier
// segment touched that buffer. Loops never contain explicit barriers.
struct GenConfig {
  int dims = 1;
  int barriers = 2;            // barrier segments to aim for
  double cond_barrier_prob = 0.4;
  int max_loop_depth = 2;
  bool multi_ret = false;      // allow early uniform returns
  int max_stmts = 24;          // overall statement budget
};

KernelFunction generate_random_kernel(uint64_t seed, const GenConfig &cfg = {});

// Deterministic launch and memory image for a generated kernel, using its
// fixed parameter convention (tab/ftab/out/fout/scr/a/b).
Launch make_launch(const KernelFunction &k, LocalSize local,
                   std::array<int, 3> groups, uint64_t seed);
MemoryImage make_image(const KernelFunction &k, const Launch &launch,
                       uint64_t seed);

} // namespace wgkit

#endif // WGKIT_KERNELGEN_HPP
