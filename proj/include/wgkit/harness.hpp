//===- harness.hpp - oracle/compiled equivalence harness ---------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_HARNESS_HPP
#define WGKIT_HARNESS_HPP

#include "wgkit/kernelgen.hpp"
#include "wgkit/pipeline.hpp"

#include <string>
#include <vector>

namespace wgkit {

struct DiffResult {
  uint64_t seed = 0;
  int cases = 0;  // (local size, schedule) combinations executed
  bool pass = false;
  std::string detail; // failure description, empty on pass
};

struct DiffOptions {
  std::vector<int> local_sizes{1, 2, 3, 4, 8};
  std::array<int, 3> groups{2, 1, 1};
  int schedules = 3; // oracle service orders per case
  bool hparallel = true;
  bool check_uniformity = true;
  GenConfig gen;
};

// Generates the kernel for `seed`, compiles it once per local size, and
// compares the full final memory (globals and per-group locals) bit for bit
// between the oracle and the compiled engine under permuted schedules.
DiffResult diff_exec_case(uint64_t seed, const DiffOptions &opts = {});

// Runs a seed range in a parallel worker pool; results ordered by seed.
std::vector<DiffResult> diff_exec_range(uint64_t first, uint64_t last,
                                        const DiffOptions &opts = {});

} // namespace wgkit

#endif // WGKIT_HARNESS_HPP
