//===- pipeline.hpp - pass manager -------------------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_PIPELINE_HPP
#define WGKIT_PIPELINE_HPP

#include "wgkit/wg.hpp"

#include <map>
#include <string>
#include <vector>

namespace wgkit {

struct PassConfig {
  LocalSize local;
  bool hparallel = true;
  bool dynamic_local_size = false;
  int max_wg_size = 256;
  // stage names to dump ("all" dumps everything)
  std::vector<std::string> dump_after;
};

struct CompileResult {
  WorkGroupFunction wg;
  std::vector<std::pair<std::string, int64_t>> local_params; // converted locals
  std::vector<std::pair<std::string, std::string>> dumps;    // stage, IR text
  RegionSet regions;        // final region structure the loops were built from
  int duplicated_blocks = 0; // blocks added by tail duplication + peeling
};

// Stage names in execution order; `compile_from` resumes mid-pipeline on a
// re-parsed dump of the named stage.
const std::vector<std::string> &pipeline_stages();

CompileResult compile(const KernelFunction &k, const PassConfig &cfg);
CompileResult compile_from(const std::string &stage, const KernelFunction &k,
                           const PassConfig &cfg);

std::string summary_json(const CompileResult &r);

} // namespace wgkit

#endif // WGKIT_PIPELINE_HPP
