//===- pipeline.cc - pass manager ---------------------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/pipeline.hpp"

#include <algorithm>
#include <sstream>

namespace wgkit {

const std::vector<std::string> &pipeline_stages() {
  static const std::vector<std::string> stages = {
      "normalize",      "convert-locals", "canonicalize-loops",
      "loop-barriers",  "hparallel",      "canonicalize-barriers",
      "tail-dup",       "peel",           "demote-phis",
      "privatize",      "merge-uniform",  "expand-allocas",
      "wg",             "cleanup",
  };
  return stages;
}

namespace {

struct Ctx {
  PassConfig cfg;
  CompileResult res;
  KernelFunction k;
  RegionSet rs;
  bool have_regions = false;

  void dump(const std::string &stage) {
    bool want = false;
    for (const auto &d : cfg.dump_after)
      if (d == stage || d == "all")
        want = true;
    if (want)
      res.dumps.emplace_back(stage, print_kernel(k));
  }
};

void run_stage(Ctx &c, const std::string &stage) {
  WgOptions wopts;
  wopts.dynamic_local_size = c.cfg.dynamic_local_size;
  wopts.max_wg_size = c.cfg.max_wg_size;

  try {
    if (stage == "normalize") {
      c.k = normalize_single_exit(c.k);
    } else if (stage == "convert-locals") {
      auto conv = convert_automatic_locals(c.k);
      c.k = std::move(conv.fn);
      for (auto &p : conv.added_params)
        c.res.local_params.push_back(p);
    } else if (stage == "canonicalize-loops") {
      c.k = canonicalize_loops(c.k);
    } else if (stage == "loop-barriers") {
      c.k = insert_bloop_barriers(c.k);
    } else if (stage == "hparallel") {
      if (c.cfg.hparallel)
        c.k = horizontal_parallelize(c.k, analyze_uniformity(c.k));
    } else if (stage == "canonicalize-barriers") {
      c.k = canonicalize_barriers(c.k);
    } else if (stage == "tail-dup") {
      size_t before = c.k.num_live_blocks();
      c.k = tail_duplicate(c.k);
      c.res.duplicated_blocks += int(c.k.num_live_blocks()) - int(before);
    } else if (stage == "peel") {
      size_t before = c.k.num_live_blocks();
      c.k = peel_first_iteration(c.k, form_parallel_regions(c.k));
      c.res.duplicated_blocks += int(c.k.num_live_blocks()) - int(before);
    } else if (stage == "demote-phis") {
      c.k = demote_boundary_phis(c.k, form_parallel_regions(c.k), c.cfg.local,
                                 wopts);
    } else if (stage == "privatize") {
      c.rs = form_parallel_regions(c.k);
      c.have_regions = true;
      c.k = privatize_variables(c.k, c.rs, c.cfg.local, wopts);
    } else if (stage == "merge-uniform") {
      c.k = merge_uniform_variables(c.k, analyze_uniformity(c.k));
    } else if (stage == "expand-allocas") {
      c.k = expand_private_allocas(c.k, c.cfg.local, wopts);
    } else if (stage == "wg") {
      if (!c.have_regions) {
        c.rs = form_parallel_regions(c.k);
        c.have_regions = true;
      }
      c.res.regions = c.rs;
      c.res.wg =
          generate_workgroup_function(c.k, c.res.regions, c.cfg.local, wopts);
      c.k = c.res.wg.fn;
    } else if (stage == "cleanup") {
      c.k = cleanup_redundancy(c.k);
      c.res.wg.fn = c.k;
      validate_workgroup_function(c.res.wg);
    } else {
      throw ValidationError("unknown pipeline stage " + stage);
    }
  } catch (const ValidationError &e) {
    throw ValidationError("[" + stage + "] " + e.what());
  }
  c.dump(stage);
}

} // namespace

CompileResult compile(const KernelFunction &k, const PassConfig &cfg) {
  return compile_from(pipeline_stages().front(), k, cfg);
}

CompileResult compile_from(const std::string &stage, const KernelFunction &k,
                           const PassConfig &cfg) {
  auto &stages = pipeline_stages();
  auto it = std::find(stages.begin(), stages.end(), stage);
  if (it == stages.end())
    throw ValidationError("unknown pipeline stage " + stage);
  Ctx c;
  c.cfg = cfg;
  c.k = k;
  for (; it != stages.end(); ++it)
    run_stage(c, *it);
  return std::move(c.res);
}

std::string summary_json(const CompileResult &r) {
  std::ostringstream os;
  const auto &wg = r.wg;
  bool any_nested = false;
  // a work-item loop inside a kernel loop: some parallel latch sits inside a
  // loop with a non-annotated latch
  {
    const KernelFunction &k = wg.fn;
    auto loops = find_loops(k);
    for (const auto &outer : loops) {
      bool outer_annotated = false;
      for (BlockId l : outer.latches)
        if (k.block(l).term.parallel_loop_id >= 0)
          outer_annotated = true;
      if (outer_annotated)
        continue;
      for (const auto &inner : loops) {
        if (inner.header == outer.header)
          continue;
        for (BlockId l : inner.latches)
          if (k.block(l).term.parallel_loop_id >= 0 && outer.contains(l))
            any_nested = true;
      }
    }
  }
  os << "{\n";
  os << "  \"region_count\": " << r.regions.regions.size() << ",\n";
  os << "  \"context_array_count\": " << wg.context_arrays.size() << ",\n";
  os << "  \"uniform_slot_count\": " << wg.uniform_slots.size() << ",\n";
  os << "  \"phi_slot_count\": " << wg.phi_slots.size() << ",\n";
  os << "  \"duplicated_block_count\": " << r.duplicated_blocks << ",\n";
  os << "  \"wi_loop_count\": " << wg.wi_loops.size() << ",\n";
  os << "  \"wi_loop_inside_kernel_loop\": " << (any_nested ? "true" : "false")
     << "\n";
  os << "}\n";
  return os.str();
}

} // namespace wgkit
