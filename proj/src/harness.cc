//===- harness.cc - oracle/compiled equivalence harness -----------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/harness.hpp"

#include "wgkit/loops.hpp"

#include <sstream>

namespace wgkit {

namespace {

bool local_states_equal(const ExecResult &a, const ExecResult &b) {
  if (a.local_states.size() != b.local_states.size())
    return false;
  for (size_t g = 0; g < a.local_states.size(); ++g) {
    if (a.local_states[g].size() != b.local_states[g].size())
      return false;
    for (size_t i = 0; i < a.local_states[g].size(); ++i)
      if (a.local_states[g][i].data != b.local_states[g][i].data)
        return false;
  }
  return true;
}

} // namespace

DiffResult diff_exec_case(uint64_t seed, const DiffOptions &opts) {
  DiffResult res;
  res.seed = seed;
  try {
    GenConfig gcfg = opts.gen;
    KernelFunction k = generate_random_kernel(seed, gcfg);
    UniformityMap u = analyze_uniformity(k);

    for (int lx : opts.local_sizes) {
      LocalSize local{lx, 1, 1};
      if (gcfg.dims >= 2)
        local.y = 2;
      if (gcfg.dims >= 3)
        local.z = 2;

      Launch launch = make_launch(k, local, opts.groups, seed);
      MemoryImage img = make_image(k, launch, seed);

      // Oracle runs under several work-item service orders; a race-free
      // kernel must not notice.
      ExecResult oracle;
      bool first = true;
      for (int s = 0; s < opts.schedules; ++s) {
        ExecOptions eo;
        eo.schedule_seed = uint64_t(s) * 7919;
        if (opts.check_uniformity)
          eo.uniform_labels = &u.uniform;
        ExecResult r = run_oracle(k, launch, img, eo);
        if (r.uniform_violations != 0) {
          res.detail = "uniformity label violated dynamically";
          return res;
        }
        if (first) {
          oracle = std::move(r);
          first = false;
        } else if (!oracle.mem.bit_equal(r.mem) || !local_states_equal(oracle, r)) {
          res.detail = "oracle result depends on the schedule (racy kernel?)";
          return res;
        }
      }

      PassConfig cfg;
      cfg.local = local;
      cfg.hparallel = opts.hparallel;
      CompileResult cr = compile(k, cfg);
      Launch cl = launch;
      for (auto &[name, count] : cr.local_params)
        cl.local_elems[name] = count;
      ExecResult compiled = run_compiled(cr.wg.fn, cl, img);

      if (!oracle.mem.bit_equal(compiled.mem)) {
        std::ostringstream os;
        os << "memory mismatch at local size " << lx;
        res.detail = os.str();
        return res;
      }
      if (!local_states_equal(oracle, compiled)) {
        std::ostringstream os;
        os << "local memory mismatch at local size " << lx;
        res.detail = os.str();
        return res;
      }
      res.cases += opts.schedules;
    }
    res.pass = true;
  } catch (const std::exception &e) {
    res.detail = e.what();
  }
  return res;
}

std::vector<DiffResult> diff_exec_range(uint64_t first, uint64_t last,
                                        const DiffOptions &opts) {
  if (last < first)
    std::swap(first, last);
  std::vector<DiffResult> out(size_t(last - first + 1));
#pragma omp parallel for schedule(dynamic)
  for (int64_t i = 0; i <= int64_t(last - first); ++i)
    out[size_t(i)] = diff_exec_case(first + uint64_t(i), opts);
  return out;
}

} // namespace wgkit
