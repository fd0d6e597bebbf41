//===- exec.hpp - execution engines and memory model ------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Two engines over the same instruction evaluator:
//
//  * run_oracle executes the original kernel with real work-group barrier
//    semantics: work-items advance between barriers, every rendezvous checks
//    that all of them stopped at the same barrier block, and b-loop iteration
//    counts are compared in lock-step.
//
//  * run_compiled executes a generated work-group function as a plain
//    single-threaded program; barriers and work-item builtins must have been
//    compiled away.
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_EXEC_HPP
#define WGKIT_EXEC_HPP

#include "wgkit/ir.hpp"

#include <array>
#include <map>
#include <string>
#include <vector>

namespace wgkit {

struct TrapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct LockStepError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Internal-invariant failures: residual barriers in compiled code, budget
// exhaustion, malformed launches.
struct ExecError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TypedBuffer {
  ScalarKind elem = ScalarKind::I32;
  std::vector<uint64_t> data; // scalar bit patterns

  Scalar get(int64_t i) const {
    Scalar s;
    s.kind = elem;
    s.bits = data[size_t(i)];
    return s;
  }
  void set(int64_t i, Scalar s) { data[size_t(i)] = s.bits; }
};

struct MemoryImage {
  std::vector<std::string> names;
  std::vector<TypedBuffer> buffers;

  int add_buffer(const std::string &name, ScalarKind elem, int64_t count);
  int find(const std::string &name) const; // -1 if absent
  TypedBuffer &operator[](const std::string &name);
  const TypedBuffer &operator[](const std::string &name) const;
  bool bit_equal(const MemoryImage &o) const;
};

struct Launch {
  LocalSize local;
  std::array<int, 3> num_groups{1, 1, 1};
  // Buffer params bind to image buffers of the same name unless remapped.
  std::map<std::string, std::string> buffer_binds;
  std::map<std::string, Scalar> scalar_binds;
  std::map<std::string, int64_t> local_elems; // extent of local-space params
  int64_t total_groups() const {
    return int64_t(num_groups[0]) * num_groups[1] * num_groups[2];
  }
};

struct ExecOptions {
  uint64_t schedule_seed = 0; // permutes per-round work-item service order
  bool poison_local = false;  // fill local buffers with junk instead of zero
  // Uniformity labels to validate dynamically (indexed by ValueId); a value
  // marked true must produce identical per-round write sequences in every
  // work-item.
  const std::vector<bool> *uniform_labels = nullptr;
  int64_t instruction_budget = 200'000'000;
};

struct WiLoopInvocation {
  int region_id = -1;
  int64_t trips = 0;
  bool inside_kernel_loop = false;
};

struct ExecResult {
  MemoryImage mem;
  // Final contents of local-space buffers after each group, in group order.
  std::vector<std::vector<TypedBuffer>> local_states;
  int uniform_violations = 0;
  // run_compiled only: one entry per completed work-item loop invocation.
  std::vector<WiLoopInvocation> wi_loop_invocations;
};

ExecResult run_oracle(const KernelFunction &k, const Launch &launch,
                      const MemoryImage &input, const ExecOptions &opts = {});

ExecResult run_compiled(const KernelFunction &wg, const Launch &launch,
                        const MemoryImage &input, const ExecOptions &opts = {});

// Scalar arithmetic shared by both engines. Integer ops wrap modulo 2^32,
// shifts mask the amount to 5 bits, division by zero traps.
Scalar eval_binop(Opcode op, Scalar a, Scalar b);
Scalar eval_cmp(Opcode op, Scalar a, Scalar b);

} // namespace wgkit

#endif // WGKIT_EXEC_HPP
