//===- exec.cc - oracle and compiled-function interpreters -------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/exec.hpp"

#include "wgkit/barriers.hpp"
#include "wgkit/cfg.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <random>
#include <set>

namespace wgkit {

int MemoryImage::add_buffer(const std::string &name, ScalarKind elem, int64_t count) {
  names.push_back(name);
  buffers.push_back(TypedBuffer{elem, std::vector<uint64_t>(size_t(count), 0)});
  return int(buffers.size()) - 1;
}

int MemoryImage::find(const std::string &name) const {
  for (size_t i = 0; i < names.size(); ++i)
    if (names[i] == name)
      return int(i);
  return -1;
}

TypedBuffer &MemoryImage::operator[](const std::string &name) {
  int i = find(name);
  if (i < 0)
    throw ExecError("no buffer named " + name);
  return buffers[i];
}

const TypedBuffer &MemoryImage::operator[](const std::string &name) const {
  int i = find(name);
  if (i < 0)
    throw ExecError("no buffer named " + name);
  return buffers[i];
}

bool MemoryImage::bit_equal(const MemoryImage &o) const {
  if (names.size() != o.names.size())
    return false;
  for (size_t i = 0; i < names.size(); ++i) {
    int j = o.find(names[i]);
    if (j < 0 || buffers[i].elem != o.buffers[j].elem ||
        buffers[i].data != o.buffers[j].data)
      return false;
  }
  return true;
}

Scalar eval_binop(Opcode op, Scalar a, Scalar b) {
  ScalarKind k = a.kind;
  if (k == ScalarKind::I32) {
    uint32_t x = uint32_t(a.bits), y = uint32_t(b.bits);
    uint32_t r = 0;
    switch (op) {
    case Opcode::Add: r = x + y; break;
    case Opcode::Sub: r = x - y; break;
    case Opcode::Mul: r = x * y; break;
    case Opcode::Div:
      if (y == 0)
        throw TrapError("integer division by zero");
      if (int32_t(x) == INT32_MIN && int32_t(y) == -1)
        r = uint32_t(INT32_MIN); // wraps
      else
        r = uint32_t(int32_t(x) / int32_t(y));
      break;
    case Opcode::Rem:
      if (y == 0)
        throw TrapError("integer remainder by zero");
      if (int32_t(x) == INT32_MIN && int32_t(y) == -1)
        r = 0;
      else
        r = uint32_t(int32_t(x) % int32_t(y));
      break;
    case Opcode::And: r = x & y; break;
    case Opcode::Or: r = x | y; break;
    case Opcode::Xor: r = x ^ y; break;
    case Opcode::Shl: r = x << (y & 31); break;
    case Opcode::Shr: r = x >> (y & 31); break;
    default: throw ExecError("bad i32 binop");
    }
    return Scalar::make_i32(int32_t(r));
  }
  if (k == ScalarKind::F32) {
    float x = a.as_f32(), y = b.as_f32(), r = 0;
    switch (op) {
    case Opcode::Add: r = x + y; break;
    case Opcode::Sub: r = x - y; break;
    case Opcode::Mul: r = x * y; break;
    case Opcode::Div: r = x / y; break;
    default: throw ExecError("bad f32 binop");
    }
    return Scalar::make_f32(r);
  }
  if (k == ScalarKind::F64) {
    double x = a.as_f64(), y = b.as_f64(), r = 0;
    switch (op) {
    case Opcode::Add: r = x + y; break;
    case Opcode::Sub: r = x - y; break;
    case Opcode::Mul: r = x * y; break;
    case Opcode::Div: r = x / y; break;
    default: throw ExecError("bad f64 binop");
    }
    return Scalar::make_f64(r);
  }
  // bool
  bool x = a.as_bool(), y = b.as_bool(), r = false;
  switch (op) {
  case Opcode::And: r = x && y; break;
  case Opcode::Or: r = x || y; break;
  case Opcode::Xor: r = x != y; break;
  default: throw ExecError("bad bool binop");
  }
  return Scalar::make_bool(r);
}

Scalar eval_cmp(Opcode op, Scalar a, Scalar b) {
  bool r = false;
  switch (a.kind) {
  case ScalarKind::I32: {
    int32_t x = a.as_i32(), y = b.as_i32();
    switch (op) {
    case Opcode::CmpEq: r = x == y; break;
    case Opcode::CmpNe: r = x != y; break;
    case Opcode::CmpLt: r = x < y; break;
    case Opcode::CmpLe: r = x <= y; break;
    case Opcode::CmpGt: r = x > y; break;
    case Opcode::CmpGe: r = x >= y; break;
    default: break;
    }
    break;
  }
  case ScalarKind::F32: {
    float x = a.as_f32(), y = b.as_f32();
    switch (op) {
    case Opcode::CmpEq: r = x == y; break;
    case Opcode::CmpNe: r = x != y; break;
    case Opcode::CmpLt: r = x < y; break;
    case Opcode::CmpLe: r = x <= y; break;
    case Opcode::CmpGt: r = x > y; break;
    case Opcode::CmpGe: r = x >= y; break;
    default: break;
    }
    break;
  }
  case ScalarKind::F64: {
    double x = a.as_f64(), y = b.as_f64();
    switch (op) {
    case Opcode::CmpEq: r = x == y; break;
    case Opcode::CmpNe: r = x != y; break;
    case Opcode::CmpLt: r = x < y; break;
    case Opcode::CmpLe: r = x <= y; break;
    case Opcode::CmpGt: r = x > y; break;
    case Opcode::CmpGe: r = x >= y; break;
    default: break;
    }
    break;
  }
  case ScalarKind::Bool: {
    bool x = a.as_bool(), y = b.as_bool();
    r = op == Opcode::CmpEq ? x == y : x != y;
    break;
  }
  }
  return Scalar::make_bool(r);
}

namespace {

constexpr uint64_t kPoisonBits = 0x5a5a5a5a5a5a5a5aull;

struct RtVal {
  bool is_ptr = false;
  Scalar s;
  int buf = -1;
};

struct Arena {
  std::vector<TypedBuffer> bufs;
  std::vector<std::string> persistent_names; // names for image-backed buffers

  int alloc(ScalarKind elem, int64_t n, uint64_t fill) {
    bufs.push_back(TypedBuffer{elem, std::vector<uint64_t>(size_t(n), fill)});
    persistent_names.emplace_back();
    return int(bufs.size()) - 1;
  }
};

struct GroupContext {
  std::array<int, 3> group_id{0, 0, 0};
  LocalSize local;
};

// Per-work-item view used by the builtin evaluator.
struct WiContext {
  std::array<int, 3> lid{0, 0, 0};
};

Scalar eval_builtin(const Instruction &in, const GroupContext &g, const WiContext &w) {
  switch (in.op) {
  case Opcode::GetLocalId:
    return Scalar::make_i32(w.lid[size_t(in.dim)]);
  case Opcode::GetGlobalId:
    return Scalar::make_i32(g.group_id[size_t(in.dim)] * g.local.dim(in.dim) +
                            w.lid[size_t(in.dim)]);
  case Opcode::GetLocalSize:
    return Scalar::make_i32(g.local.dim(in.dim));
  case Opcode::GetGroupId:
    return Scalar::make_i32(g.group_id[size_t(in.dim)]);
  case Opcode::GetFlatLocalId:
    return Scalar::make_i32((w.lid[2] * g.local.y + w.lid[1]) * g.local.x + w.lid[0]);
  default:
    throw ExecError("not a builtin");
  }
}

struct EngineState {
  const KernelFunction &k;
  const Launch &launch;
  const ExecOptions &opts;
  Arena arena;
  int64_t budget;

  EngineState(const KernelFunction &kf, const Launch &l, const ExecOptions &o)
      : k(kf), launch(l), opts(o), budget(o.instruction_budget) {}

  void charge() {
    if (--budget < 0)
      throw ExecError("instruction budget exhausted (runaway kernel?)");
  }

  // Copies the input image into the arena; returns value bindings for params
  // other than local-space ones (those are bound per group).
  std::vector<RtVal> bind_params(const MemoryImage &input) {
    for (size_t i = 0; i < input.buffers.size(); ++i) {
      arena.bufs.push_back(input.buffers[i]);
      arena.persistent_names.push_back(input.names[i]);
    }
    std::vector<RtVal> binds(k.params.size());
    for (size_t p = 0; p < k.params.size(); ++p) {
      const Param &pa = k.params[p];
      RtVal v;
      switch (pa.space) {
      case AddressSpace::Value: {
        auto it = launch.scalar_binds.find(pa.name);
        if (it == launch.scalar_binds.end())
          throw ExecError("no scalar bound to param " + pa.name);
        if (it->second.kind != pa.elem)
          throw ExecError("scalar bound to " + pa.name + " has the wrong type");
        v.s = it->second;
        break;
      }
      case AddressSpace::Global:
      case AddressSpace::Constant: {
        std::string bname = pa.name;
        if (auto it = launch.buffer_binds.find(pa.name); it != launch.buffer_binds.end())
          bname = it->second;
        int h = -1;
        for (size_t i = 0; i < arena.persistent_names.size(); ++i)
          if (arena.persistent_names[i] == bname)
            h = int(i);
        if (h < 0)
          throw ExecError("no buffer named " + bname + " for param " + pa.name);
        if (arena.bufs[size_t(h)].elem != pa.elem)
          throw ExecError("buffer " + bname + " element type mismatch");
        v.is_ptr = true;
        v.buf = h;
        break;
      }
      case AddressSpace::Local:
        v.buf = -1; // bound per group
        v.is_ptr = true;
        break;
      default:
        throw ExecError("bad param space");
      }
      binds[p] = v;
    }
    return binds;
  }

  // Allocates this group's local buffers into the param binding vector.
  std::vector<int> bind_locals(std::vector<RtVal> &binds) {
    std::vector<int> handles;
    uint64_t fill = opts.poison_local ? kPoisonBits : 0;
    for (size_t p = 0; p < k.params.size(); ++p) {
      const Param &pa = k.params[p];
      if (pa.space != AddressSpace::Local)
        continue;
      auto it = launch.local_elems.find(pa.name);
      if (it == launch.local_elems.end())
        throw ExecError("no local size bound to param " + pa.name);
      uint64_t f = fill;
      if (pa.elem == ScalarKind::F32)
        f &= 0xffffffffull;
      binds[p].buf = arena.alloc(pa.elem, it->second, opts.poison_local ? f : 0);
      handles.push_back(binds[p].buf);
    }
    return handles;
  }

  ExecResult finish(std::vector<std::vector<TypedBuffer>> local_states) {
    ExecResult res;
    for (size_t i = 0; i < arena.bufs.size(); ++i) {
      if (!arena.persistent_names[i].empty()) {
        res.mem.names.push_back(arena.persistent_names[i]);
        res.mem.buffers.push_back(std::move(arena.bufs[i]));
      }
    }
    res.local_states = std::move(local_states);
    return res;
  }

  Scalar load(const RtVal &ptr, Scalar idx, AddressSpace space) {
    check_ptr(ptr, space);
    const TypedBuffer &b = arena.bufs[size_t(ptr.buf)];
    int64_t i = idx.as_i32();
    if (i < 0 || size_t(i) >= b.data.size())
      throw TrapError("load out of bounds");
    return b.get(i);
  }

  void store(const RtVal &ptr, Scalar idx, Scalar val, AddressSpace space) {
    check_ptr(ptr, space);
    TypedBuffer &b = arena.bufs[size_t(ptr.buf)];
    int64_t i = idx.as_i32();
    if (i < 0 || size_t(i) >= b.data.size())
      throw TrapError("store out of bounds");
    b.set(i, val);
  }

  void check_ptr(const RtVal &ptr, AddressSpace) {
    if (!ptr.is_ptr || ptr.buf < 0)
      throw ExecError("dereference of a non-pointer value");
  }
};

//===----------------------------------------------------------------------===//
// Oracle engine
//===----------------------------------------------------------------------===//

struct WiState {
  std::vector<RtVal> env;
  BlockId cur = kNoBlock;
  BlockId prev = kNoBlock; // incoming edge source for phi evaluation
  size_t ip = 0;           // next body instruction
  bool done = false;
  BlockId stopped_at = kNoBlock; // barrier block of the last pause
  WiContext ctx;
  std::vector<int64_t> loop_trips; // per loop index, back edges taken
  // per-round write log for dynamically checked uniform values; work-items
  // may execute a uniform definition different numbers of times (divergent
  // arms, varying-trip loops), so traces compare as prefixes per value
  std::map<ValueId, std::vector<Scalar>> uniform_log;
};

struct OracleEngine {
  EngineState st;
  const std::vector<LoopInfo> loops;
  const std::vector<bool> *uniform;

  OracleEngine(const KernelFunction &k, const Launch &l, const ExecOptions &o)
      : st(k, l, o), loops(find_loops(k)), uniform(o.uniform_labels) {}

  int uniform_violations = 0;

  ExecResult run(const MemoryImage &input) {
    auto param_binds = st.bind_params(input);
    std::vector<std::vector<TypedBuffer>> local_states;

    for (int gz = 0; gz < st.launch.num_groups[2]; ++gz)
      for (int gy = 0; gy < st.launch.num_groups[1]; ++gy)
        for (int gx = 0; gx < st.launch.num_groups[0]; ++gx) {
          auto binds = param_binds;
          auto local_handles = st.bind_locals(binds);
          GroupContext g{{gx, gy, gz}, st.launch.local};
          run_group(g, binds);
          std::vector<TypedBuffer> snap;
          for (int h : local_handles)
            snap.push_back(st.arena.bufs[size_t(h)]);
          local_states.push_back(std::move(snap));
        }

    auto res = st.finish(std::move(local_states));
    res.uniform_violations = uniform_violations;
    return res;
  }

  void run_group(const GroupContext &g, const std::vector<RtVal> &binds) {
    const KernelFunction &k = st.k;
    int64_t n = st.launch.local.product();
    std::vector<WiState> wis(static_cast<size_t>(n));
    for (int64_t f = 0; f < n; ++f) {
      WiState &w = wis[size_t(f)];
      w.env.assign(k.values.size(), RtVal{});
      for (size_t p = 0; p < k.params.size(); ++p)
        w.env[k.params[p].value] = binds[p];
      w.cur = k.entry;
      w.ctx.lid = {int(f % g.local.x), int((f / g.local.x) % g.local.y),
                   int(f / (int64_t(g.local.x) * g.local.y))};
      w.loop_trips.assign(loops.size(), 0);
    }

    std::mt19937_64 sched(st.opts.schedule_seed * 0x9e3779b97f4a7c15ull + 1);
    std::vector<size_t> order(static_cast<size_t>(n));
    for (size_t i = 0; i < order.size(); ++i)
      order[i] = i;

    for (int round = 0;; ++round) {
      if (st.opts.schedule_seed != 0)
        std::shuffle(order.begin(), order.end(), sched);
      for (size_t i : order)
        if (!wis[i].done)
          advance_to_barrier(g, wis[i]);

      // Rendezvous: everyone done, or everyone paused at the same barrier.
      int64_t done = 0;
      BlockId at = kNoBlock;
      bool mixed = false;
      for (auto &w : wis) {
        if (w.done) {
          ++done;
          continue;
        }
        if (at == kNoBlock)
          at = w.stopped_at;
        else if (w.stopped_at != at)
          mixed = true;
      }
      if (done == n)
        break;
      if (done != 0 || mixed)
        throw DivergenceError(
            "work-items diverged: not all reached the same barrier");

      check_lockstep(wis, at);
      check_uniform_logs(wis);
      for (auto &w : wis)
        w.uniform_log.clear();
    }
    check_uniform_logs(wis);
  }

  // All live work-items stopped at barrier block `at`: iteration counters of
  // every loop containing that barrier must agree (b-loop lock-step rule).
  void check_lockstep(const std::vector<WiState> &wis, BlockId at) {
    for (size_t li = 0; li < loops.size(); ++li) {
      if (!loops[li].contains(at))
        continue;
      for (const auto &w : wis)
        if (w.loop_trips[li] != wis[0].loop_trips[li])
          throw LockStepError("b-loop iteration counts diverged at barrier " +
                              st.k.block(at).name);
    }
  }

  void check_uniform_logs(const std::vector<WiState> &wis) {
    if (!uniform)
      return;
    for (size_t i = 1; i < wis.size(); ++i) {
      for (const auto &[v, trace] : wis[i].uniform_log) {
        auto it = wis[0].uniform_log.find(v);
        if (it == wis[0].uniform_log.end())
          continue;
        size_t n = std::min(trace.size(), it->second.size());
        for (size_t j = 0; j < n; ++j)
          if (!(trace[j] == it->second[j])) {
            ++uniform_violations;
            return;
          }
      }
    }
  }

  void log_write(WiState &w, ValueId v, Scalar s) {
    if (uniform && v < uniform->size() && (*uniform)[v])
      w.uniform_log[v].push_back(s);
  }

  // Runs one work-item until it executes a barrier instruction or returns.
  void advance_to_barrier(const GroupContext &g, WiState &w) {
    const KernelFunction &k = st.k;
    for (;;) {
      const BasicBlock &bb = k.block(w.cur);

      if (w.ip == 0 && !bb.phis.empty()) {
        // Parallel phi assignment on block entry.
        std::vector<Scalar> vals(bb.phis.size());
        for (size_t i = 0; i < bb.phis.size(); ++i) {
          bool found = false;
          for (const PhiIncoming &pi : bb.phis[i].incoming)
            if (pi.pred == w.prev) {
              vals[i] = as_scalar(w.env[pi.value]);
              found = true;
              break;
            }
          if (!found)
            throw ExecError("phi has no entry for the taken edge");
        }
        for (size_t i = 0; i < bb.phis.size(); ++i) {
          w.env[bb.phis[i].result].is_ptr = false;
          w.env[bb.phis[i].result].s = vals[i];
          log_write(w, bb.phis[i].result, vals[i]);
        }
      }

      bool paused = false;
      while (w.ip < bb.body.size()) {
        const Instruction &in = bb.body[w.ip];
        st.charge();
        ++w.ip;
        if (in.op == Opcode::Barrier) {
          w.stopped_at = w.cur;
          paused = true;
          break;
        }
        exec_instr(g, w, in);
      }
      if (paused)
        return;

      // Terminator
      st.charge();
      const Terminator &t = bb.term;
      if (t.kind == Terminator::Kind::Ret) {
        w.done = true;
        return;
      }
      BlockId next;
      if (t.kind == Terminator::Kind::Br) {
        next = t.succ[0];
      } else {
        bool c = as_scalar(w.env[t.cond]).as_bool();
        next = c ? t.succ[0] : t.succ[1];
      }
      for (size_t li = 0; li < loops.size(); ++li)
        if (loops[li].header == next &&
            std::find(loops[li].latches.begin(), loops[li].latches.end(), w.cur) !=
                loops[li].latches.end())
          ++w.loop_trips[li];
      w.prev = w.cur;
      w.cur = next;
      w.ip = 0;
    }
  }

  Scalar as_scalar(const RtVal &v) {
    if (v.is_ptr)
      throw ExecError("pointer used as scalar");
    return v.s;
  }

  void exec_instr(const GroupContext &g, WiState &w, const Instruction &in) {
    auto set = [&](RtVal v) {
      w.env[in.result] = v;
      if (!v.is_ptr)
        log_write(w, in.result, v.s);
    };
    auto sc = [&](ValueId v) { return as_scalar(w.env[v]); };

    switch (in.op) {
    case Opcode::Const:
      set(RtVal{false, in.lit, -1});
      break;
    case Opcode::Select:
      set(RtVal{false, sc(in.operands[0]).as_bool() ? sc(in.operands[1])
                                                    : sc(in.operands[2]),
                -1});
      break;
    case Opcode::Load:
      set(RtVal{false, st.load(w.env[in.operands[0]], sc(in.operands[1]), in.space),
                -1});
      break;
    case Opcode::Store:
      st.store(w.env[in.operands[1]], sc(in.operands[2]), sc(in.operands[0]),
               in.space);
      break;
    case Opcode::AllocaPrivate: {
      RtVal v;
      v.is_ptr = true;
      v.buf = st.arena.alloc(in.ty, in.count, 0);
      set(v);
      break;
    }
    case Opcode::AllocaLocal:
      throw ExecError("alloca_local must be converted to a parameter before "
                      "execution");
    case Opcode::GetLocalId:
    case Opcode::GetGlobalId:
    case Opcode::GetLocalSize:
    case Opcode::GetGroupId:
    case Opcode::GetFlatLocalId:
      set(RtVal{false, eval_builtin(in, g, w.ctx), -1});
      break;
    default:
      if (is_binop(in.op))
        set(RtVal{false, eval_binop(in.op, sc(in.operands[0]), sc(in.operands[1])), -1});
      else if (is_cmp(in.op))
        set(RtVal{false, eval_cmp(in.op, sc(in.operands[0]), sc(in.operands[1])), -1});
      else
        throw ExecError("unexpected opcode in oracle");
    }
  }
};

//===----------------------------------------------------------------------===//
// Compiled-function engine
//===----------------------------------------------------------------------===//

struct CompiledEngine {
  EngineState st;
  std::vector<LoopInfo> loops;
  // One record per work-item loop nest (grouped by region id). Body
  // instances funnel through the innermost latch block exactly once each;
  // the nest invocation ends when the outermost latch exits.
  struct NestInfo {
    int region_id = -1;
    BlockId innermost = kNoBlock; // executions counted here
    BlockId outermost = kNoBlock; // exit edge closes the invocation
    BlockId outer_header = kNoBlock;
    bool inside_kernel_loop = false;
    int64_t counter = 0;
  };
  std::vector<NestInfo> nests;
  std::map<BlockId, int> innermost_of, outermost_of;

  const LoopInfo *loop_of_latch(BlockId b) const {
    for (const auto &l2 : loops)
      if (std::find(l2.latches.begin(), l2.latches.end(), b) != l2.latches.end())
        return &l2;
    return nullptr;
  }

  CompiledEngine(const KernelFunction &k, const Launch &l, const ExecOptions &o)
      : st(k, l, o), loops(find_loops(k)) {
    std::map<int, std::vector<BlockId>> by_region;
    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      const BasicBlock &bb = k.blocks[b];
      if (!bb.dead && bb.term.parallel_loop_id >= 0)
        by_region[bb.term.parallel_loop_id].push_back(b);
    }
    for (auto &[region, latches] : by_region) {
      NestInfo info;
      info.region_id = region;
      // innermost: its loop contains no other latch of the nest;
      // outermost: contained in no other loop of the nest
      for (BlockId b : latches) {
        const LoopInfo *lb = loop_of_latch(b);
        if (!lb)
          continue;
        bool contains_other = false, contained = false;
        for (BlockId b2 : latches) {
          if (b2 == b)
            continue;
          const LoopInfo *l2 = loop_of_latch(b2);
          if (l2 && lb->contains(b2))
            contains_other = true;
          if (l2 && l2->contains(b))
            contained = true;
        }
        if (!contains_other)
          info.innermost = b;
        if (!contained) {
          info.outermost = b;
          info.outer_header = lb->header;
        }
      }
      if (info.innermost == kNoBlock || info.outermost == kNoBlock)
        continue;
      // statically nested inside a kernel (non-annotated) loop?
      for (const auto &l2 : loops) {
        if (!l2.contains(info.outermost) || l2.header == info.outer_header)
          continue;
        bool annotated = false;
        for (BlockId lt : l2.latches)
          if (st.k.block(lt).term.parallel_loop_id >= 0)
            annotated = true;
        if (!annotated)
          info.inside_kernel_loop = true;
      }
      innermost_of[info.innermost] = int(nests.size());
      outermost_of[info.outermost] = int(nests.size());
      nests.push_back(info);
    }
  }

  ExecResult run(const MemoryImage &input) {
    auto param_binds = st.bind_params(input);
    std::vector<std::vector<TypedBuffer>> local_states;
    std::vector<WiLoopInvocation> invocations;

    for (int gz = 0; gz < st.launch.num_groups[2]; ++gz)
      for (int gy = 0; gy < st.launch.num_groups[1]; ++gy)
        for (int gx = 0; gx < st.launch.num_groups[0]; ++gx) {
          auto binds = param_binds;
          auto local_handles = st.bind_locals(binds);
          GroupContext g{{gx, gy, gz}, st.launch.local};
          run_group(g, binds, invocations);
          std::vector<TypedBuffer> snap;
          for (int h : local_handles)
            snap.push_back(st.arena.bufs[size_t(h)]);
          local_states.push_back(std::move(snap));
        }

    auto res = st.finish(std::move(local_states));
    res.wi_loop_invocations = std::move(invocations);
    return res;
  }

  void run_group(const GroupContext &g, const std::vector<RtVal> &binds,
                 std::vector<WiLoopInvocation> &invocations) {
    const KernelFunction &k = st.k;
    std::vector<RtVal> env(k.values.size());
    for (size_t p = 0; p < k.params.size(); ++p)
      env[k.params[p].value] = binds[p];

    WiContext wi; // compiled functions may not use work-item builtins
    BlockId cur = k.entry, prev = kNoBlock;
    for (;;) {
      const BasicBlock &bb = k.block(cur);
      if (!bb.phis.empty()) {
        std::vector<Scalar> vals(bb.phis.size());
        for (size_t i = 0; i < bb.phis.size(); ++i) {
          bool found = false;
          for (const PhiIncoming &pi : bb.phis[i].incoming)
            if (pi.pred == prev) {
              if (env[pi.value].is_ptr)
                throw ExecError("pointer-typed phi");
              vals[i] = env[pi.value].s;
              found = true;
              break;
            }
          if (!found)
            throw ExecError("phi has no entry for the taken edge");
        }
        for (size_t i = 0; i < bb.phis.size(); ++i)
          env[bb.phis[i].result] = RtVal{false, vals[i], -1};
      }

      for (const Instruction &in : bb.body) {
        st.charge();
        switch (in.op) {
        case Opcode::Barrier:
          throw ExecError("residual barrier in compiled function");
        case Opcode::GetLocalId:
        case Opcode::GetGlobalId:
        case Opcode::GetFlatLocalId:
          throw ExecError("residual work-item builtin in compiled function");
        case Opcode::Const:
          env[in.result] = RtVal{false, in.lit, -1};
          break;
        case Opcode::Select: {
          Scalar c = scalar(env, in.operands[0]);
          env[in.result] = RtVal{
              false, c.as_bool() ? scalar(env, in.operands[1]) : scalar(env, in.operands[2]),
              -1};
          break;
        }
        case Opcode::Load:
          env[in.result] = RtVal{
              false, st.load(env[in.operands[0]], scalar(env, in.operands[1]), in.space),
              -1};
          break;
        case Opcode::Store:
          st.store(env[in.operands[1]], scalar(env, in.operands[2]),
                   scalar(env, in.operands[0]), in.space);
          break;
        case Opcode::AllocaPrivate: {
          RtVal v;
          v.is_ptr = true;
          v.buf = st.arena.alloc(in.ty, in.count, 0);
          env[in.result] = v;
          break;
        }
        case Opcode::AllocaLocal:
          throw ExecError("alloca_local must be converted before execution");
        case Opcode::GetLocalSize:
        case Opcode::GetGroupId:
          env[in.result] = RtVal{false, eval_builtin(in, g, wi), -1};
          break;
        default:
          if (is_binop(in.op))
            env[in.result] =
                RtVal{false,
                      eval_binop(in.op, scalar(env, in.operands[0]),
                                 scalar(env, in.operands[1])),
                      -1};
          else if (is_cmp(in.op))
            env[in.result] =
                RtVal{false,
                      eval_cmp(in.op, scalar(env, in.operands[0]),
                               scalar(env, in.operands[1])),
                      -1};
          else
            throw ExecError("unexpected opcode in compiled function");
        }
      }

      st.charge();
      const Terminator &t = bb.term;
      if (t.kind == Terminator::Kind::Ret)
        return;
      BlockId next = t.succ[0];
      if (t.kind == Terminator::Kind::CondBr && !scalar(env, t.cond).as_bool())
        next = t.succ[1];

      if (auto it = innermost_of.find(cur); it != innermost_of.end())
        ++nests[size_t(it->second)].counter; // one body instance completed
      if (auto it = outermost_of.find(cur); it != outermost_of.end()) {
        NestInfo &n = nests[size_t(it->second)];
        if (next != n.outer_header) { // nest invocation over
          invocations.push_back(
              WiLoopInvocation{n.region_id, n.counter, n.inside_kernel_loop});
          n.counter = 0;
        }
      }
      prev = cur;
      cur = next;
    }
  }

  Scalar scalar(const std::vector<RtVal> &env, ValueId v) {
    if (env[v].is_ptr)
      throw ExecError("pointer used as scalar");
    return env[v].s;
  }
};

} // namespace

ExecResult run_oracle(const KernelFunction &k, const Launch &launch,
                      const MemoryImage &input, const ExecOptions &opts) {
  // Barrier instances are identified by block id, so rendezvous checking
  // needs each barrier alone in its block.
  KernelFunction ks = canonicalize_barriers(k);
  OracleEngine e(ks, launch, opts);
  return e.run(input);
}

ExecResult run_compiled(const KernelFunction &wg, const Launch &launch,
                        const MemoryImage &input, const ExecOptions &opts) {
  CompiledEngine e(wg, launch, opts);
  return e.run(input);
}

} // namespace wgkit
