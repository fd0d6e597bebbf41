//===- kernelgen.cc - randomized kernel generator -----------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/kernelgen.hpp"

#include <random>

namespace wgkit {

namespace {

struct Gen {
  std::mt19937_64 rng;
  GenConfig cfg;
  KernelFunction k;
  BlockId cur = kNoBlock;
  int stmt_budget = 0;
  int name_counter = 0;

  // value pools; `uniform` mirrors values derived only from args/constants
  struct PoolVal {
    ValueId v;
    bool uniform;
  };
  std::vector<PoolVal> ints, floats, bools;

  // parameter convention
  ValueId p_tab, p_ftab, p_out, p_fout, p_scr, p_a, p_b;
  ValueId own_global = kNoValue; // this work-item's slot in out/fout
  ValueId own_local = kNoValue;  // flat local id
  ValueId group_base = kNoValue;
  ValueId wg_size = kNoValue;    // local size product (constant-built)

  // Per-segment regime: a frozen buffer takes no stores, so loads may read
  // any slot; a writable buffer takes own-slot stores and own-slot loads
  // only. This keeps every region free of cross-work-item races no matter
  // how the oracle schedules the items.
  bool frozen_out = true, frozen_scr = true;
  bool writable_fout = true;

  void reroll_regimes() {
    frozen_out = chance(0.4);
    frozen_scr = chance(0.4);
    writable_fout = true;
  }

  int irand(int lo, int hi) {
    return int(std::uniform_int_distribution<int>(lo, hi)(rng));
  }
  bool chance(double p) {
    return std::uniform_real_distribution<double>(0, 1)(rng) < p;
  }
  std::string fresh(const char *base) {
    return std::string(base) + std::to_string(name_counter++);
  }

  ValueId emit(Instruction in, const char *base, Type ty) {
    in.result = k.new_value(fresh(base), ty);
    k.block(cur).body.push_back(in);
    return in.result;
  }

  ValueId iconst(int32_t v) {
    Instruction in;
    in.op = Opcode::Const;
    in.ty = ScalarKind::I32;
    in.lit = Scalar::make_i32(v);
    return emit(in, "c", Type::scalar(ScalarKind::I32));
  }
  ValueId fconst(float v) {
    Instruction in;
    in.op = Opcode::Const;
    in.ty = ScalarKind::F32;
    in.lit = Scalar::make_f32(v);
    return emit(in, "fc", Type::scalar(ScalarKind::F32));
  }
  ValueId binop(Opcode op, ValueId a, ValueId b, ScalarKind kind) {
    Instruction in;
    in.op = op;
    in.operands = {a, b};
    return emit(in, kind == ScalarKind::F32 ? "f" : "t", Type::scalar(kind));
  }
  ValueId cmp(Opcode op, ValueId a, ValueId b) {
    Instruction in;
    in.op = op;
    in.operands = {a, b};
    return emit(in, "p", Type::scalar(ScalarKind::Bool));
  }
  ValueId load(AddressSpace space, ValueId ptr, ValueId idx, ScalarKind kind) {
    Instruction in;
    in.op = Opcode::Load;
    in.space = space;
    in.operands = {ptr, idx};
    return emit(in, "ld", Type::scalar(kind));
  }
  void store(AddressSpace space, ValueId val, ValueId ptr, ValueId idx) {
    Instruction in;
    in.op = Opcode::Store;
    in.space = space;
    in.operands = {val, ptr, idx};
    k.block(cur).body.push_back(in);
  }
  void barrier() {
    Instruction in;
    in.op = Opcode::Barrier;
    k.block(cur).body.push_back(in);
  }

  PoolVal pick(const std::vector<PoolVal> &pool, bool need_uniform = false) {
    std::vector<const PoolVal *> c;
    for (const auto &pv : pool)
      if (!need_uniform || pv.uniform)
        c.push_back(&pv);
    return *c[size_t(irand(0, int(c.size()) - 1))];
  }

  // index in [0, bound) from an arbitrary i32
  ValueId bounded(ValueId x, ValueId bound) {
    ValueId nonneg = binop(Opcode::And, x, iconst(0x7fffffff), ScalarKind::I32);
    return binop(Opcode::Rem, nonneg, bound, ScalarKind::I32);
  }

  void stmt_arith() {
    if (chance(0.35) && floats.size() >= 2) {
      PoolVal a = pick(floats), b = pick(floats);
      Opcode ops[] = {Opcode::Add, Opcode::Sub, Opcode::Mul, Opcode::Div};
      ValueId v = binop(ops[irand(0, 3)], a.v, b.v, ScalarKind::F32);
      floats.push_back({v, a.uniform && b.uniform});
      return;
    }
    PoolVal a = pick(ints), b = pick(ints);
    switch (irand(0, 7)) {
    case 0:
      ints.push_back({binop(Opcode::Add, a.v, b.v, ScalarKind::I32),
                      a.uniform && b.uniform});
      break;
    case 1:
      ints.push_back({binop(Opcode::Sub, a.v, b.v, ScalarKind::I32),
                      a.uniform && b.uniform});
      break;
    case 2:
      ints.push_back({binop(Opcode::Mul, a.v, b.v, ScalarKind::I32),
                      a.uniform && b.uniform});
      break;
    case 3:
      ints.push_back({binop(Opcode::Xor, a.v, b.v, ScalarKind::I32),
                      a.uniform && b.uniform});
      break;
    case 4: {
      ValueId amt = binop(Opcode::And, b.v, iconst(7), ScalarKind::I32);
      ints.push_back({binop(irand(0, 1) ? Opcode::Shl : Opcode::Shr, a.v, amt,
                            ScalarKind::I32),
                      a.uniform && b.uniform});
      break;
    }
    case 5: {
      // division with a guarded divisor
      ValueId d0 = binop(Opcode::And, b.v, iconst(7), ScalarKind::I32);
      ValueId d1 = binop(Opcode::Add, d0, iconst(1), ScalarKind::I32);
      ints.push_back({binop(irand(0, 1) ? Opcode::Div : Opcode::Rem, a.v, d1,
                            ScalarKind::I32),
                      a.uniform && b.uniform});
      break;
    }
    case 6: {
      ValueId c = cmp(Opcode(int(Opcode::CmpEq) + irand(0, 5)), a.v, b.v);
      bools.push_back({c, a.uniform && b.uniform});
      break;
    }
    default: {
      if (!bools.empty()) {
        PoolVal c = pick(bools);
        Instruction in;
        in.op = Opcode::Select;
        in.operands = {c.v, a.v, b.v};
        ValueId v = emit(in, "s", Type::scalar(ScalarKind::I32));
        ints.push_back({v, c.uniform && a.uniform && b.uniform});
      }
      break;
    }
    }
  }

  void stmt_load() {
    switch (irand(0, 3)) {
    case 0: {
      ValueId idx = binop(Opcode::And, pick(ints).v, iconst(15), ScalarKind::I32);
      ints.push_back({load(AddressSpace::Constant, p_tab, idx, ScalarKind::I32),
                      false});
      break;
    }
    case 1: {
      ValueId idx = binop(Opcode::And, pick(ints).v, iconst(15), ScalarKind::I32);
      floats.push_back(
          {load(AddressSpace::Constant, p_ftab, idx, ScalarKind::F32), false});
      break;
    }
    case 2: {
      // only frozen buffers are read at all; stored buffers stay write-only
      // until the next barrier
      if (!frozen_scr) {
        stmt_arith();
        break;
      }
      ValueId idx = chance(0.6) ? bounded(pick(ints).v, wg_size) : own_local;
      ints.push_back({load(AddressSpace::Local, p_scr, idx, ScalarKind::I32),
                      false});
      break;
    }
    default: {
      if (!frozen_out) {
        stmt_arith();
        break;
      }
      ValueId idx = own_global;
      if (chance(0.6)) {
        ValueId off = bounded(pick(ints).v, wg_size);
        idx = binop(Opcode::Add, group_base, off, ScalarKind::I32);
      }
      ints.push_back({load(AddressSpace::Global, p_out, idx, ScalarKind::I32),
                      false});
      break;
    }
    }
  }

  void stmt_store() {
    switch (irand(0, 2)) {
    case 0:
      if (frozen_out)
        stmt_arith();
      else
        store(AddressSpace::Global, pick(ints).v, p_out, own_global);
      break;
    case 1:
      store(AddressSpace::Global, pick(floats).v, p_fout, own_global);
      break;
    default:
      if (frozen_scr)
        stmt_arith();
      else
        store(AddressSpace::Local, pick(ints).v, p_scr, own_local);
      break;
    }
  }

  // if/else diamond; the condition may be varying. Barrier-free.
  void stmt_if(int depth) {
    PoolVal c = pick(bools);
    BlockId bthen = k.new_block(fresh("then"));
    BlockId belse = k.new_block(fresh("else"));
    BlockId join = k.new_block(fresh("join"));
    k.block(cur).term = Terminator::cond_br(c.v, bthen, belse);

    auto snapshot_i = ints;
    auto snapshot_f = floats;
    auto snapshot_b = bools;

    cur = bthen;
    int n1 = irand(1, 2);
    for (int i = 0; i < n1 && stmt_budget-- > 0; ++i)
      stmt(depth + 1, false);
    ValueId tv = pick(ints).v;
    BlockId then_end = cur;
    k.block(cur).term = Terminator::br(join);

    ints = snapshot_i;
    floats = snapshot_f;
    bools = snapshot_b;
    cur = belse;
    int n2 = irand(1, 2);
    for (int i = 0; i < n2 && stmt_budget-- > 0; ++i)
      stmt(depth + 1, false);
    ValueId ev = pick(ints).v;
    BlockId else_end = cur;
    k.block(cur).term = Terminator::br(join);

    ints = snapshot_i;
    floats = snapshot_f;
    bools = snapshot_b;
    cur = join;
    Phi phi;
    phi.ty = ScalarKind::I32;
    phi.result = k.new_value(fresh("m"), Type::scalar(ScalarKind::I32));
    phi.incoming = {PhiIncoming{then_end, tv}, PhiIncoming{else_end, ev}};
    k.block(join).phis.push_back(phi);
    ints.push_back({phi.result, false});
  }

  // Counted loop accumulating into a phi. Trip in [1, 4]; uniform trips make
  // the loop a horizontal-parallelization candidate.
  void stmt_loop(int depth, bool uniform_trip) {
    ValueId trip;
    PoolVal seedval = pick(ints, uniform_trip);
    ValueId masked = binop(Opcode::And, seedval.v, iconst(3), ScalarKind::I32);
    trip = binop(Opcode::Add, masked, iconst(1), ScalarKind::I32);

    ValueId zero = iconst(0);
    PoolVal acc0 = pick(ints);

    BlockId pre = cur;
    BlockId head = k.new_block(fresh("head"));
    BlockId body = k.new_block(fresh("body"));
    BlockId done = k.new_block(fresh("done"));
    k.block(pre).term = Terminator::br(head);

    Phi iphi, accphi;
    iphi.ty = ScalarKind::I32;
    iphi.result = k.new_value(fresh("i"), Type::scalar(ScalarKind::I32));
    accphi.ty = ScalarKind::I32;
    accphi.result = k.new_value(fresh("acc"), Type::scalar(ScalarKind::I32));

    cur = head;
    ValueId c = cmp(Opcode::CmpLt, iphi.result, trip);
    k.block(head).term = Terminator::cond_br(c, body, done);

    auto snapshot_i = ints;
    auto snapshot_f = floats;
    auto snapshot_b = bools;
    ints.push_back({iphi.result, seedval.uniform});
    ints.push_back({accphi.result, false});

    cur = body;
    int n = irand(1, 2);
    for (int i = 0; i < n && stmt_budget-- > 0; ++i)
      stmt(depth + 1, false);
    ValueId stepv = pick(ints).v;
    ValueId acc1 = binop(Opcode::Add, accphi.result, stepv, ScalarKind::I32);
    ValueId i1 = binop(Opcode::Add, iphi.result, iconst(1), ScalarKind::I32);
    BlockId latch = cur;
    k.block(cur).term = Terminator::br(head);

    iphi.incoming = {PhiIncoming{pre, zero}, PhiIncoming{latch, i1}};
    accphi.incoming = {PhiIncoming{pre, acc0.v}, PhiIncoming{latch, acc1}};
    k.block(head).phis.push_back(iphi);
    k.block(head).phis.push_back(accphi);

    ints = snapshot_i;
    floats = snapshot_f;
    bools = snapshot_b;
    cur = done;
    ints.push_back({accphi.result, false});
  }

  void stmt(int depth, bool allow_nesting = true) {
    int roll = irand(0, 9);
    if (roll < 4 || depth >= cfg.max_loop_depth || !allow_nesting) {
      if (roll % 3 == 0)
        stmt_load();
      else if (roll % 3 == 1 && !ints.empty())
        stmt_store();
      else
        stmt_arith();
      return;
    }
    if (roll < 6)
      stmt_if(depth);
    else if (roll < 8)
      stmt_loop(depth, true);
    else
      stmt_loop(depth, false);
  }

  // A run of statements at segment level.
  void segment(int nstmts) {
    for (int i = 0; i < nstmts && stmt_budget-- > 0; ++i)
      stmt(0);
  }

  // Conditional barrier: a uniform if whose arms synchronize. All work-items
  // agree on the condition, so the group reaches the same barrier.
  void conditional_barrier_segment() {
    PoolVal a = pick(ints, true), b = pick(ints, true);
    ValueId c = cmp(Opcode(int(Opcode::CmpEq) + irand(0, 5)), a.v, b.v);
    BlockId bthen = k.new_block(fresh("ubthen"));
    BlockId belse = k.new_block(fresh("ubelse"));
    BlockId join = k.new_block(fresh("ubjoin"));
    k.block(cur).term = Terminator::cond_br(c, bthen, belse);

    auto si = ints;
    auto sf = floats;
    auto sb = bools;
    reroll_regimes(); // one regime for both arm suffixes and the join
    cur = bthen;
    segment(irand(1, 2));
    barrier();
    segment(1);
    k.block(cur).term = Terminator::br(join);

    ints = si;
    floats = sf;
    bools = sb;
    cur = belse;
    segment(irand(1, 2));
    if (chance(0.6)) // one- or two-arm conditional barriers
      barrier();
    k.block(cur).term = Terminator::br(join);

    ints = si;
    floats = sf;
    bools = sb;
    cur = join;
  }

  KernelFunction run(uint64_t seed) {
    rng.seed(seed * 0x9e3779b97f4a7c15ull + 0xdeadbeef);
    stmt_budget = cfg.max_stmts;

    k.name = "gen" + std::to_string(seed);
    k.dims = cfg.dims;
    auto param = [&](const char *n, AddressSpace sp, ScalarKind ty) {
      ValueId v = k.new_value(n, sp == AddressSpace::Value ? Type::scalar(ty)
                                                           : Type::ptr(sp, ty));
      k.params.push_back(Param{n, sp, ty, v});
      return v;
    };
    p_tab = param("tab", AddressSpace::Constant, ScalarKind::I32);
    p_ftab = param("ftab", AddressSpace::Constant, ScalarKind::F32);
    p_out = param("out", AddressSpace::Global, ScalarKind::I32);
    p_fout = param("fout", AddressSpace::Global, ScalarKind::F32);
    p_scr = param("scr", AddressSpace::Local, ScalarKind::I32);
    p_a = param("a", AddressSpace::Value, ScalarKind::I32);
    p_b = param("b", AddressSpace::Value, ScalarKind::I32);

    cur = k.new_block("entry");
    k.entry = cur;

    // flat local id, work-group size, this item's global slot
    ValueId lx = emit_builtin(Opcode::GetLocalSize, 0);
    ValueId ly = emit_builtin(Opcode::GetLocalSize, 1);
    ValueId lz = emit_builtin(Opcode::GetLocalSize, 2);
    ValueId n0 = binop(Opcode::Mul, lx, ly, ScalarKind::I32);
    wg_size = binop(Opcode::Mul, n0, lz, ScalarKind::I32);
    own_local = emit_builtin(Opcode::GetFlatLocalId, 0);
    ValueId g = emit_builtin(Opcode::GetGroupId, 0);
    group_base = binop(Opcode::Mul, g, wg_size, ScalarKind::I32);
    own_global = binop(Opcode::Add, group_base, own_local, ScalarKind::I32);

    ints.push_back({p_a, true});
    ints.push_back({p_b, true});
    ints.push_back({own_local, false});
    ints.push_back({own_global, false});
    floats.push_back({fconst(1.5f), true});
    if (cfg.dims > 1)
      ints.push_back({emit_builtin(Opcode::GetLocalId, 1), false});
    bools.push_back({cmp(Opcode::CmpLt, p_a, p_b), true});

    reroll_regimes();
    segment(irand(2, 5));
    bool returned = false;
    for (int bi = 0; bi < cfg.barriers; ++bi) {
      if (cfg.multi_ret && chance(0.3)) {
        // early uniform return on a fresh path
        PoolVal a = pick(ints, true);
        ValueId c = cmp(Opcode::CmpLt, a.v, iconst(irand(-20, 20)));
        BlockId bret = k.new_block(fresh("early"));
        BlockId bcont = k.new_block(fresh("cont"));
        k.block(cur).term = Terminator::cond_br(c, bret, bcont);
        cur = bret;
        store(AddressSpace::Global, pick(floats).v, p_fout, own_global);
        k.block(cur).term = Terminator::ret();
        cur = bcont;
      }
      if (chance(cfg.cond_barrier_prob)) {
        conditional_barrier_segment();
      } else {
        barrier();
        reroll_regimes();
      }
      segment(irand(1, 4));
    }
    // Final observable stores. If the last segment had `out` frozen for
    // cross-item reads, a barrier keeps the closing writes race-free.
    if (frozen_out) {
      barrier();
      frozen_out = false;
    }
    store(AddressSpace::Global, pick(ints).v, p_out, own_global);
    store(AddressSpace::Global, pick(floats).v, p_fout, own_global);
    k.block(cur).term = Terminator::ret();
    (void)returned;

    validate(k);
    return std::move(k);
  }

  ValueId emit_builtin(Opcode op, int dim) {
    Instruction in;
    in.op = op;
    in.dim = dim;
    return emit(in, "w", Type::scalar(ScalarKind::I32));
  }
};

} // namespace

KernelFunction generate_random_kernel(uint64_t seed, const GenConfig &cfg) {
  Gen g;
  g.cfg = cfg;
  return g.run(seed);
}

Launch make_launch(const KernelFunction &k, LocalSize local,
                   std::array<int, 3> groups, uint64_t seed) {
  std::mt19937_64 rng(seed ^ 0x5bd1e995u);
  Launch l;
  l.local = local;
  l.num_groups = groups;
  for (const Param &p : k.params) {
    if (p.space == AddressSpace::Value)
      l.scalar_binds[p.name] =
          Scalar::make_i32(int32_t(rng() % 41) - 20);
    else if (p.space == AddressSpace::Local)
      l.local_elems[p.name] = local.product();
  }
  return l;
}

MemoryImage make_image(const KernelFunction &k, const Launch &launch,
                       uint64_t seed) {
  std::mt19937_64 rng(seed * 2654435761u + 17);
  MemoryImage m;
  int64_t slots = launch.local.product() * launch.total_groups();
  for (const Param &p : k.params) {
    if (p.space != AddressSpace::Global && p.space != AddressSpace::Constant)
      continue;
    int64_t count = p.space == AddressSpace::Constant ? 16 : slots;
    int h = m.add_buffer(p.name, p.elem, count);
    for (int64_t i = 0; i < count; ++i) {
      if (p.elem == ScalarKind::F32)
        m.buffers[h].set(i, Scalar::make_f32(float(int(rng() % 1000) - 500) / 8.0f));
      else if (p.elem == ScalarKind::F64)
        m.buffers[h].set(i, Scalar::make_f64(double(int(rng() % 1000) - 500) / 8.0));
      else if (p.elem == ScalarKind::Bool)
        m.buffers[h].set(i, Scalar::make_bool(rng() & 1));
      else
        m.buffers[h].set(i, Scalar::make_i32(int32_t(rng() % 201) - 100));
    }
  }
  return m;
}

} // namespace wgkit
