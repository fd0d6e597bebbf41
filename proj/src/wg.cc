//===- wg.cc - work-group function generation --------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/wg.hpp"

#include "wgkit/barriers.hpp"

#include <algorithm>
#include <cassert>
#include <map>
#include <set>

namespace wgkit {

namespace {

int64_t context_extent(const LocalSize &ls, const WgOptions &opts) {
  return opts.dynamic_local_size ? opts.max_wg_size : ls.product();
}

// Inserts an alloca into the entry block's alloca prefix.
void insert_entry_alloca(KernelFunction &k, const Instruction &alloca) {
  auto &body = k.block(k.entry).body;
  size_t pos = 0;
  while (pos < body.size() && (body[pos].op == Opcode::AllocaPrivate ||
                               body[pos].op == Opcode::AllocaLocal))
    ++pos;
  body.insert(body.begin() + long(pos), alloca);
}

struct BlockCtx {
  // -1: skeleton (barrier/ret blocks), -2: shared selector, else region id
  static constexpr int kSkeleton = -1;
  static constexpr int kShared = -2;
  std::vector<int> of;

  bool is_region(BlockId b) const { return of[b] >= 0; }
  bool is_shared(BlockId b) const { return of[b] == kShared; }
};

BlockCtx classify_blocks(const KernelFunction &k, const RegionSet &rs) {
  BlockCtx ctx;
  ctx.of.assign(k.blocks.size(), BlockCtx::kSkeleton);
  for (const auto &r : rs.regions)
    for (BlockId b : r.blocks) {
      if (ctx.of[b] == BlockCtx::kSkeleton)
        ctx.of[b] = r.id;
      else if (ctx.of[b] != r.id)
        ctx.of[b] = BlockCtx::kShared;
    }
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    if (ctx.of[b] == BlockCtx::kSkeleton && !block_is_barrier(k, b) &&
        k.block(b).term.kind != Terminator::Kind::Ret)
      throw ValidationError("live block " + k.block(b).name +
                            " belongs to no parallel region");
  }
  return ctx;
}

} // namespace

//===----------------------------------------------------------------------===//
// Automatic locals
//===----------------------------------------------------------------------===//

ConvertedLocals convert_automatic_locals(const KernelFunction &input) {
  ConvertedLocals out;
  out.fn = input;
  KernelFunction &k = out.fn;
  auto &body = k.block(k.entry).body;
  std::vector<Instruction> kept;
  for (const Instruction &in : body) {
    if (in.op == Opcode::AllocaLocal) {
      // The alloca's SSA value becomes the new parameter's value; uses stay.
      const std::string &name = k.value_name(in.result);
      k.params.push_back(Param{name, AddressSpace::Local, in.ty, in.result});
      out.added_params.emplace_back(name, in.count);
    } else {
      kept.push_back(in);
    }
  }
  body = std::move(kept);
  validate(k);
  return out;
}

//===----------------------------------------------------------------------===//
// Boundary phi demotion
//===----------------------------------------------------------------------===//

KernelFunction demote_boundary_phis(const KernelFunction &input, const RegionSet &rs,
                                    const LocalSize &ls, const WgOptions &opts) {
  KernelFunction k = input;
  int64_t extent = context_extent(ls, opts);
  auto preds = predecessors(k);

  for (const auto &r : rs.regions) {
    if (r.blocks.empty() || r.entry == kNoBlock)
      continue;
    BlockId e = r.entry;
    if (k.block(e).phis.empty())
      continue;
    std::set<BlockId> inside(r.blocks.begin(), r.blocks.end());
    std::vector<BlockId> boundary;
    for (BlockId p : preds[e])
      if (!inside.count(p))
        boundary.push_back(p);
    if (boundary.empty())
      continue;

    // Mailbox per phi, loaded in a fresh block on the boundary edges.
    BlockId eq = k.new_block(k.block(e).name + ".in");
    ValueId flat = k.new_value("wi.flat", Type::scalar(ScalarKind::I32));
    {
      Instruction fi;
      fi.op = Opcode::GetFlatLocalId;
      fi.result = flat;
      k.block(eq).body.push_back(fi);
    }

    struct Slot {
      ValueId array;
      ValueId load;
      std::vector<std::pair<BlockId, ValueId>> stores; // boundary pred, value
    };
    std::vector<Slot> slots;

    for (Phi &phi : k.block(e).phis) {
      Slot s;
      Instruction al;
      al.op = Opcode::AllocaPrivate;
      al.ty = phi.ty;
      al.count = extent;
      al.result = k.new_value("slot." + k.value_name(phi.result),
                              Type::ptr(AddressSpace::Private, phi.ty));
      s.array = al.result;
      insert_entry_alloca(k, al);

      Instruction ld;
      ld.op = Opcode::Load;
      ld.space = AddressSpace::Private;
      ld.result = k.new_value(k.value_name(phi.result) + ".box",
                              Type::scalar(phi.ty));
      ld.operands = {s.array, flat};
      k.block(eq).body.push_back(ld);
      s.load = ld.result;

      for (const PhiIncoming &pi : phi.incoming)
        if (!inside.count(pi.pred))
          s.stores.emplace_back(pi.pred, pi.value);

      auto &inc = phi.incoming;
      inc.erase(std::remove_if(inc.begin(), inc.end(),
                               [&](const PhiIncoming &pi) {
                                 return !inside.count(pi.pred);
                               }),
                inc.end());
      inc.push_back(PhiIncoming{eq, s.load});
      slots.push_back(std::move(s));
    }

    k.block(eq).term = Terminator::br(e);
    for (BlockId q : boundary) {
      Terminator &t = k.block(q).term;
      for (int si = 0; si < t.num_succs(); ++si)
        if (t.succ[si] == e)
          t.succ[si] = eq;
    }

    // Stores run per work-item at the end of the region preceding each
    // boundary edge.
    for (const Slot &s : slots) {
      for (auto &[q, v] : s.stores) {
        const ParallelRegion *rq = rs.region_ending_at(q);
        if (!rq || rq->blocks.empty())
          throw ValidationError(
              "phi incoming crosses an empty parallel region; unsupported");
        std::set<BlockId> rq_inside(rq->blocks.begin(), rq->blocks.end());
        for (BlockId x : rq->blocks) {
          bool edges_q = false;
          for (BlockId sx : successors(k, x))
            if (sx == q)
              edges_q = true;
          if (!edges_q)
            continue;
          ValueId f2 = k.new_value("wi.flat", Type::scalar(ScalarKind::I32));
          Instruction fi;
          fi.op = Opcode::GetFlatLocalId;
          fi.result = f2;
          Instruction st;
          st.op = Opcode::Store;
          st.space = AddressSpace::Private;
          st.operands = {v, s.array, f2};
          k.block(x).body.push_back(fi);
          k.block(x).body.push_back(st);
        }
      }
    }
  }
  validate(k);
  return k;
}

//===----------------------------------------------------------------------===//
// Privatization
//===----------------------------------------------------------------------===//

namespace {

struct UseSite {
  enum Kind { Operand, PhiIncoming, TermCond } kind = Operand;
  BlockId block = kNoBlock; // for PhiIncoming the predecessor block
  int instr = -1;
  int op_index = -1;
  int phi = -1, inc = -1;
  BlockId phi_block = kNoBlock;
};

std::vector<UseSite> collect_uses(const KernelFunction &k, ValueId v) {
  std::vector<UseSite> out;
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    const BasicBlock &bb = k.block(b);
    for (size_t pi = 0; pi < bb.phis.size(); ++pi)
      for (size_t ii = 0; ii < bb.phis[pi].incoming.size(); ++ii)
        if (bb.phis[pi].incoming[ii].value == v) {
          UseSite s;
          s.kind = UseSite::PhiIncoming;
          s.block = bb.phis[pi].incoming[ii].pred;
          s.phi_block = b;
          s.phi = int(pi);
          s.inc = int(ii);
          out.push_back(s);
        }
    for (size_t ii = 0; ii < bb.body.size(); ++ii)
      for (size_t oi = 0; oi < bb.body[ii].operands.size(); ++oi)
        if (bb.body[ii].operands[oi] == v) {
          UseSite s;
          s.block = b;
          s.instr = int(ii);
          s.op_index = int(oi);
          out.push_back(s);
        }
    if (bb.term.cond == v) {
      UseSite s;
      s.kind = UseSite::TermCond;
      s.block = b;
      out.push_back(s);
    }
  }
  return out;
}

} // namespace

KernelFunction privatize_variables(const KernelFunction &input, const RegionSet &rs,
                                   const LocalSize &ls, const WgOptions &opts) {
  KernelFunction k = input;
  int64_t extent = context_extent(ls, opts);
  BlockCtx ctx = classify_blocks(k, rs);

  // Definition list of interest: phis and scalar instruction results, in a
  // stable order. Params and pointer-typed values are exempt (allocas are
  // hoisted and dominate everything after generation).
  struct Def {
    ValueId v;
    BlockId block;
    bool is_const;
  };
  std::vector<Def> defs;
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    for (const Phi &phi : k.block(b).phis)
      defs.push_back(Def{phi.result, b, false});
    for (const Instruction &in : k.block(b).body)
      if (in.result != kNoValue && k.value_type(in.result).is_scalar())
        defs.push_back(Def{in.result, b, in.op == Opcode::Const});
  }

  for (const Def &d : defs) {
    int dctx = ctx.of[d.block];
    auto uses = collect_uses(k, d.v);
    bool cross = false;
    for (const UseSite &u : uses)
      if (ctx.of[u.block] != dctx)
        cross = true;
    if (!cross)
      continue;
    if (dctx == BlockCtx::kShared)
      throw ValidationError("selector-prefix value %" + k.value_name(d.v) +
                            " escapes the shared blocks");

    if (d.is_const) {
      // Rematerialize the constant at each out-of-region use.
      Instruction templ;
      for (const Instruction &in : k.block(d.block).body)
        if (in.result == d.v)
          templ = in;
      for (;;) {
        auto us = collect_uses(k, d.v);
        const UseSite *u = nullptr;
        for (const UseSite &cand : us)
          if (ctx.of[cand.block] != dctx) {
            u = &cand;
            break;
          }
        if (!u)
          break;
        Instruction c = templ;
        c.result = k.new_value(k.value_name(d.v) + ".r", k.value_type(d.v));
        BasicBlock &ub = k.block(u->block);
        if (u->kind == UseSite::Operand) {
          ub.body.insert(ub.body.begin() + u->instr, c);
          ub.body[size_t(u->instr) + 1].operands[size_t(u->op_index)] = c.result;
        } else if (u->kind == UseSite::TermCond) {
          ub.body.push_back(c);
          ub.term.cond = c.result;
        } else {
          ub.body.push_back(c);
          k.block(u->phi_block).phis[size_t(u->phi)].incoming[size_t(u->inc)].value =
              c.result;
        }
      }
      continue;
    }

    // Context array.
    Instruction al;
    al.op = Opcode::AllocaPrivate;
    al.ty = k.value_type(d.v).elem;
    al.count = extent;
    al.result = k.new_value("ctx." + k.value_name(d.v),
                            Type::ptr(AddressSpace::Private, al.ty));
    insert_entry_alloca(k, al);

    // Store at the definition.
    {
      BasicBlock &db = k.block(d.block);
      ValueId f = k.new_value("wi.flat", Type::scalar(ScalarKind::I32));
      Instruction fi;
      fi.op = Opcode::GetFlatLocalId;
      fi.result = f;
      Instruction st;
      st.op = Opcode::Store;
      st.space = AddressSpace::Private;
      st.operands = {d.v, al.result, f};
      size_t pos = 0;
      bool is_phi = false;
      for (const Phi &phi : db.phis)
        if (phi.result == d.v)
          is_phi = true;
      if (!is_phi) {
        while (pos < db.body.size() && db.body[pos].result != d.v)
          ++pos;
        ++pos; // after the definition
      }
      db.body.insert(db.body.begin() + long(pos), st);
      db.body.insert(db.body.begin() + long(pos), fi);
    }

    // Load before each out-of-region use.
    for (;;) {
      auto us = collect_uses(k, d.v);
      const UseSite *next = nullptr;
      for (const UseSite &u : us)
        if (ctx.of[u.block] != dctx) {
          // skip the store we just inserted (it is in the def block)
          next = &u;
          break;
        }
      if (!next)
        break;
      ValueId f = k.new_value("wi.flat", Type::scalar(ScalarKind::I32));
      Instruction fi;
      fi.op = Opcode::GetFlatLocalId;
      fi.result = f;
      Instruction ld;
      ld.op = Opcode::Load;
      ld.space = AddressSpace::Private;
      ld.result = k.new_value(k.value_name(d.v) + ".x", k.value_type(d.v));
      ld.operands = {al.result, f};
      BasicBlock &ub = k.block(next->block);
      if (next->kind == UseSite::Operand) {
        ub.body.insert(ub.body.begin() + next->instr, ld);
        ub.body.insert(ub.body.begin() + next->instr, fi);
        ub.body[size_t(next->instr) + 2].operands[size_t(next->op_index)] =
            ld.result;
      } else if (next->kind == UseSite::TermCond) {
        ub.body.push_back(fi);
        ub.body.push_back(ld);
        ub.term.cond = ld.result;
      } else {
        ub.body.push_back(fi);
        ub.body.push_back(ld);
        k.block(next->phi_block)
            .phis[size_t(next->phi)]
            .incoming[size_t(next->inc)]
            .value = ld.result;
      }
    }
  }
  validate(k);
  return k;
}

KernelFunction merge_uniform_variables(const KernelFunction &input,
                                       const UniformityMap &u) {
  KernelFunction k = input;

  // Snapshot first: rewrites below insert into the entry body.
  std::vector<ValueId> merged;
  for (const Instruction &al : k.block(k.entry).body) {
    if (al.op != Opcode::AllocaPrivate)
      continue;
    const std::string &an = k.value_name(al.result);
    if (an.rfind("ctx.", 0) != 0)
      continue;
    ValueId origin = k.find_value(an.substr(4));
    if (origin != kNoValue && u.is_uniform(origin))
      merged.push_back(al.result);
  }

  for (ValueId arr : merged) {
    // Shrink to a single shared scalar slot; all lanes hold the same value.
    for (Instruction &al : k.block(k.entry).body)
      if (al.result == arr)
        al.count = 1;
    k.values[arr].name = "uslot." + k.values[arr].name.substr(4);
    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      if (k.blocks[b].dead)
        continue;
      BasicBlock &bb = k.block(b);
      for (size_t i = 0; i < bb.body.size(); ++i) {
        bool is_load = bb.body[i].op == Opcode::Load && bb.body[i].operands[0] == arr;
        bool is_store = bb.body[i].op == Opcode::Store && bb.body[i].operands[1] == arr;
        if (!is_load && !is_store)
          continue;
        Instruction c;
        c.op = Opcode::Const;
        c.ty = ScalarKind::I32;
        c.lit = Scalar::make_i32(0);
        c.result = k.new_value("zero", Type::scalar(ScalarKind::I32));
        bb.body.insert(bb.body.begin() + long(i), c);
        Instruction &in2 = bb.body[i + 1];
        if (is_load)
          in2.operands[1] = c.result;
        else
          in2.operands[2] = c.result;
        ++i;
      }
    }
  }
  validate(k);
  return k;
}

KernelFunction expand_private_allocas(const KernelFunction &input,
                                      const LocalSize &ls, const WgOptions &opts) {
  KernelFunction k = input;
  int64_t n = context_extent(ls, opts);
  if (n == 1)
    return k;

  // Snapshot first: rewrites below insert into the entry body.
  struct Expand {
    ValueId array;
    int64_t orig_count;
  };
  std::vector<Expand> work;
  for (const Instruction &al : k.block(k.entry).body) {
    if (al.op != Opcode::AllocaPrivate)
      continue;
    const std::string &an = k.value_name(al.result);
    if (an.rfind("ctx.", 0) == 0 || an.rfind("slot.", 0) == 0 ||
        an.rfind("uslot.", 0) == 0)
      continue; // already one element per work-item
    work.push_back(Expand{al.result, al.count});
  }

  for (const Expand &w : work) {
    int64_t orig_count = w.orig_count;
    for (Instruction &al : k.block(k.entry).body)
      if (al.result == w.array)
        al.count = orig_count * n;

    // idx' = flat * orig_count + idx at each access
    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      if (k.blocks[b].dead)
        continue;
      BasicBlock &bb = k.block(b);
      for (size_t i = 0; i < bb.body.size(); ++i) {
        Instruction &in = bb.body[i];
        int ptr_ix = in.op == Opcode::Load ? 0 : in.op == Opcode::Store ? 1 : -1;
        if (ptr_ix < 0 || in.operands[size_t(ptr_ix)] != w.array)
          continue;
        ValueId f = k.new_value("wi.flat", Type::scalar(ScalarKind::I32));
        ValueId cc = k.new_value("stride", Type::scalar(ScalarKind::I32));
        ValueId m = k.new_value("base", Type::scalar(ScalarKind::I32));
        ValueId a2 = k.new_value("slotidx", Type::scalar(ScalarKind::I32));
        Instruction fi;
        fi.op = Opcode::GetFlatLocalId;
        fi.result = f;
        Instruction ci;
        ci.op = Opcode::Const;
        ci.ty = ScalarKind::I32;
        ci.lit = Scalar::make_i32(int32_t(orig_count));
        ci.result = cc;
        Instruction mi;
        mi.op = Opcode::Mul;
        mi.result = m;
        mi.operands = {f, cc};
        Instruction ai;
        ai.op = Opcode::Add;
        ai.result = a2;
        ai.operands = {m, in.operands[size_t(ptr_ix) + 1]};
        in.operands[size_t(ptr_ix) + 1] = a2;
        bb.body.insert(bb.body.begin() + long(i), {fi, ci, mi, ai});
        i += 4;
      }
    }
  }
  validate(k);
  return k;
}

//===----------------------------------------------------------------------===//
// Redundancy cleanup: dominator-scoped value numbering + dead code removal
//===----------------------------------------------------------------------===//

namespace {

bool dvn_pure(Opcode op) {
  return op == Opcode::Const || is_binop(op) || is_cmp(op) ||
         op == Opcode::Select || is_builtin(op);
}

} // namespace

KernelFunction cleanup_redundancy(const KernelFunction &input) {
  KernelFunction k = input;
  DomInfo dom = compute_dominators(k);

  // Value numbering keyed on the full instruction shape.
  std::map<std::string, std::vector<std::pair<ValueId, BlockId>>> table;
  std::map<ValueId, ValueId> subst;
  auto resolve = [&](ValueId v) {
    while (subst.count(v))
      v = subst[v];
    return v;
  };

  for (BlockId b : dfs_preorder(k)) {
    BasicBlock &bb = k.block(b);
    for (Instruction &in : bb.body) {
      for (ValueId &v : in.operands)
        v = resolve(v);
      if (in.result == kNoValue || !dvn_pure(in.op))
        continue;
      std::string key = std::to_string(int(in.op)) + "|" +
                        std::to_string(int(in.ty)) + "|" +
                        std::to_string(in.dim) + "|" +
                        std::to_string(in.count) + "|" +
                        std::to_string(in.lit.bits) + "|";
      for (ValueId v : in.operands)
        key += std::to_string(v) + ",";
      bool replaced = false;
      for (auto &[prev, pb] : table[key]) {
        if (pb == b || dom.dominates(pb, b)) {
          subst[in.result] = prev;
          replaced = true;
          break;
        }
      }
      if (!replaced)
        table[key].emplace_back(in.result, b);
    }
    for (Phi &phi : bb.phis)
      for (PhiIncoming &pi : phi.incoming)
        pi.value = resolve(pi.value);
    if (bb.term.cond != kNoValue)
      bb.term.cond = resolve(bb.term.cond);
  }
  // Second walk: incoming phi values from blocks processed later.
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    for (Phi &phi : k.block(b).phis)
      for (PhiIncoming &pi : phi.incoming)
        pi.value = resolve(pi.value);
  }

  // Dead code elimination over pure instructions, loads and unused allocas.
  for (;;) {
    std::set<ValueId> used;
    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      if (k.blocks[b].dead)
        continue;
      const BasicBlock &bb = k.block(b);
      for (const Phi &phi : bb.phis)
        for (const PhiIncoming &pi : phi.incoming)
          used.insert(pi.value);
      for (const Instruction &in : bb.body)
        for (ValueId v : in.operands)
          used.insert(v);
      if (bb.term.cond != kNoValue)
        used.insert(bb.term.cond);
    }
    bool removed = false;
    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      if (k.blocks[b].dead)
        continue;
      auto &body = k.block(b).body;
      auto dead = [&](const Instruction &in) {
        if (in.result == kNoValue || used.count(in.result))
          return false;
        return dvn_pure(in.op) || in.op == Opcode::Load ||
               in.op == Opcode::AllocaPrivate;
      };
      size_t before = body.size();
      body.erase(std::remove_if(body.begin(), body.end(), dead), body.end());
      removed |= body.size() != before;
      auto &phis = k.block(b).phis;
      size_t pb = phis.size();
      phis.erase(std::remove_if(phis.begin(), phis.end(),
                                [&](const Phi &p) { return !used.count(p.result); }),
                 phis.end());
      removed |= phis.size() != pb;
    }
    if (!removed)
      break;
  }
  validate(k);
  return k;
}

//===----------------------------------------------------------------------===//
// Work-item loop wrapping
//===----------------------------------------------------------------------===//

WorkGroupFunction generate_workgroup_function(const KernelFunction &input,
                                              const RegionSet &rs,
                                              const LocalSize &ls,
                                              const WgOptions &opts) {
  WorkGroupFunction wg;
  wg.local = ls;
  wg.dynamic_local_size = opts.dynamic_local_size;
  wg.fn = input;
  KernelFunction &k = wg.fn;
  BlockCtx ctx = classify_blocks(k, rs);

  // Fresh function entry holding allocas and shared bounds.
  BlockId wge = k.new_block("wg.entry");
  {
    auto &ob = k.block(k.entry).body;
    auto &nb = k.block(wge).body;
    size_t pos = 0;
    while (pos < ob.size() && (ob[pos].op == Opcode::AllocaPrivate ||
                               ob[pos].op == Opcode::AllocaLocal))
      ++pos;
    nb.assign(ob.begin(), ob.begin() + long(pos));
    ob.erase(ob.begin(), ob.begin() + long(pos));
  }
  auto add_const = [&](const std::string &n, int32_t v) {
    Instruction c;
    c.op = Opcode::Const;
    c.ty = ScalarKind::I32;
    c.lit = Scalar::make_i32(v);
    c.result = k.new_value(n, Type::scalar(ScalarKind::I32));
    k.block(wge).body.push_back(c);
    return c.result;
  };
  auto add_size = [&](const std::string &n, int dim, int cval) {
    if (!opts.dynamic_local_size)
      return add_const(n, cval);
    Instruction s;
    s.op = Opcode::GetLocalSize;
    s.dim = dim;
    s.result = k.new_value(n, Type::scalar(ScalarKind::I32));
    k.block(wge).body.push_back(s);
    return s.result;
  };
  ValueId c0 = add_const("wi.zero", 0);
  ValueId c1 = add_const("wi.one", 1);
  ValueId vLX = add_size("wi.nx", 0, ls.x);
  ValueId vLY = add_size("wi.ny", 1, ls.y);
  ValueId vLZ = add_size("wi.nz", 2, ls.z);

  // Per-region wrap.
  struct Nest {
    int region_id;
    std::set<BlockId> body;
    BlockId pre, hz, hy, hx, lx, ly, lz;
    ValueId x, y, z;
  };
  std::vector<Nest> nests;

  for (const auto &r : rs.regions) {
    auto preds = predecessors(k);
    std::set<BlockId> body;
    for (BlockId b : r.blocks)
      if (!ctx.is_shared(b))
        body.insert(b);
    if (body.empty())
      continue;

    // single entry
    BlockId entry = kNoBlock;
    for (BlockId b : body) {
      bool outside_pred = b == k.entry;
      for (BlockId p : preds[b])
        if (!body.count(p))
          outside_pred = true;
      if (!outside_pred)
        continue;
      if (entry != kNoBlock)
        throw ValidationError("region body has multiple entries: " +
                              k.block(entry).name + " and " + k.block(b).name);
      entry = b;
    }
    if (entry == kNoBlock)
      throw ValidationError("region body has no entry");
    for (const Phi &phi : k.block(entry).phis)
      for (const PhiIncoming &pi : phi.incoming)
        if (!body.count(pi.pred))
          throw ValidationError("region entry keeps a boundary phi; run "
                                "demote_boundary_phis");

    Nest n;
    n.region_id = r.id;
    n.body = body;
    std::string base = "wi.r" + std::to_string(r.id);
    n.pre = k.new_block(base + ".pre");
    n.hz = k.new_block(base + ".hz");
    n.hy = k.new_block(base + ".hy");
    n.hx = k.new_block(base + ".hx");
    n.lx = k.new_block(base + ".lx");
    n.ly = k.new_block(base + ".ly");
    n.lz = k.new_block(base + ".lz");
    n.z = k.new_value(base + ".z", Type::scalar(ScalarKind::I32));
    n.y = k.new_value(base + ".y", Type::scalar(ScalarKind::I32));
    n.x = k.new_value(base + ".x", Type::scalar(ScalarKind::I32));

    auto mkphi = [&](BlockId at, ValueId res, BlockId p0, ValueId v0, BlockId p1,
                     ValueId v1) {
      Phi phi;
      phi.result = res;
      phi.ty = ScalarKind::I32;
      phi.incoming = {PhiIncoming{p0, v0}, PhiIncoming{p1, v1}};
      k.block(at).phis.push_back(phi);
    };
    auto mklatch = [&](BlockId at, ValueId iv, ValueId bound, BlockId again,
                       BlockId out, const std::string &nm) {
      ValueId next = k.new_value(nm + ".n", Type::scalar(ScalarKind::I32));
      ValueId cont = k.new_value(nm + ".c", Type::scalar(ScalarKind::Bool));
      Instruction add;
      add.op = Opcode::Add;
      add.result = next;
      add.operands = {iv, c1};
      Instruction cmp;
      cmp.op = Opcode::CmpLt;
      cmp.result = cont;
      cmp.operands = {next, bound};
      k.block(at).body.push_back(add);
      k.block(at).body.push_back(cmp);
      Terminator t = Terminator::cond_br(cont, again, out);
      t.parallel_loop_id = r.id;
      k.block(at).term = t;
      return next;
    };

    k.block(n.pre).term = Terminator::br(n.hz);
    k.block(n.hz).term = Terminator::br(n.hy);
    k.block(n.hy).term = Terminator::br(n.hx);
    k.block(n.hx).term = Terminator::br(entry);
    ValueId z1 = mklatch(n.lz, n.z, vLZ, n.hz, r.exit, "wi.z");
    ValueId y1 = mklatch(n.ly, n.y, vLY, n.hy, n.lz, "wi.y");
    ValueId x1 = mklatch(n.lx, n.x, vLX, n.hx, n.ly, "wi.x");
    mkphi(n.hz, n.z, n.pre, c0, n.lz, z1);
    mkphi(n.hy, n.y, n.hz, c0, n.ly, y1);
    mkphi(n.hx, n.x, n.hy, c0, n.lx, x1);

    // incoming edges from the skeleton enter the nest
    std::set<BlockId> nest_blocks{n.pre, n.hz, n.hy, n.hx, n.lx, n.ly, n.lz};
    for (BlockId p = 0; p < k.blocks.size(); ++p) {
      if (k.blocks[p].dead || body.count(p) || nest_blocks.count(p))
        continue;
      Terminator &t = k.block(p).term;
      for (int si = 0; si < t.num_succs(); ++si)
        if (t.succ[si] == entry)
          t.succ[si] = n.pre;
    }
    // region body exits loop back through the x latch
    for (BlockId b : body) {
      Terminator &t = k.block(b).term;
      for (int si = 0; si < t.num_succs(); ++si) {
        if (t.succ[si] == r.exit)
          t.succ[si] = n.lx;
        else if (!body.count(t.succ[si]))
          throw ValidationError("region body escapes to " +
                                k.block(t.succ[si]).name);
      }
    }
    nests.push_back(n);

    WiLoopMeta meta;
    meta.region_id = r.id;
    meta.blocks = {n.pre, n.hz, n.hy, n.hx, n.lx, n.ly, n.lz};
    meta.iv_x = n.x;
    meta.iv_y = n.y;
    meta.iv_z = n.z;
    wg.wi_loops.push_back(meta);
  }

  // route the function entry through wg.entry
  {
    BlockId start = k.entry;
    for (const Nest &n : nests)
      if (n.body.count(k.entry))
        start = n.pre;
    k.block(wge).term = Terminator::br(start);
    k.entry = wge;
  }

  // Rewrite work-item id builtins and delete barriers.
  auto nest_of = [&](BlockId b) -> const Nest * {
    for (const Nest &n : nests)
      if (n.body.count(b))
        return &n;
    return nullptr;
  };

  std::map<ValueId, ValueId> replace_uses; // old -> new
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    const Nest *n = nest_of(b);
    std::vector<Instruction> nb;
    for (Instruction in : k.block(b).body) {
      switch (in.op) {
      case Opcode::Barrier:
        continue; // the loops implement the synchronization now
      case Opcode::GetLocalId: {
        if (n) {
          ValueId iv = in.dim == 0 ? n->x : in.dim == 1 ? n->y : n->z;
          replace_uses[in.result] = iv;
        } else {
          Instruction c;
          c.op = Opcode::Const;
          c.ty = ScalarKind::I32;
          c.lit = Scalar::make_i32(0);
          c.result = in.result;
          nb.push_back(c);
        }
        continue;
      }
      case Opcode::GetFlatLocalId: {
        if (!n) {
          Instruction c;
          c.op = Opcode::Const;
          c.ty = ScalarKind::I32;
          c.lit = Scalar::make_i32(0);
          c.result = in.result;
          nb.push_back(c);
          continue;
        }
        // (z*LY + y)*LX + x
        ValueId t1 = k.new_value("wi.f1", Type::scalar(ScalarKind::I32));
        ValueId t2 = k.new_value("wi.f2", Type::scalar(ScalarKind::I32));
        ValueId t3 = k.new_value("wi.f3", Type::scalar(ScalarKind::I32));
        Instruction m1;
        m1.op = Opcode::Mul;
        m1.result = t1;
        m1.operands = {n->z, vLY};
        Instruction a1;
        a1.op = Opcode::Add;
        a1.result = t2;
        a1.operands = {t1, n->y};
        Instruction m2;
        m2.op = Opcode::Mul;
        m2.result = t3;
        m2.operands = {t2, vLX};
        Instruction a2;
        a2.op = Opcode::Add;
        a2.result = in.result;
        a2.operands = {t3, n->x};
        nb.push_back(m1);
        nb.push_back(a1);
        nb.push_back(m2);
        nb.push_back(a2);
        continue;
      }
      case Opcode::GetGlobalId: {
        // group_id*local_size + local_id
        ValueId gg = k.new_value("wi.g", Type::scalar(ScalarKind::I32));
        ValueId lsz = k.new_value("wi.ls", Type::scalar(ScalarKind::I32));
        ValueId mul = k.new_value("wi.gb", Type::scalar(ScalarKind::I32));
        Instruction gi;
        gi.op = Opcode::GetGroupId;
        gi.dim = in.dim;
        gi.result = gg;
        Instruction si;
        si.op = Opcode::GetLocalSize;
        si.dim = in.dim;
        si.result = lsz;
        Instruction m;
        m.op = Opcode::Mul;
        m.result = mul;
        m.operands = {gg, lsz};
        nb.push_back(gi);
        nb.push_back(si);
        nb.push_back(m);
        if (n) {
          ValueId iv = in.dim == 0 ? n->x : in.dim == 1 ? n->y : n->z;
          Instruction a;
          a.op = Opcode::Add;
          a.result = in.result;
          a.operands = {mul, iv};
          nb.push_back(a);
        } else {
          replace_uses[in.result] = mul;
        }
        continue;
      }
      default:
        nb.push_back(in);
      }
    }
    k.block(b).body = std::move(nb);
  }

  if (!replace_uses.empty()) {
    auto sub = [&](ValueId v) {
      auto it = replace_uses.find(v);
      return it == replace_uses.end() ? v : it->second;
    };
    for (BlockId b = 0; b < k.blocks.size(); ++b) {
      if (k.blocks[b].dead)
        continue;
      BasicBlock &bb = k.block(b);
      for (Phi &phi : bb.phis)
        for (PhiIncoming &pi : phi.incoming)
          pi.value = sub(pi.value);
      for (Instruction &in : bb.body)
        for (ValueId &v : in.operands)
          v = sub(v);
      if (bb.term.cond != kNoValue)
        bb.term.cond = sub(bb.term.cond);
    }
  }

  delete_unreachable(k);
  validate(k);

  // Context array metadata from the alloca prefix naming convention.
  for (const Instruction &in : k.block(k.entry).body) {
    if (in.op != Opcode::AllocaPrivate)
      continue;
    const std::string &nm = k.value_name(in.result);
    CtxArrayMeta meta;
    meta.array = in.result;
    meta.extent = in.count;
    if (nm.rfind("ctx.", 0) == 0) {
      meta.origin = nm.substr(4);
      wg.context_arrays.push_back(meta);
    } else if (nm.rfind("uslot.", 0) == 0) {
      meta.origin = nm.substr(6);
      wg.uniform_slots.push_back(meta);
    } else if (nm.rfind("slot.", 0) == 0) {
      meta.origin = nm.substr(5);
      wg.phi_slots.push_back(meta);
    }
  }
  return wg;
}

void validate_workgroup_function(const WorkGroupFunction &wg) {
  const KernelFunction &k = wg.fn;
  validate(k);
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    if (k.blocks[b].dead)
      continue;
    for (const Instruction &in : k.block(b).body) {
      if (in.op == Opcode::Barrier)
        throw ValidationError("work-group function retains a barrier");
      if (in.op == Opcode::GetLocalId || in.op == Opcode::GetGlobalId ||
          in.op == Opcode::GetFlatLocalId)
        throw ValidationError("work-group function retains a work-item id "
                              "builtin");
      if (in.op == Opcode::AllocaLocal)
        throw ValidationError("work-group function retains an automatic local");
    }
  }
  if (!is_reducible(k))
    throw ValidationError("work-group function is irreducible");
}

} // namespace wgkit
