//===- validate.cc - IR invariant checking ---------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/cfg.hpp"
#include "wgkit/ir.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

namespace wgkit {

namespace {

struct DefSite {
  BlockId block = kNoBlock;
  int order = -1; // phis get order -1, body instruction i gets i
  bool is_param = false;
};

[[noreturn]] void err(const std::string &msg) { throw ValidationError(msg); }

void check_operand_types(const KernelFunction &k, const Instruction &in) {
  auto ty = [&](ValueId v) { return k.value_type(v); };
  auto scalar_of = [&](ValueId v) {
    Type t = ty(v);
    if (!t.is_scalar())
      err("operand %" + k.value_name(v) + " must be a scalar");
    return t.elem;
  };

  if (is_binop(in.op)) {
    ScalarKind a = scalar_of(in.operands[0]);
    ScalarKind b = scalar_of(in.operands[1]);
    if (a != b)
      err(std::string("binop operand types differ for ") + opcode_name(in.op));
    bool ok = false;
    switch (in.op) {
    case Opcode::Add: case Opcode::Sub: case Opcode::Mul: case Opcode::Div:
      ok = a == ScalarKind::I32 || a == ScalarKind::F32 || a == ScalarKind::F64;
      break;
    case Opcode::Rem: case Opcode::Shl: case Opcode::Shr:
      ok = a == ScalarKind::I32;
      break;
    case Opcode::And: case Opcode::Or: case Opcode::Xor:
      ok = a == ScalarKind::I32 || a == ScalarKind::Bool;
      break;
    default: break;
    }
    if (!ok)
      err(std::string(opcode_name(in.op)) + " not defined on " + to_string(a));
    if (ty(in.result) != Type::scalar(a))
      err("binop result type mismatch");
  } else if (is_cmp(in.op)) {
    ScalarKind a = scalar_of(in.operands[0]);
    ScalarKind b = scalar_of(in.operands[1]);
    if (a != b)
      err("cmp operand types differ");
    if (a == ScalarKind::Bool && in.op != Opcode::CmpEq && in.op != Opcode::CmpNe)
      err("ordered cmp on bool");
  } else if (in.op == Opcode::Select) {
    if (scalar_of(in.operands[0]) != ScalarKind::Bool)
      err("select condition must be bool");
    if (ty(in.operands[1]) != ty(in.operands[2]))
      err("select arm types differ");
  } else if (in.op == Opcode::Load || in.op == Opcode::Store) {
    int p = in.op == Opcode::Load ? 0 : 1;
    Type pt = ty(in.operands[p]);
    if (!pt.is_ptr())
      err("load/store pointer operand is not a pointer");
    if (pt.space != in.space)
      err("load/store address space does not match pointer");
    if (scalar_of(in.operands[p + 1]) != ScalarKind::I32)
      err("load/store index must be i32");
    if (in.op == Opcode::Store) {
      if (in.space == AddressSpace::Constant)
        err("store to constant space");
      if (scalar_of(in.operands[0]) != pt.elem)
        err("stored value type does not match buffer element type");
    } else if (ty(in.result) != Type::scalar(pt.elem)) {
      err("load result type mismatch");
    }
  }
}

} // namespace

void validate(const KernelFunction &k) {
  if (k.blocks.empty() || k.blocks[k.entry].dead)
    err("no live entry block");

  auto reach = reachable_from_entry(k);
  auto preds = predecessors(k);

  // Entry must have no predecessors from reachable code.
  for (BlockId p : preds[k.entry])
    if (reach[p])
      err("entry block has a predecessor");

  // Collect definition sites; every value used must be defined exactly once.
  std::map<ValueId, DefSite> defs;
  for (const Param &p : k.params)
    defs[p.value] = DefSite{kNoBlock, -1, true};
  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    const BasicBlock &bb = k.blocks[b];
    if (bb.dead || !reach[b])
      continue;
    for (const Phi &phi : bb.phis) {
      if (defs.count(phi.result))
        err("value %" + k.value_name(phi.result) + " defined twice");
      defs[phi.result] = DefSite{b, -1, false};
    }
    for (size_t i = 0; i < bb.body.size(); ++i) {
      const Instruction &in = bb.body[i];
      if (in.op == Opcode::Barrier) {
        if (in.result != kNoValue || !in.operands.empty())
          err("barrier takes no operands and has no result");
        continue;
      }
      if ((in.op == Opcode::AllocaPrivate || in.op == Opcode::AllocaLocal) &&
          b != k.entry)
        err("alloca outside the entry block");
      if (in.op == Opcode::Store)
        continue; // no result
      if (in.result == kNoValue)
        err(std::string(opcode_name(in.op)) + " must produce a result");
      if (defs.count(in.result))
        err("value %" + k.value_name(in.result) + " defined twice");
      defs[in.result] = DefSite{b, int(i), false};
    }
  }

  DomInfo dom = compute_dominators(k);

  auto check_use = [&](ValueId v, BlockId use_block, int use_order) {
    auto it = defs.find(v);
    if (it == defs.end())
      err("use of undefined value %" + k.value_name(v));
    const DefSite &d = it->second;
    if (d.is_param)
      return;
    if (d.block == use_block) {
      if (use_order >= 0 && d.order >= use_order)
        err("value %" + k.value_name(v) + " used before definition in block " +
            k.block(use_block).name);
      if (use_order < 0 && d.order >= 0)
        err("phi uses non-phi value %" + k.value_name(v) + " of its own block");
      return;
    }
    if (!dom.dominates(d.block, use_block))
      err("definition of %" + k.value_name(v) + " does not dominate use in " +
          k.block(use_block).name);
  };

  for (BlockId b = 0; b < k.blocks.size(); ++b) {
    const BasicBlock &bb = k.blocks[b];
    if (bb.dead || !reach[b])
      continue;

    // Phi incoming lists must match predecessors exactly.
    std::vector<BlockId> live_preds;
    for (BlockId p : preds[b])
      if (reach[p])
        live_preds.push_back(p);
    std::sort(live_preds.begin(), live_preds.end());
    live_preds.erase(std::unique(live_preds.begin(), live_preds.end()),
                     live_preds.end());
    for (const Phi &phi : bb.phis) {
      // Entries from unreachable predecessors are tolerated; the cleanup
      // pass prunes them before analyses run.
      std::vector<BlockId> in_preds;
      for (const PhiIncoming &pi : phi.incoming)
        if (pi.pred < k.blocks.size() && reach[pi.pred])
          in_preds.push_back(pi.pred);
      std::sort(in_preds.begin(), in_preds.end());
      if (std::unique(in_preds.begin(), in_preds.end()) != in_preds.end())
        err("phi has duplicate predecessor entries in block " + bb.name);
      if (in_preds != live_preds)
        err("phi predecessors do not match block predecessors in " + bb.name);
      for (const PhiIncoming &pi : phi.incoming) {
        if (!reach[pi.pred])
          continue;
        if (k.value_type(pi.value) != Type::scalar(phi.ty))
          err("phi incoming type mismatch in " + bb.name);
        // value must be available at the end of the predecessor
        check_use(pi.value, pi.pred, INT32_MAX);
      }
      if (b == k.entry)
        err("entry block cannot have phis");
    }

    for (size_t i = 0; i < bb.body.size(); ++i) {
      const Instruction &in = bb.body[i];
      for (ValueId v : in.operands)
        check_use(v, b, int(i));
      if (in.op != Opcode::Barrier)
        check_operand_types(k, in);
    }

    if (bb.term.kind == Terminator::Kind::CondBr) {
      check_use(bb.term.cond, b, INT32_MAX);
      if (k.value_type(bb.term.cond) != Type::scalar(ScalarKind::Bool))
        err("branch condition must be bool in " + bb.name);
    }
    for (int s = 0; s < bb.term.num_succs(); ++s) {
      BlockId t = bb.term.succ[s];
      if (t >= k.blocks.size() || k.blocks[t].dead)
        err("branch to dead or invalid block from " + bb.name);
    }
  }
}

bool structurally_equal(const KernelFunction &a, const KernelFunction &b) {
  std::string pa = print_kernel(a);
  std::string pb = print_kernel(b);
  return pa == pb;
}

} // namespace wgkit
