//===- ir.cc - IR core helpers --------------------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//

#include "wgkit/ir.hpp"

#include <cstring>
#include <unordered_set>

namespace wgkit {

const char *to_string(ScalarKind k) {
  switch (k) {
  case ScalarKind::I32: return "i32";
  case ScalarKind::F32: return "f32";
  case ScalarKind::F64: return "f64";
  case ScalarKind::Bool: return "bool";
  }
  return "?";
}

const char *to_string(AddressSpace s) {
  switch (s) {
  case AddressSpace::Global: return "global";
  case AddressSpace::Local: return "local";
  case AddressSpace::Constant: return "constant";
  case AddressSpace::Private: return "private";
  case AddressSpace::Value: return "value";
  }
  return "?";
}

Scalar Scalar::make_i32(int32_t v) {
  Scalar s; s.kind = ScalarKind::I32; s.bits = uint32_t(v); return s;
}
Scalar Scalar::make_f32(float v) {
  Scalar s; s.kind = ScalarKind::F32;
  uint32_t b; std::memcpy(&b, &v, 4); s.bits = b; return s;
}
Scalar Scalar::make_f64(double v) {
  Scalar s; s.kind = ScalarKind::F64;
  uint64_t b; std::memcpy(&b, &v, 8); s.bits = b; return s;
}
Scalar Scalar::make_bool(bool v) {
  Scalar s; s.kind = ScalarKind::Bool; s.bits = v ? 1 : 0; return s;
}
int32_t Scalar::as_i32() const { return int32_t(uint32_t(bits)); }
float Scalar::as_f32() const {
  uint32_t b = uint32_t(bits); float v; std::memcpy(&v, &b, 4); return v;
}
double Scalar::as_f64() const {
  double v; std::memcpy(&v, &bits, 8); return v;
}
bool Scalar::as_bool() const { return bits != 0; }

bool is_binop(Opcode op) {
  return op >= Opcode::Add && op <= Opcode::Shr;
}
bool is_cmp(Opcode op) {
  return op >= Opcode::CmpEq && op <= Opcode::CmpGe;
}
bool is_builtin(Opcode op) {
  return op >= Opcode::GetLocalId && op <= Opcode::GetFlatLocalId;
}

const char *opcode_name(Opcode op) {
  switch (op) {
  case Opcode::Const: return "const";
  case Opcode::Add: return "add";
  case Opcode::Sub: return "sub";
  case Opcode::Mul: return "mul";
  case Opcode::Div: return "div";
  case Opcode::Rem: return "rem";
  case Opcode::And: return "and";
  case Opcode::Or: return "or";
  case Opcode::Xor: return "xor";
  case Opcode::Shl: return "shl";
  case Opcode::Shr: return "shr";
  case Opcode::CmpEq: return "cmp.eq";
  case Opcode::CmpNe: return "cmp.ne";
  case Opcode::CmpLt: return "cmp.lt";
  case Opcode::CmpLe: return "cmp.le";
  case Opcode::CmpGt: return "cmp.gt";
  case Opcode::CmpGe: return "cmp.ge";
  case Opcode::Select: return "select";
  case Opcode::Load: return "load";
  case Opcode::Store: return "store";
  case Opcode::GetLocalId: return "get_local_id";
  case Opcode::GetGlobalId: return "get_global_id";
  case Opcode::GetLocalSize: return "get_local_size";
  case Opcode::GetGroupId: return "get_group_id";
  case Opcode::GetFlatLocalId: return "get_flat_local_id";
  case Opcode::Barrier: return "barrier";
  case Opcode::AllocaPrivate: return "alloca_private";
  case Opcode::AllocaLocal: return "alloca_local";
  }
  return "?";
}

ValueId KernelFunction::new_value(const std::string &base, Type t) {
  std::string n = base;
  if (has_value_named(n)) {
    for (int i = 1;; ++i) {
      n = base + "." + std::to_string(i);
      if (!has_value_named(n))
        break;
    }
  }
  values.push_back(ValueInfo{n, t});
  return ValueId(values.size() - 1);
}

BlockId KernelFunction::new_block(const std::string &base) {
  std::string n = base;
  if (find_block(n) != kNoBlock) {
    for (int i = 1;; ++i) {
      n = base + "." + std::to_string(i);
      if (find_block(n) == kNoBlock)
        break;
    }
  }
  BasicBlock bb;
  bb.name = n;
  blocks.push_back(std::move(bb));
  return BlockId(blocks.size() - 1);
}

bool KernelFunction::has_value_named(const std::string &n) const {
  return find_value(n) != kNoValue;
}

ValueId KernelFunction::find_value(const std::string &n) const {
  for (size_t i = 0; i < values.size(); ++i)
    if (values[i].name == n)
      return ValueId(i);
  return kNoValue;
}

BlockId KernelFunction::find_block(const std::string &n) const {
  for (size_t i = 0; i < blocks.size(); ++i)
    if (!blocks[i].dead && blocks[i].name == n)
      return BlockId(i);
  return kNoBlock;
}

size_t KernelFunction::num_live_blocks() const {
  size_t n = 0;
  for (const auto &b : blocks)
    if (!b.dead)
      ++n;
  return n;
}

std::vector<BlockId> KernelFunction::live_blocks() const {
  std::vector<BlockId> out;
  for (size_t i = 0; i < blocks.size(); ++i)
    if (!blocks[i].dead)
      out.push_back(BlockId(i));
  return out;
}

} // namespace wgkit
