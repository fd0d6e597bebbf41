//===- ir.hpp - SSA kernel IR core types ----------------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// A small SPMD kernel IR: SSA values, basic blocks with phis and a single
// terminator, explicit address spaces and a work-group barrier instruction.
// Functions own a dense value table; blocks and values are referenced by
// index. Deleted blocks are tombstoned and skipped by the printer.
//
//===----------------------------------------------------------------------===//

#ifndef WGKIT_IR_HPP
#define WGKIT_IR_HPP

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace wgkit {

enum class ScalarKind : uint8_t { I32, F32, F64, Bool };

// Param spaces include by-value scalars ("value"); load/store spaces include
// the per-work-item private space backing alloca_private.
enum class AddressSpace : uint8_t { Global, Local, Constant, Private, Value };

const char *to_string(ScalarKind k);
const char *to_string(AddressSpace s);

struct Type {
  enum class Kind : uint8_t { Scalar, Ptr } kind = Kind::Scalar;
  ScalarKind elem = ScalarKind::I32;
  AddressSpace space = AddressSpace::Value; // pointee space when kind == Ptr

  static Type scalar(ScalarKind k) { return Type{Kind::Scalar, k, AddressSpace::Value}; }
  static Type ptr(AddressSpace s, ScalarKind k) { return Type{Kind::Ptr, k, s}; }
  bool is_ptr() const { return kind == Kind::Ptr; }
  bool is_scalar() const { return kind == Kind::Scalar; }
  bool operator==(const Type &o) const {
    return kind == o.kind && elem == o.elem && (kind == Kind::Scalar || space == o.space);
  }
  bool operator!=(const Type &o) const { return !(*this == o); }
};

using ValueId = uint32_t;
using BlockId = uint32_t;
inline constexpr ValueId kNoValue = ~0u;
inline constexpr BlockId kNoBlock = ~0u;

// Runtime scalar, also used for constant literals. f32 is stored as its
// 32-bit pattern zero-extended so bit comparison is total.
struct Scalar {
  ScalarKind kind = ScalarKind::I32;
  uint64_t bits = 0;

  static Scalar make_i32(int32_t v);
  static Scalar make_f32(float v);
  static Scalar make_f64(double v);
  static Scalar make_bool(bool v);
  int32_t as_i32() const;
  float as_f32() const;
  double as_f64() const;
  bool as_bool() const;
  bool operator==(const Scalar &o) const { return kind == o.kind && bits == o.bits; }
};

enum class Opcode : uint8_t {
  Const,
  // binops
  Add, Sub, Mul, Div, Rem, And, Or, Xor, Shl, Shr,
  // comparisons (result bool)
  CmpEq, CmpNe, CmpLt, CmpLe, CmpGt, CmpGe,
  Select,
  Load,  // operands: ptr, index
  Store, // operands: value, ptr, index
  // builtins
  GetLocalId, GetGlobalId, GetLocalSize, GetGroupId, GetFlatLocalId,
  Barrier,
  AllocaPrivate, AllocaLocal,
};

bool is_binop(Opcode op);
bool is_cmp(Opcode op);
bool is_builtin(Opcode op);
const char *opcode_name(Opcode op);

struct Instruction {
  Opcode op = Opcode::Barrier;
  ValueId result = kNoValue;
  std::vector<ValueId> operands;
  ScalarKind ty = ScalarKind::I32;   // const / alloca element type
  AddressSpace space = AddressSpace::Global; // load/store space
  int dim = 0;                       // builtin dimension
  int64_t count = 0;                 // alloca element count
  Scalar lit;                        // const literal
};

struct PhiIncoming {
  BlockId pred = kNoBlock;
  ValueId value = kNoValue;
};

struct Phi {
  ValueId result = kNoValue;
  ScalarKind ty = ScalarKind::I32;
  std::vector<PhiIncoming> incoming;
};

struct Terminator {
  enum class Kind : uint8_t { Br, CondBr, Ret } kind = Kind::Ret;
  ValueId cond = kNoValue;
  BlockId succ[2] = {kNoBlock, kNoBlock};
  // Work-item loop latches carry a parallel annotation with the region id.
  int parallel_loop_id = -1;

  int num_succs() const { return kind == Kind::Ret ? 0 : kind == Kind::Br ? 1 : 2; }
  static Terminator ret() { return Terminator{}; }
  static Terminator br(BlockId t) {
    Terminator x; x.kind = Kind::Br; x.succ[0] = t; return x;
  }
  static Terminator cond_br(ValueId c, BlockId t, BlockId f) {
    Terminator x; x.kind = Kind::CondBr; x.cond = c; x.succ[0] = t; x.succ[1] = f; return x;
  }
};

struct BasicBlock {
  std::string name;
  std::vector<Phi> phis;
  std::vector<Instruction> body;
  Terminator term;
  bool dead = false;
};

struct Param {
  std::string name;
  AddressSpace space = AddressSpace::Value;
  ScalarKind elem = ScalarKind::I32;
  ValueId value = kNoValue; // SSA value bound to the param
};

struct LocalSize {
  int x = 1, y = 1, z = 1;
  int64_t product() const { return int64_t(x) * y * z; }
  int dim(int d) const { return d == 0 ? x : d == 1 ? y : z; }
};

struct ValueInfo {
  std::string name; // without the leading '%'
  Type type;
};

struct KernelFunction {
  std::string name;
  int dims = 1;
  std::vector<Param> params;
  std::vector<BasicBlock> blocks;
  std::vector<ValueInfo> values;
  BlockId entry = 0;

  BasicBlock &block(BlockId b) { return blocks[b]; }
  const BasicBlock &block(BlockId b) const { return blocks[b]; }
  Type value_type(ValueId v) const { return values[v].type; }
  const std::string &value_name(ValueId v) const { return values[v].name; }

  ValueId new_value(const std::string &base, Type t);
  BlockId new_block(const std::string &base);
  bool has_value_named(const std::string &n) const;
  ValueId find_value(const std::string &n) const;       // kNoValue if absent
  BlockId find_block(const std::string &n) const;       // kNoBlock if absent

  size_t num_live_blocks() const;
  std::vector<BlockId> live_blocks() const;
};

// Thrown by the parser with 1-based location info.
struct ParseError : std::runtime_error {
  int line, col;
  ParseError(const std::string &msg, int line_, int col_)
      : std::runtime_error(msg), line(line_), col(col_) {}
};

// Thrown by the validator and by transforms on broken invariants.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

KernelFunction parse_kernel(const std::string &text);
std::string print_kernel(const KernelFunction &k);

// Rewires every ret block to branch to one fresh exit block. Kernels whose
// reachable blocks never ret are rejected as undefined.
KernelFunction normalize_single_exit(const KernelFunction &k);

// Structural equality modulo block/value numbering (names are authoritative).
bool structurally_equal(const KernelFunction &a, const KernelFunction &b);

// Full invariant check: SSA dominance, entry shape, phi/pred agreement,
// operand typing, allocas restricted to the entry block.
void validate(const KernelFunction &k);

} // namespace wgkit

#endif // WGKIT_IR_HPP
