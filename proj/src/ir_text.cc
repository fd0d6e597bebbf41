//===- ir_text.cc - Textual IR parser and printer --------------------------===//
//
// Part of wgkit, under the Apache License v2.0.
// SPDX-License-Identifier: Apache-2.0
//
//===----------------------------------------------------------------------===//
//
// Grammar (one instruction per line, '#' starts a comment):
//
//   kernel @NAME(SPACE TYPE %p, ...) dims N {
//   LABEL:
//     %r = phi TYPE [LABEL %v] [LABEL %v] ...
//     %r = const TYPE LITERAL
//     %r = add %a %b              (binops: add sub mul div rem and or xor shl shr)
//     %r = cmp.lt %a %b           (cmp.{eq,ne,lt,le,gt,ge})
//     %r = select %c %a %b
//     %r = load SPACE %ptr [%idx]
//     store SPACE %val %ptr [%idx]
//     %r = get_local_id DIM       (also get_global_id, get_local_size,
//                                  get_group_id, get_flat_local_id)
//     barrier
//     %r = alloca_private TYPE COUNT
//     %r = alloca_local TYPE COUNT
//     br %c LABEL LABEL [!parallel_wi_loop N]
//     br LABEL [!parallel_wi_loop N]
//     ret
//   }
//
// Float literals use hex-float notation when printed; `inf`, `-inf` and
// `nan:HEXBITS` cover the non-finite patterns bit-exactly.
//
//===----------------------------------------------------------------------===//

#include "wgkit/ir.hpp"

#include <cctype>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <map>
#include <sstream>

namespace wgkit {

namespace {

struct Token {
  enum Kind { Ident, Local, Annot, Number, Punct, End } kind = End;
  std::string text;
  int line = 0, col = 0;
};

class Lexer {
public:
  explicit Lexer(const std::string &src) : src_(src) { advance(); }

  const Token &peek() const { return tok_; }
  Token next() {
    Token t = tok_;
    advance();
    return t;
  }

private:
  void advance() {
    skip_ws();
    tok_ = Token{};
    tok_.line = line_;
    tok_.col = col_;
    if (pos_ >= src_.size()) {
      tok_.kind = Token::End;
      return;
    }
    char c = src_[pos_];
    if (c == '%' || c == '@' || c == '!') {
      Token::Kind k = c == '!' ? Token::Annot : Token::Local;
      if (c == '@')
        k = Token::Ident; // kernel name, keep the '@' off
      size_t start = pos_ + 1;
      bump();
      while (pos_ < src_.size() && (is_name_char(src_[pos_]) || src_[pos_] == '.'))
        bump();
      tok_.kind = k;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (std::isdigit((unsigned char)c) || c == '-' || c == '+') {
      size_t start = pos_;
      bump();
      while (pos_ < src_.size() && (is_name_char(src_[pos_]) || src_[pos_] == '.' ||
                                    src_[pos_] == '+' || src_[pos_] == '-'))
        bump();
      tok_.kind = Token::Number;
      tok_.text = src_.substr(start, pos_ - start);
      return;
    }
    if (is_name_char(c)) {
      size_t start = pos_;
      while (pos_ < src_.size() && (is_name_char(src_[pos_]) || src_[pos_] == '.'))
        bump();
      tok_.kind = Token::Ident;
      tok_.text = src_.substr(start, pos_ - start);
      // inf/nan literals lex as idents; reclassify.
      if (tok_.text == "inf" || tok_.text == "nan")
        tok_.kind = Token::Number;
      return;
    }
    // punctuation
    tok_.kind = Token::Punct;
    tok_.text = std::string(1, c);
    bump();
  }

  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n')
          bump();
      } else if (std::isspace((unsigned char)c)) {
        bump();
      } else {
        break;
      }
    }
  }

  static bool is_name_char(char c) {
    return std::isalnum((unsigned char)c) || c == '_';
  }

  void bump() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  const std::string &src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
  Token tok_;
};

struct PendingUse {
  BlockId block;
  int phi_index = -1;   // >=0: phi incoming slot
  int inc_index = -1;
  int instr_index = -1; // >=0: body instruction operand slot
  int op_index = -1;
  bool in_term = false; // terminator condition
  std::string name;
  int line, col;
};

struct PendingTarget {
  BlockId block;
  int which; // 0/1 terminator successor, or phi slot
  int phi_index = -1;
  int inc_index = -1;
  std::string label;
  int line, col;
};

class Parser {
public:
  explicit Parser(const std::string &src) : lex_(src) {}

  KernelFunction run() {
    expect_ident("kernel");
    Token name = expect(Token::Ident, "kernel name");
    k_.name = name.text;
    expect_punct('(');
    if (!peek_punct(')')) {
      for (;;) {
        parse_param();
        if (peek_punct(','))
          lex_.next();
        else
          break;
      }
    }
    expect_punct(')');
    expect_ident("dims");
    k_.dims = (int)expect_int("dims");
    if (k_.dims < 1 || k_.dims > 3)
      fail("dims must be 1..3", lex_.peek());
    expect_punct('{');
    while (!peek_punct('}'))
      parse_block();
    expect_punct('}');
    resolve();
    if (k_.blocks.empty())
      throw ParseError("kernel has no blocks", 1, 1);
    k_.entry = 0;
    infer_types();
    return std::move(k_);
  }

private:
  Lexer lex_;
  KernelFunction k_;
  std::map<std::string, ValueId> defs_;
  std::map<std::string, std::pair<int, int>> def_locs_;
  std::vector<PendingUse> uses_;
  std::vector<PendingTarget> targets_;
  std::vector<bool> typed_;

  [[noreturn]] void fail(const std::string &msg, const Token &t) {
    throw ParseError(msg, t.line, t.col);
  }

  Token expect(Token::Kind kind, const char *what) {
    Token t = lex_.next();
    if (t.kind != kind)
      fail(std::string("expected ") + what + ", got '" + t.text + "'", t);
    return t;
  }

  void expect_ident(const char *word) {
    Token t = lex_.next();
    if (t.kind != Token::Ident || t.text != word)
      fail(std::string("expected '") + word + "'", t);
  }

  void expect_punct(char c) {
    Token t = lex_.next();
    if (t.kind != Token::Punct || t.text[0] != c)
      fail(std::string("expected '") + c + "'", t);
  }

  bool peek_punct(char c) {
    return lex_.peek().kind == Token::Punct && lex_.peek().text[0] == c;
  }

  int64_t expect_int(const char *what) {
    Token t = expect(Token::Number, what);
    errno = 0;
    char *end = nullptr;
    long long v = std::strtoll(t.text.c_str(), &end, 0);
    if (errno != 0 || end != t.text.c_str() + t.text.size())
      fail(std::string("bad integer for ") + what, t);
    return v;
  }

  ScalarKind parse_type() {
    Token t = expect(Token::Ident, "type");
    if (t.text == "i32") return ScalarKind::I32;
    if (t.text == "f32") return ScalarKind::F32;
    if (t.text == "f64") return ScalarKind::F64;
    if (t.text == "bool") return ScalarKind::Bool;
    fail("unknown type '" + t.text + "'", t);
  }

  AddressSpace parse_space(bool param_pos) {
    Token t = expect(Token::Ident, "address space");
    if (t.text == "global") return AddressSpace::Global;
    if (t.text == "local") return AddressSpace::Local;
    if (t.text == "constant") return AddressSpace::Constant;
    if (t.text == "private" && !param_pos) return AddressSpace::Private;
    if (t.text == "value" && param_pos) return AddressSpace::Value;
    fail("unknown address space '" + t.text + "'", t);
  }

  ValueId define(const std::string &name, Type ty, const Token &at, bool typed) {
    auto it = defs_.find(name);
    if (it != defs_.end())
      fail("redefinition of %" + name, at);
    ValueId v = ValueId(k_.values.size());
    k_.values.push_back(ValueInfo{name, ty});
    defs_[name] = v;
    def_locs_[name] = {at.line, at.col};
    typed_.push_back(typed);
    return v;
  }

  void parse_param() {
    AddressSpace space = parse_space(true);
    ScalarKind elem = parse_type();
    Token n = expect(Token::Local, "parameter name");
    Type ty = space == AddressSpace::Value ? Type::scalar(elem) : Type::ptr(space, elem);
    ValueId v = define(n.text, ty, n, true);
    k_.params.push_back(Param{n.text, space, elem, v});
  }

  void use(BlockId b, int instr, int op, const Token &t) {
    PendingUse u;
    u.block = b;
    u.instr_index = instr;
    u.op_index = op;
    u.name = t.text;
    u.line = t.line;
    u.col = t.col;
    uses_.push_back(u);
  }

  void parse_block() {
    Token label = expect(Token::Ident, "block label");
    expect_punct(':');
    if (k_.find_block(label.text) != kNoBlock)
      fail("duplicate block label '" + label.text + "'", label);
    BlockId b = k_.new_block(label.text);
    bool saw_phi_end = false;
    for (;;) {
      Token t = lex_.peek();
      if (t.kind == Token::Ident && (t.text == "br" || t.text == "ret")) {
        parse_terminator(b);
        return;
      }
      if (t.kind == Token::Ident && (t.text == "store" || t.text == "barrier")) {
        lex_.next();
        parse_noresult(b, t);
        saw_phi_end = true;
        continue;
      }
      if (t.kind == Token::Local) {
        parse_assign(b, saw_phi_end);
        continue;
      }
      fail("expected instruction or terminator, got '" + t.text + "'", t);
    }
  }

  void parse_noresult(BlockId b, const Token &t) {
    BasicBlock &bb = k_.block(b);
    if (t.text == "barrier") {
      Instruction in;
      in.op = Opcode::Barrier;
      bb.body.push_back(in);
      return;
    }
    // store SPACE %val %ptr [%idx]
    Instruction in;
    in.op = Opcode::Store;
    in.space = parse_space(false);
    in.operands.assign(3, kNoValue);
    Token val = expect(Token::Local, "store value");
    Token ptr = expect(Token::Local, "store pointer");
    expect_punct('[');
    Token idx = expect(Token::Local, "store index");
    expect_punct(']');
    bb.body.push_back(in);
    int ii = int(bb.body.size()) - 1;
    use(b, ii, 0, val);
    use(b, ii, 1, ptr);
    use(b, ii, 2, idx);
  }

  void parse_assign(BlockId b, bool &saw_phi_end) {
    BasicBlock &bb = k_.block(b);
    Token res = expect(Token::Local, "result");
    expect_punct('=');
    Token op = expect(Token::Ident, "opcode");

    if (op.text == "phi") {
      if (saw_phi_end || !bb.body.empty())
        fail("phi after non-phi instruction", op);
      Phi phi;
      phi.ty = parse_type();
      phi.result = define(res.text, Type::scalar(phi.ty), res, true);
      while (peek_punct('[')) {
        lex_.next();
        Token lbl = expect(Token::Ident, "phi predecessor label");
        Token val = expect(Token::Local, "phi value");
        expect_punct(']');
        phi.incoming.push_back(PhiIncoming{kNoBlock, kNoValue});
        PendingTarget pt;
        pt.block = b;
        pt.phi_index = int(bb.phis.size());
        pt.inc_index = int(phi.incoming.size()) - 1;
        pt.label = lbl.text;
        pt.line = lbl.line;
        pt.col = lbl.col;
        targets_.push_back(pt);
        PendingUse pu;
        pu.block = b;
        pu.phi_index = int(bb.phis.size());
        pu.inc_index = int(phi.incoming.size()) - 1;
        pu.name = val.text;
        pu.line = val.line;
        pu.col = val.col;
        uses_.push_back(pu);
      }
      if (phi.incoming.empty())
        fail("phi with no incoming values", op);
      bb.phis.push_back(std::move(phi));
      return;
    }

    saw_phi_end = true;
    Instruction in;
    bool typed = true;
    Type rty = Type::scalar(ScalarKind::I32);

    static const std::map<std::string, Opcode> kBinops = {
        {"add", Opcode::Add}, {"sub", Opcode::Sub}, {"mul", Opcode::Mul},
        {"div", Opcode::Div}, {"rem", Opcode::Rem}, {"and", Opcode::And},
        {"or", Opcode::Or},   {"xor", Opcode::Xor}, {"shl", Opcode::Shl},
        {"shr", Opcode::Shr}};
    static const std::map<std::string, Opcode> kCmps = {
        {"cmp.eq", Opcode::CmpEq}, {"cmp.ne", Opcode::CmpNe},
        {"cmp.lt", Opcode::CmpLt}, {"cmp.le", Opcode::CmpLe},
        {"cmp.gt", Opcode::CmpGt}, {"cmp.ge", Opcode::CmpGe}};
    static const std::map<std::string, Opcode> kBuiltins = {
        {"get_local_id", Opcode::GetLocalId},
        {"get_global_id", Opcode::GetGlobalId},
        {"get_local_size", Opcode::GetLocalSize},
        {"get_group_id", Opcode::GetGroupId},
        {"get_flat_local_id", Opcode::GetFlatLocalId}};

    int nops = 0;
    if (op.text == "const") {
      in.op = Opcode::Const;
      in.ty = parse_type();
      in.lit = parse_literal(in.ty);
      rty = Type::scalar(in.ty);
    } else if (auto it = kBinops.find(op.text); it != kBinops.end()) {
      in.op = it->second;
      nops = 2;
      typed = false; // type of the first operand
    } else if (auto it = kCmps.find(op.text); it != kCmps.end()) {
      in.op = it->second;
      nops = 2;
      rty = Type::scalar(ScalarKind::Bool);
    } else if (op.text == "select") {
      in.op = Opcode::Select;
      nops = 3;
      typed = false; // type of an arm
    } else if (op.text == "load") {
      in.op = Opcode::Load;
      in.space = parse_space(false);
      typed = false; // element type of the pointer
    } else if (auto it = kBuiltins.find(op.text); it != kBuiltins.end()) {
      in.op = it->second;
      if (in.op != Opcode::GetFlatLocalId) {
        in.dim = (int)expect_int("dimension");
        if (in.dim < 0 || in.dim > 2)
          fail("dimension must be 0..2", op);
      }
      rty = Type::scalar(ScalarKind::I32);
    } else if (op.text == "alloca_private" || op.text == "alloca_local") {
      in.op = op.text == "alloca_private" ? Opcode::AllocaPrivate : Opcode::AllocaLocal;
      in.ty = parse_type();
      in.count = expect_int("element count");
      if (in.count <= 0)
        fail("alloca count must be positive", op);
      rty = Type::ptr(in.op == Opcode::AllocaPrivate ? AddressSpace::Private
                                                     : AddressSpace::Local,
                      in.ty);
    } else {
      fail("unknown opcode '" + op.text + "'", op);
    }

    in.result = define(res.text, rty, res, typed);
    bb.body.push_back(in);
    int ii = int(bb.body.size()) - 1;

    if (in.op == Opcode::Load) {
      bb.body[ii].operands.assign(2, kNoValue);
      Token ptr = expect(Token::Local, "load pointer");
      expect_punct('[');
      Token idx = expect(Token::Local, "load index");
      expect_punct(']');
      use(b, ii, 0, ptr);
      use(b, ii, 1, idx);
    } else if (nops > 0) {
      bb.body[ii].operands.assign(nops, kNoValue);
      for (int i = 0; i < nops; ++i) {
        Token t = expect(Token::Local, "operand");
        use(b, ii, i, t);
      }
    }
  }

  Scalar parse_literal(ScalarKind ty) {
    Token t = lex_.next();
    if (t.kind != Token::Number && t.kind != Token::Ident)
      fail("expected literal", t);
    const std::string &s = t.text;
    switch (ty) {
    case ScalarKind::Bool:
      if (s == "true") return Scalar::make_bool(true);
      if (s == "false") return Scalar::make_bool(false);
      fail("bad bool literal '" + s + "'", t);
    case ScalarKind::I32: {
      errno = 0;
      char *end = nullptr;
      long long v = std::strtoll(s.c_str(), &end, 0);
      if (errno != 0 || end != s.c_str() + s.size())
        fail("bad i32 literal '" + s + "'", t);
      return Scalar::make_i32(int32_t(v));
    }
    case ScalarKind::F32:
    case ScalarKind::F64: {
      bool neg = !s.empty() && s[0] == '-';
      std::string body = neg || (!s.empty() && s[0] == '+') ? s.substr(1) : s;
      if (body == "nan") {
        // `nan:HEXBITS` carries the exact payload
        Scalar out;
        out.kind = ty;
        if (peek_punct(':')) {
          lex_.next();
          Token bits = lex_.next();
          if (bits.kind != Token::Number && bits.kind != Token::Ident)
            fail("expected nan payload bits", bits);
          out.bits = std::strtoull(bits.text.c_str(), nullptr, 16);
        } else {
          out.bits = ty == ScalarKind::F32 ? 0x7fc00000ull : 0x7ff8000000000000ull;
        }
        return out;
      }
      if (body == "inf") {
        double v = neg ? -INFINITY : INFINITY;
        return ty == ScalarKind::F32 ? Scalar::make_f32(float(v)) : Scalar::make_f64(v);
      }
      errno = 0;
      char *end = nullptr;
      if (ty == ScalarKind::F32) {
        float v = std::strtof(s.c_str(), &end);
        if (end != s.c_str() + s.size())
          fail("bad f32 literal '" + s + "'", t);
        return Scalar::make_f32(v);
      }
      double v = std::strtod(s.c_str(), &end);
      if (end != s.c_str() + s.size())
        fail("bad f64 literal '" + s + "'", t);
      return Scalar::make_f64(v);
    }
    }
    fail("bad literal", t);
  }

  void parse_terminator(BlockId b) {
    BasicBlock &bb = k_.block(b);
    Token t = lex_.next();
    if (t.text == "ret") {
      bb.term = Terminator::ret();
      return;
    }
    // br %c L1 L2 | br L
    Token first = lex_.next();
    if (first.kind == Token::Local) {
      bb.term.kind = Terminator::Kind::CondBr;
      PendingUse pu;
      pu.block = b;
      pu.in_term = true;
      pu.name = first.text;
      pu.line = first.line;
      pu.col = first.col;
      uses_.push_back(pu);
      Token l1 = expect(Token::Ident, "branch target");
      Token l2 = expect(Token::Ident, "branch target");
      targets_.push_back(PendingTarget{b, 0, -1, -1, l1.text, l1.line, l1.col});
      targets_.push_back(PendingTarget{b, 1, -1, -1, l2.text, l2.line, l2.col});
    } else if (first.kind == Token::Ident) {
      bb.term.kind = Terminator::Kind::Br;
      targets_.push_back(PendingTarget{b, 0, -1, -1, first.text, first.line, first.col});
    } else {
      fail("expected branch condition or target", first);
    }
    if (lex_.peek().kind == Token::Annot) {
      Token an = lex_.next();
      if (an.text != "parallel_wi_loop")
        fail("unknown annotation '!" + an.text + "'", an);
      bb.term.parallel_loop_id = (int)expect_int("loop id");
    }
  }

  void resolve() {
    for (const auto &pt : targets_) {
      BlockId target = k_.find_block(pt.label);
      if (target == kNoBlock)
        throw ParseError("unknown block label '" + pt.label + "'", pt.line, pt.col);
      if (pt.phi_index >= 0)
        k_.block(pt.block).phis[pt.phi_index].incoming[pt.inc_index].pred = target;
      else
        k_.block(pt.block).term.succ[pt.which] = target;
    }
    for (const auto &pu : uses_) {
      auto it = defs_.find(pu.name);
      if (it == defs_.end())
        throw ParseError("use of undefined value %" + pu.name, pu.line, pu.col);
      if (pu.in_term)
        k_.block(pu.block).term.cond = it->second;
      else if (pu.phi_index >= 0)
        k_.block(pu.block).phis[pu.phi_index].incoming[pu.inc_index].value = it->second;
      else
        k_.block(pu.block).body[pu.instr_index].operands[pu.op_index] = it->second;
    }
  }

  // Result types of binop/select/load depend on operand types; iterate to a
  // fixpoint (SSA has no untyped cycles that bypass phis, which are explicit).
  void infer_types() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (auto &bb : k_.blocks) {
        for (auto &in : bb.body) {
          if (in.result == kNoValue || typed_[in.result])
            continue;
          if (is_binop(in.op) || in.op == Opcode::Select) {
            ValueId src = in.op == Opcode::Select ? in.operands[1] : in.operands[0];
            if (typed_[src]) {
              k_.values[in.result].type = k_.values[src].type;
              typed_[in.result] = true;
              changed = true;
            }
          } else if (in.op == Opcode::Load) {
            ValueId ptr = in.operands[0];
            if (typed_[ptr]) {
              k_.values[in.result].type =
                  Type::scalar(k_.values[ptr].type.elem);
              typed_[in.result] = true;
              changed = true;
            }
          }
        }
      }
    }
    for (size_t v = 0; v < k_.values.size(); ++v)
      if (!typed_[v])
        throw ParseError("cannot infer type of %" + k_.values[v].name, 1, 1);
  }
};

std::string format_literal(const Scalar &s) {
  char buf[64];
  switch (s.kind) {
  case ScalarKind::I32:
    snprintf(buf, sizeof buf, "%" PRId32, s.as_i32());
    return buf;
  case ScalarKind::Bool:
    return s.as_bool() ? "true" : "false";
  case ScalarKind::F32: {
    float v = s.as_f32();
    if (std::isnan(v)) {
      snprintf(buf, sizeof buf, "nan:%" PRIx64, s.bits);
      return buf;
    }
    if (std::isinf(v))
      return v < 0 ? "-inf" : "inf";
    snprintf(buf, sizeof buf, "%a", double(v));
    return buf;
  }
  case ScalarKind::F64: {
    double v = s.as_f64();
    if (std::isnan(v)) {
      snprintf(buf, sizeof buf, "nan:%" PRIx64, s.bits);
      return buf;
    }
    if (std::isinf(v))
      return v < 0 ? "-inf" : "inf";
    snprintf(buf, sizeof buf, "%a", v);
    return buf;
  }
  }
  return "?";
}

} // namespace

KernelFunction parse_kernel(const std::string &text) {
  Parser p(text);
  KernelFunction k = p.run();
  validate(k);
  return k;
}

std::string print_kernel(const KernelFunction &k) {
  std::ostringstream os;
  os << "kernel @" << k.name << "(";
  for (size_t i = 0; i < k.params.size(); ++i) {
    const Param &p = k.params[i];
    if (i)
      os << ", ";
    os << to_string(p.space) << " " << to_string(p.elem) << " %" << p.name;
  }
  os << ") dims " << k.dims << " {\n";

  auto val = [&](ValueId v) { return "%" + k.value_name(v); };

  // The entry block prints first: parsing takes the first block as entry.
  std::vector<BlockId> order;
  order.push_back(k.entry);
  for (BlockId b = 0; b < k.blocks.size(); ++b)
    if (!k.blocks[b].dead && b != k.entry)
      order.push_back(b);

  for (BlockId b : order) {
    const BasicBlock &bb = k.blocks[b];
    os << bb.name << ":\n";
    for (const Phi &phi : bb.phis) {
      os << "  " << val(phi.result) << " = phi " << to_string(phi.ty);
      for (const PhiIncoming &pi : phi.incoming)
        os << " [" << k.block(pi.pred).name << " " << val(pi.value) << "]";
      os << "\n";
    }
    for (const Instruction &in : bb.body) {
      os << "  ";
      switch (in.op) {
      case Opcode::Const:
        os << val(in.result) << " = const " << to_string(in.ty) << " "
           << format_literal(in.lit);
        break;
      case Opcode::Store:
        os << "store " << to_string(in.space) << " " << val(in.operands[0]) << " "
           << val(in.operands[1]) << " [" << val(in.operands[2]) << "]";
        break;
      case Opcode::Load:
        os << val(in.result) << " = load " << to_string(in.space) << " "
           << val(in.operands[0]) << " [" << val(in.operands[1]) << "]";
        break;
      case Opcode::Barrier:
        os << "barrier";
        break;
      case Opcode::AllocaPrivate:
      case Opcode::AllocaLocal:
        os << val(in.result) << " = " << opcode_name(in.op) << " "
           << to_string(in.ty) << " " << in.count;
        break;
      case Opcode::GetLocalId:
      case Opcode::GetGlobalId:
      case Opcode::GetLocalSize:
      case Opcode::GetGroupId:
        os << val(in.result) << " = " << opcode_name(in.op) << " " << in.dim;
        break;
      case Opcode::GetFlatLocalId:
        os << val(in.result) << " = get_flat_local_id";
        break;
      default:
        os << val(in.result) << " = " << opcode_name(in.op);
        for (ValueId v : in.operands)
          os << " " << val(v);
        break;
      }
      os << "\n";
    }
    const Terminator &t = bb.term;
    switch (t.kind) {
    case Terminator::Kind::Ret:
      os << "  ret\n";
      break;
    case Terminator::Kind::Br:
      os << "  br " << k.block(t.succ[0]).name;
      if (t.parallel_loop_id >= 0)
        os << " !parallel_wi_loop " << t.parallel_loop_id;
      os << "\n";
      break;
    case Terminator::Kind::CondBr:
      os << "  br " << val(t.cond) << " " << k.block(t.succ[0]).name << " "
         << k.block(t.succ[1]).name;
      if (t.parallel_loop_id >= 0)
        os << " !parallel_wi_loop " << t.parallel_loop_id;
      os << "\n";
      break;
    }
  }
  os << "}\n";
  return os.str();
}

} // namespace wgkit
