//===- codegen/CodeGen.cpp - AST to IR emission --------------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "Emitter.h"

#include "forge/devicert/DeviceRuntime.h"

#include <cassert>

namespace forge::codegen {

using namespace frontend;
using ir::Instr;
using ir::Opcode;
using ir::Ty;
using ir::Value;
using selectors::IntrinsicKind;

ir::Ty lower_type(Type t) {
  if (t.pointer)
    return Ty::Ptr;
  switch (t.scalar) {
  case ScalarKind::Void:
    return Ty::Void;
  case ScalarKind::I32:
    return Ty::I32;
  case ScalarKind::U32:
    return Ty::U32;
  case ScalarKind::I64:
    return Ty::I64;
  case ScalarKind::U64:
    return Ty::U64;
  case ScalarKind::Ident:
    return Ty::Ptr;
  }
  return Ty::Void;
}

Expected<std::string> map_intrinsic(IntrinsicKind kind,
                                    const selectors::TargetDesc &target) {
  auto it = target.intrinsic_table.find(kind);
  if (it == target.intrinsic_table.end())
    return make_diag(DiagKind::MissingIntrinsic,
                     "no " + std::string(selectors::intrinsic_kind_name(kind)) +
                         " intrinsic for target " +
                         std::string(selectors::arch_name(target.arch)));
  return it->second;
}

std::string kernel_name(unsigned id) {
  return "__omp_offload_" + std::to_string(id);
}

std::string fallback_name(unsigned id) {
  return "__omp_fallback_" + std::to_string(id);
}

namespace {

uint64_t fit(uint64_t bits, Ty t) {
  return ir::ty_bytes(t) == 4 ? bits & 0xFFFFFFFFull : bits;
}

Instr make(Opcode op, Ty type, std::vector<Value> args) {
  Instr in;
  in.op = op;
  in.type = type;
  in.args = std::move(args);
  return in;
}

bool is_literal(const Expr &e) {
  return e.kind == ExprKind::IntLit ||
         (e.kind == ExprKind::Unary && e.text == "-" &&
          e.operands[0].kind == ExprKind::IntLit);
}

Opcode arith_opcode(std::string_view op) {
  if (op == "+")
    return Opcode::Add;
  if (op == "-")
    return Opcode::Sub;
  if (op == "*")
    return Opcode::Mul;
  if (op == "/")
    return Opcode::Div;
  if (op == "%")
    return Opcode::Rem;
  if (op == "&")
    return Opcode::And;
  if (op == "|")
    return Opcode::Or;
  if (op == "^")
    return Opcode::Xor;
  if (op == "<<")
    return Opcode::Shl;
  return Opcode::Shr;
}

const char *compare_pred(std::string_view op) {
  if (op == "==")
    return "eq";
  if (op == "!=")
    return "ne";
  if (op == "<")
    return "lt";
  if (op == "<=")
    return "le";
  if (op == ">")
    return "gt";
  if (op == ">=")
    return "ge";
  return nullptr;
}

/// A typed rvalue. `boolean` marks values known to be 0 or 1.
struct RV {
  Value v;
  Type t;
  bool boolean = false;
};

class BodyEmitter {
public:
  BodyEmitter(ModuleEmitter &m, FunctionBuilder &b, Type ret, bool kernel,
              bool device)
      : m_(m), b_(b), ret_(ret), kernel_(kernel), device_(device) {
    scopes_.emplace_back();
  }

  void bind(const std::string &name, Type type, Value value, bool array) {
    int var = b_.new_var(lower_type(array ? type.pointer_to() : type));
    b_.write(var, value);
    scopes_.back()[name] = Local{var, array ? type.pointer_to() : type, array};
  }

  void stmts(const StmtList &list) {
    for (const Stmt &s : list)
      stmt(s);
  }

private:
  struct Local {
    int var = 0;
    Type type;
    bool array = false;
  };
  struct Loop {
    int break_to;
    int continue_to;
  };
  /// An assignable location: an SSA variable or a memory address.
  struct LV {
    bool local = false;
    int var = 0;
    Value addr;
    Type type;
  };

  void error(SourceLoc loc, std::string msg,
             DiagKind kind = DiagKind::Semantic) {
    m_.error(kind, loc, std::move(msg));
  }

  const Local *find_local(const std::string &name) const {
    for (size_t i = scopes_.size(); i-- > 0;) {
      auto it = scopes_[i].find(name);
      if (it != scopes_[i].end())
        return &it->second;
    }
    return nullptr;
  }

  void scoped(const StmtList &list) {
    scopes_.emplace_back();
    stmts(list);
    scopes_.pop_back();
  }

  //===--------------------------------------------------------------------===//
  // Statements
  //===--------------------------------------------------------------------===//

  void stmt(const Stmt &s) {
    std::visit([&](const auto &n) { visit(s, n); }, s.node);
  }

  void visit(const Stmt &, const BlockStmt &n) { scoped(n.body); }

  void visit(const Stmt &s, const DeclStmt &n) {
    const VarDecl &v = n.var;
    if (v.array_len) {
      Instr a = make(Opcode::Alloca, lower_type(v.type), {});
      a.count = *v.array_len;
      Value base = b_.emit(std::move(a));
      for (size_t i = 0; i < v.init.size(); ++i) {
        Value elem = b_.emit(make(Opcode::Gep, lower_type(v.type),
                                  {base, Value::imm(i)}));
        Value val = convert(expr(v.init[i]), v.type, s.loc);
        b_.emit_void(make(Opcode::Store, lower_type(v.type), {val, elem}));
      }
      int var = b_.new_var(Ty::Ptr);
      b_.write(var, base);
      scopes_.back()[v.name] = Local{var, v.type.pointer_to(), true};
      return;
    }
    Value init = Value::undef();
    if (!v.init.empty())
      init = convert(expr(v.init.front()), v.type, s.loc);
    int var = b_.new_var(lower_type(v.type));
    b_.write(var, init);
    scopes_.back()[v.name] = Local{var, v.type, false};
  }

  void visit(const Stmt &, const ExprStmt &n) { expr(n.expr); }

  void visit(const Stmt &, const IfStmt &n) {
    Value c = condition(n.cond);
    int then_block = b_.create_block();
    int else_block = n.else_branch.empty() ? -1 : b_.create_block();
    int merge = b_.create_block();
    b_.br(c, then_block, else_block < 0 ? merge : else_block);
    b_.seal(then_block);
    b_.set_current(then_block);
    scoped(n.then_branch);
    b_.jmp(merge);
    if (else_block >= 0) {
      b_.seal(else_block);
      b_.set_current(else_block);
      scoped(n.else_branch);
      b_.jmp(merge);
    }
    b_.seal(merge);
    b_.set_current(merge);
  }

  void visit(const Stmt &, const WhileStmt &n) {
    int header = b_.create_block();
    int body = b_.create_block();
    int exit = b_.create_block();
    b_.jmp(header);
    b_.set_current(header);
    Value c = condition(n.cond);
    b_.br(c, body, exit);
    b_.seal(body);
    b_.set_current(body);
    loops_.push_back({exit, header});
    scoped(n.body);
    loops_.pop_back();
    b_.jmp(header);
    b_.seal(header);
    b_.seal(exit);
    b_.set_current(exit);
  }

  void visit(const Stmt &, const ForStmt &n) {
    scopes_.emplace_back();
    stmts(n.init);
    int header = b_.create_block();
    int body = b_.create_block();
    int step = b_.create_block();
    int exit = b_.create_block();
    b_.jmp(header);
    b_.set_current(header);
    if (n.cond)
      b_.br(condition(*n.cond), body, exit);
    else
      b_.jmp(body);
    b_.seal(body);
    b_.set_current(body);
    loops_.push_back({exit, step});
    scoped(n.body);
    loops_.pop_back();
    b_.jmp(step);
    b_.seal(step);
    b_.set_current(step);
    if (n.step)
      expr(*n.step);
    b_.jmp(header);
    b_.seal(header);
    b_.seal(exit);
    b_.set_current(exit);
    scopes_.pop_back();
  }

  void visit(const Stmt &s, const ReturnStmt &n) {
    if (kernel_) {
      Value v = n.value ? convert(expr(*n.value), Type::i64(), s.loc)
                        : Value::imm(0);
      b_.ret(v, Ty::I64);
      return;
    }
    if (ret_.is_void()) {
      if (n.value) {
        error(s.loc, "void function cannot return a value");
        expr(*n.value);
      }
      b_.ret(std::nullopt, Ty::Void);
      return;
    }
    if (!n.value) {
      error(s.loc, "non-void function must return a value");
      b_.ret(Value::imm(0), lower_type(ret_));
      return;
    }
    b_.ret(convert(expr(*n.value), ret_, s.loc), lower_type(ret_));
  }

  void visit(const Stmt &s, const BreakStmt &) {
    if (loops_.empty())
      return error(s.loc, "'break' outside a loop");
    b_.jmp(loops_.back().break_to);
  }

  void visit(const Stmt &s, const ContinueStmt &) {
    if (loops_.empty())
      return error(s.loc, "'continue' outside a loop");
    b_.jmp(loops_.back().continue_to);
  }

  void visit(const Stmt &s, const AtomicConstruct &) {
    error(s.loc, "atomic construct reached code generation unlowered",
          DiagKind::NotRepresentable);
  }

  void visit(const Stmt &s, const AtomicIntrinsic &n) {
    std::optional<LV> x = lvalue(n.x);
    if (!x)
      return;
    if (x->local || !x->type.is_integer()) {
      error(s.loc, "atomic location must be an integer object in memory",
            DiagKind::NotRepresentable);
      return;
    }
    Type t = x->type;
    Ty ty = lower_type(t);
    Value e = convert(expr(n.e), t, s.loc);
    std::optional<Value> d;
    if (n.d)
      d = convert(expr(*n.d), t, s.loc);
    Value old;
    if (m_.target().arch == selectors::Arch::host) {
      old = sequential_rmw(n.kind, ty, x->addr, e, d);
    } else {
      Instr in = make(Opcode::Atomic, ty, {x->addr, e});
      in.name = std::string(atomic_kind_name(n.kind));
      if (d)
        in.args.push_back(*d);
      old = b_.emit(std::move(in));
    }
    std::optional<LV> v = lvalue(n.v);
    if (v)
      store(*v, convert(RV{old, t}, v->type, s.loc));
  }

  /// Plain read-modify-write used by the sequential host fallback.
  Value sequential_rmw(AtomicKind kind, Ty ty, Value addr, Value e,
                       std::optional<Value> d) {
    Value old = b_.emit(make(Opcode::Load, ty, {addr}));
    auto conditional_store = [&](const char *pred, Value stored) {
      Instr cmp = make(Opcode::ICmp, ty, {old, e});
      cmp.name = pred;
      Value c = b_.emit(std::move(cmp));
      int store_block = b_.create_block();
      int cont = b_.create_block();
      b_.br(c, store_block, cont);
      b_.seal(store_block);
      b_.set_current(store_block);
      b_.emit_void(make(Opcode::Store, ty, {stored, addr}));
      b_.jmp(cont);
      b_.seal(cont);
      b_.set_current(cont);
    };
    switch (kind) {
    case AtomicKind::ADD: {
      Value sum = b_.emit(make(Opcode::Add, ty, {old, e}));
      b_.emit_void(make(Opcode::Store, ty, {sum, addr}));
      break;
    }
    case AtomicKind::XCHG:
      b_.emit_void(make(Opcode::Store, ty, {e, addr}));
      break;
    case AtomicKind::MAX:
      conditional_store("lt", e);
      break;
    case AtomicKind::MIN:
      conditional_store("gt", e);
      break;
    case AtomicKind::CAS:
      conditional_store("eq", *d);
      break;
    case AtomicKind::INC: {
      Instr cmp = make(Opcode::ICmp, ty, {old, e});
      cmp.name = "ge";
      Value wrap = b_.emit(std::move(cmp));
      int wrap_block = b_.create_block();
      int bump_block = b_.create_block();
      int cont = b_.create_block();
      b_.br(wrap, wrap_block, bump_block);
      b_.seal(wrap_block);
      b_.seal(bump_block);
      b_.set_current(wrap_block);
      b_.emit_void(make(Opcode::Store, ty, {Value::imm(0), addr}));
      b_.jmp(cont);
      b_.set_current(bump_block);
      Value next = b_.emit(make(Opcode::Add, ty, {old, Value::imm(1)}));
      b_.emit_void(make(Opcode::Store, ty, {next, addr}));
      b_.jmp(cont);
      b_.seal(cont);
      b_.set_current(cont);
      break;
    }
    }
    return old;
  }

  void visit(const Stmt &s, const TargetStmt &n) {
    if (!m_.host_pass() || device_) {
      error(s.loc, "target region in device code");
      return;
    }
    const TargetRegion &region = m_.spec().module.target_regions[n.region_id];
    Instr teams;
    teams.op = Opcode::GridTeams;
    teams.type = Ty::U32;
    teams.count = region.num_teams.value_or(1);
    Value t = b_.emit(std::move(teams));
    Instr threads;
    threads.op = Opcode::GridThreads;
    threads.type = Ty::U32;
    threads.count = region.thread_limit.value_or(1);
    Value th = b_.emit(std::move(threads));

    Instr launch;
    launch.op = Opcode::TgtTarget;
    launch.type = Ty::I32;
    launch.count = region.id;
    launch.args = {t, th};
    Instr fallback = make(Opcode::Call, Ty::Void, {t, th});
    fallback.name = fallback_name(region.id);
    fallback.arg_types = {Ty::U32, Ty::U32};
    for (const CapturedArg &arg : region.captured_args) {
      const Local *local = find_local(arg.name);
      if (!local) {
        error(s.loc, "captured variable '" + arg.name + "' is not a local");
        return;
      }
      ir::KernelArg ka;
      ka.buffer = arg.kind == CaptureKind::Buffer;
      ka.type = lower_type(arg.type);
      ka.count = arg.element_count;
      Value v = b_.read(local->var);
      if (!ka.buffer)
        v = convert(RV{v, local->type}, arg.type, s.loc);
      launch.kernel_args.push_back(ka);
      launch.args.push_back(v);
      fallback.args.push_back(v);
      fallback.arg_types.push_back(ka.buffer ? Ty::Ptr : ka.type);
    }
    Value status = b_.emit(std::move(launch));
    int fb = b_.create_block();
    int cont = b_.create_block();
    b_.br(status, fb, cont);
    b_.seal(fb);
    b_.set_current(fb);
    b_.emit_void(std::move(fallback));
    b_.jmp(cont);
    b_.seal(cont);
    b_.set_current(cont);
  }

  //===--------------------------------------------------------------------===//
  // Expressions
  //===--------------------------------------------------------------------===//

  Value convert(RV x, Type to, SourceLoc loc) {
    if (x.t.is_void()) {
      error(loc, "void value used in an expression");
      return Value::undef();
    }
    if (to.pointer || x.t.pointer) {
      if (to.pointer && x.t.pointer) {
        if (to.scalar != x.t.scalar && to.scalar != ScalarKind::Ident &&
            x.t.scalar != ScalarKind::Ident)
          error(loc, "incompatible pointer types '" + type_name(x.t) +
                         "' and '" + type_name(to) + "'");
        return x.v;
      }
      if (to.pointer && x.v.kind == Value::Kind::Imm && x.v.num == 0)
        return Value::imm(0);
      error(loc, "cannot convert '" + type_name(x.t) + "' to '" +
                     type_name(to) + "'");
      return Value::undef();
    }
    Ty from = lower_type(x.t);
    Ty dst = lower_type(to);
    if (from == dst)
      return x.v;
    if (x.v.kind == Value::Kind::Imm) {
      uint64_t bits = x.v.num;
      if (from == Ty::I32)
        bits = static_cast<uint64_t>(
            static_cast<int64_t>(static_cast<int32_t>(bits)));
      return Value::imm(fit(bits, dst));
    }
    if (x.v.kind == Value::Kind::Undef)
      return x.v;
    Instr in = make(Opcode::Conv, dst, {x.v});
    in.from = from;
    return b_.emit(std::move(in));
  }

  /// A 32-bit value that is nonzero when `e` is true.
  Value condition(const Expr &e) {
    RV r = expr(e);
    if (r.t.is_void()) {
      error(e.loc, "void value used as a condition");
      return Value::imm(0);
    }
    if (!r.t.pointer && r.t.bits() == 32)
      return r.v;
    return to_bool(r).v;
  }

  RV to_bool(RV r) {
    if (r.boolean)
      return r;
    Instr cmp = make(Opcode::ICmp, lower_type(r.t), {r.v, Value::imm(0)});
    cmp.name = "ne";
    return RV{b_.emit(std::move(cmp)), Type::i32(), true};
  }

  RV expr(const Expr &e) {
    switch (e.kind) {
    case ExprKind::IntLit:
      return RV{Value::imm(fit(e.value, lower_type(e.lit_type))), e.lit_type};
    case ExprKind::StrLit:
      error(e.loc, "unexpected string literal");
      return RV{Value::undef(), Type::i32()};
    case ExprKind::Var:
      return var(e);
    case ExprKind::Unary:
      return unary(e);
    case ExprKind::Binary:
      return binary(e);
    case ExprKind::Assign:
      return assign(e);
    case ExprKind::Ternary:
      return ternary(e);
    case ExprKind::Call:
      return call(e);
    case ExprKind::Index:
    case ExprKind::Deref: {
      std::optional<LV> lv = lvalue(e);
      if (!lv)
        return RV{Value::undef(), Type::i32()};
      return RV{load(*lv), lv->type};
    }
    }
    return RV{Value::undef(), Type::i32()};
  }

  RV var(const Expr &e) {
    if (const Local *l = find_local(e.text))
      return RV{b_.read(l->var), l->type};
    const GlobalDecl *g = m_.global(e.text);
    if (!g) {
      error(e.loc, "use of undeclared identifier '" + e.text + "'");
      return RV{Value::undef(), Type::i32()};
    }
    if (device_ && !m_.global_in_device_span(e.text)) {
      error(e.loc, "global '" + e.text + "' is not declared target");
      return RV{Value::undef(), Type::i32()};
    }
    if (g->array_len)
      return RV{Value::global(g->name), g->value_type.pointer_to()};
    return RV{b_.emit(make(Opcode::Load, lower_type(g->value_type),
                           {Value::global(g->name)})),
              g->value_type};
  }

  RV unary(const Expr &e) {
    const Expr &operand = e.operands[0];
    if (e.text == "-" && operand.kind == ExprKind::IntLit) {
      Ty t = lower_type(operand.lit_type);
      return RV{Value::imm(fit(~operand.value + 1, t)), operand.lit_type};
    }
    RV x = expr(operand);
    if (!x.t.is_integer()) {
      error(e.loc, "invalid operand to unary '" + e.text + "'");
      return RV{Value::undef(), Type::i32()};
    }
    Ty t = lower_type(x.t);
    if (e.text == "-")
      return RV{b_.emit(make(Opcode::Sub, t, {Value::imm(0), x.v})), x.t};
    if (e.text == "~")
      return RV{b_.emit(make(Opcode::Xor, t, {x.v, Value::imm(fit(~0ull, t))})),
                x.t};
    Instr cmp = make(Opcode::ICmp, t, {x.v, Value::imm(0)});
    cmp.name = "eq";
    return RV{b_.emit(std::move(cmp)), Type::i32(), true};
  }

  static Type common_type(const RV &a, const RV &b, bool a_lit, bool b_lit) {
    if (a_lit && !b_lit)
      return b.t;
    if (b_lit && !a_lit)
      return a.t;
    if (a.t == b.t)
      return a.t;
    if (a.t.bits() != b.t.bits())
      return a.t.bits() > b.t.bits() ? a.t : b.t;
    return a.t.is_signed() ? b.t : a.t;
  }

  Value index_value(RV idx, SourceLoc loc) {
    if (!idx.t.is_integer()) {
      error(loc, "array index is not an integer");
      return Value::imm(0);
    }
    return convert(idx, Type::i64(), loc);
  }

  Value element_address(RV base, RV idx, SourceLoc loc, bool negate = false) {
    Value i = index_value(idx, loc);
    if (negate) {
      if (i.kind == Value::Kind::Imm)
        i = Value::imm(~i.num + 1);
      else
        i = b_.emit(make(Opcode::Sub, Ty::I64, {Value::imm(0), i}));
    }
    return b_.emit(make(Opcode::Gep, lower_type(base.t.pointee()), {base.v, i}));
  }

  RV logical(const Expr &e) {
    bool is_and = e.text == "&&";
    int var = b_.new_var(Ty::I32);
    Value lhs = to_bool(expr(e.operands[0])).v;
    b_.write(var, Value::imm(is_and ? 0 : 1));
    int rhs_block = b_.create_block();
    int merge = b_.create_block();
    if (is_and)
      b_.br(lhs, rhs_block, merge);
    else
      b_.br(lhs, merge, rhs_block);
    b_.seal(rhs_block);
    b_.set_current(rhs_block);
    b_.write(var, to_bool(expr(e.operands[1])).v);
    b_.jmp(merge);
    b_.seal(merge);
    b_.set_current(merge);
    return RV{b_.read(var), Type::i32(), true};
  }

  RV binary(const Expr &e) {
    const std::string &op = e.text;
    if (op == "&&" || op == "||")
      return logical(e);
    RV l = expr(e.operands[0]);
    RV r = expr(e.operands[1]);
    if (l.t.is_void() || r.t.is_void()) {
      error(e.loc, "void value used in an expression");
      return RV{Value::undef(), Type::i32()};
    }
    const char *pred = compare_pred(op);
    if (l.t.pointer || r.t.pointer) {
      if ((op == "+" || op == "-") && l.t.pointer && r.t.is_integer())
        return RV{element_address(l, r, e.loc, op == "-"), l.t};
      if (op == "+" && r.t.pointer && l.t.is_integer())
        return RV{element_address(r, l, e.loc), r.t};
      if (pred && l.t.pointer && r.t.pointer) {
        Instr cmp = make(Opcode::ICmp, Ty::Ptr, {l.v, r.v});
        cmp.name = pred;
        return RV{b_.emit(std::move(cmp)), Type::i32(), true};
      }
      error(e.loc, "invalid operands to binary '" + op + "'");
      return RV{Value::undef(), Type::i32()};
    }
    if (!l.t.is_integer() || !r.t.is_integer()) {
      error(e.loc, "invalid operands to binary '" + op + "'");
      return RV{Value::undef(), Type::i32()};
    }
    Type t = (op == "<<" || op == ">>")
                 ? l.t
                 : common_type(l, r, is_literal(e.operands[0]),
                               is_literal(e.operands[1]));
    Value a = convert(l, t, e.loc);
    Value b = convert(r, t, e.loc);
    if (pred) {
      Instr cmp = make(Opcode::ICmp, lower_type(t), {a, b});
      cmp.name = pred;
      return RV{b_.emit(std::move(cmp)), Type::i32(), true};
    }
    return RV{b_.emit(make(arith_opcode(op), lower_type(t), {a, b})), t};
  }

  RV ternary(const Expr &e) {
    Value c = condition(e.operands[0]);
    int then_block = b_.create_block();
    int else_block = b_.create_block();
    int merge = b_.create_block();
    b_.br(c, then_block, else_block);
    b_.seal(then_block);
    b_.seal(else_block);
    // Both arms are emitted before the result type is known; the arm values
    // are converted at the end of each arm.
    b_.set_current(then_block);
    RV a = expr(e.operands[1]);
    int then_end = b_.current();
    b_.set_current(else_block);
    RV b = expr(e.operands[2]);
    int else_end = b_.current();
    Type t = a.t.pointer ? a.t
                         : common_type(a, b, is_literal(e.operands[1]),
                                       is_literal(e.operands[2]));
    if (t.is_void()) {
      error(e.loc, "void operand in conditional expression");
      t = Type::i32();
    }
    int var = b_.new_var(lower_type(t));
    b_.set_current(then_end);
    b_.write(var, convert(a, t, e.loc));
    b_.jmp(merge);
    b_.set_current(else_end);
    b_.write(var, convert(b, t, e.loc));
    b_.jmp(merge);
    b_.seal(merge);
    b_.set_current(merge);
    return RV{b_.read(var), t, a.boolean && b.boolean};
  }

  std::optional<LV> lvalue(const Expr &e) {
    switch (e.kind) {
    case ExprKind::Var: {
      if (const Local *l = find_local(e.text)) {
        if (l->array) {
          error(e.loc, "array '" + e.text + "' is not assignable");
          return std::nullopt;
        }
        return LV{true, l->var, {}, l->type};
      }
      const GlobalDecl *g = m_.global(e.text);
      if (!g) {
        error(e.loc, "use of undeclared identifier '" + e.text + "'");
        return std::nullopt;
      }
      if (device_ && !m_.global_in_device_span(e.text)) {
        error(e.loc, "global '" + e.text + "' is not declared target");
        return std::nullopt;
      }
      if (g->array_len) {
        error(e.loc, "array '" + e.text + "' is not assignable");
        return std::nullopt;
      }
      return LV{false, 0, Value::global(g->name), g->value_type};
    }
    case ExprKind::Deref: {
      RV p = expr(e.operands[0]);
      if (!p.t.pointer || p.t.scalar == ScalarKind::Ident) {
        error(e.loc, "cannot dereference '" + type_name(p.t) + "'");
        return std::nullopt;
      }
      return LV{false, 0, p.v, p.t.pointee()};
    }
    case ExprKind::Index: {
      RV base = expr(e.operands[0]);
      if (!base.t.pointer || base.t.scalar == ScalarKind::Ident) {
        error(e.loc, "subscripted value is not an array or pointer");
        return std::nullopt;
      }
      RV idx = expr(e.operands[1]);
      return LV{false, 0, element_address(base, idx, e.loc),
                base.t.pointee()};
    }
    default:
      error(e.loc, "expression is not assignable");
      return std::nullopt;
    }
  }

  Value load(const LV &lv) {
    if (lv.local)
      return b_.read(lv.var);
    return b_.emit(make(Opcode::Load, lower_type(lv.type), {lv.addr}));
  }

  void store(const LV &lv, Value v) {
    if (lv.local)
      b_.write(lv.var, v);
    else
      b_.emit_void(make(Opcode::Store, lower_type(lv.type), {v, lv.addr}));
  }

  RV assign(const Expr &e) {
    const std::string &op = e.text;
    if (op == "=") {
      RV r = expr(e.operands[1]);
      std::optional<LV> lv = lvalue(e.operands[0]);
      if (!lv)
        return RV{Value::undef(), Type::i32()};
      Value v = convert(r, lv->type, e.loc);
      store(*lv, v);
      return RV{v, lv->type};
    }
    std::optional<LV> lv = lvalue(e.operands[0]);
    if (!lv)
      return RV{Value::undef(), Type::i32()};
    std::string bop = op.substr(0, op.size() - 1);
    RV old{load(*lv), lv->type};
    RV r = expr(e.operands[1]);
    Value v;
    if (lv->type.pointer) {
      if ((bop != "+" && bop != "-") || !r.t.is_integer()) {
        error(e.loc, "invalid pointer update '" + op + "'");
        return RV{Value::undef(), Type::i32()};
      }
      v = element_address(old, r, e.loc, bop == "-");
    } else {
      if (!lv->type.is_integer()) {
        error(e.loc, "invalid compound assignment");
        return RV{Value::undef(), Type::i32()};
      }
      v = b_.emit(make(arith_opcode(bop), lower_type(lv->type),
                       {old.v, convert(r, lv->type, e.loc)}));
    }
    store(*lv, v);
    return RV{v, lv->type};
  }

  std::vector<Value> call_args(const Expr &e, const std::vector<Type> &params,
                               std::vector<Ty> &types) {
    std::vector<Value> args;
    if (e.operands.size() != params.size()) {
      error(e.loc, "'" + e.text + "' expects " + std::to_string(params.size()) +
                       " argument(s), got " +
                       std::to_string(e.operands.size()));
      return args;
    }
    for (size_t i = 0; i < params.size(); ++i) {
      args.push_back(convert(expr(e.operands[i]), params[i], e.operands[i].loc));
      types.push_back(lower_type(params[i]));
    }
    return args;
  }

  RV call(const Expr &e) {
    const std::string &name = e.text;
    if (name == "print")
      return print(e);
    if (name == "error") {
      std::string msg = e.operands.empty() ? "error" : e.operands[0].text;
      error(e.loc, msg, DiagKind::MissingIntrinsic);
      return RV{Value::undef(), Type::void_type()};
    }
    if (name == "trap") {
      b_.trap(e.operands.empty() ? "Trap" : e.operands[0].text);
      return RV{Value::undef(), Type::void_type()};
    }

    if (const ModuleEmitter::FunctionInfo *fi = m_.function(name)) {
      if (device_ && !fi->device) {
        error(e.loc, "function '" + name +
                         "' is called from device code but not declared "
                         "target");
        return RV{Value::undef(), fi->decl->return_type};
      }
      std::vector<Type> params;
      for (const Param &p : fi->decl->params)
        params.push_back(p.type);
      if (fi->decl->is_definition())
        m_.request(name);
      return emit_call(e, name, fi->decl->return_type, params);
    }

    if (std::optional<IntrinsicKind> kind = m_.target().lookup(name))
      return intrinsic(e, *kind);
    if (selectors::known_intrinsic(name)) {
      error(e.loc,
            "intrinsic '" + name + "' is not available on target " +
                std::string(selectors::arch_name(m_.target().arch)),
            DiagKind::MissingIntrinsic);
      return RV{Value::undef(), Type::u32()};
    }
    auto ext = m_.externals().find(name);
    if (ext != m_.externals().end())
      return emit_call(e, name, ext->second.ret, ext->second.params);
    error(e.loc, "call to undeclared function '" + name + "'");
    return RV{Value::undef(), Type::i32()};
  }

  RV emit_call(const Expr &e, const std::string &name, Type ret,
               const std::vector<Type> &params) {
    Instr in;
    in.op = Opcode::Call;
    in.name = name;
    in.type = lower_type(ret);
    in.args = call_args(e, params, in.arg_types);
    if (ret.is_void()) {
      b_.emit_void(std::move(in));
      return RV{Value::undef(), ret};
    }
    return RV{b_.emit(std::move(in)), ret};
  }

  RV intrinsic(const Expr &e, IntrinsicKind kind) {
    unsigned arity = selectors::intrinsic_arity(kind);
    std::vector<Type> params;
    if (arity > 0)
      params.push_back(Type::u32().pointer_to());
    for (unsigned i = 1; i < arity; ++i)
      params.push_back(Type::u32());
    std::vector<Ty> types;
    std::vector<Value> args = call_args(e, params, types);
    if (args.size() != params.size())
      return RV{Value::undef(), Type::u32()};
    if (selectors::intrinsic_is_generic_atomic(kind)) {
      Instr in = make(Opcode::Atomic, Ty::U32, std::move(args));
      static const char *names[] = {"add", "max", "min", "xchg", "cas"};
      in.name = names[static_cast<int>(kind)];
      return RV{b_.emit(std::move(in)), Type::u32()};
    }
    Instr in;
    in.op = Opcode::Intrinsic;
    in.name = e.text;
    in.args = std::move(args);
    in.arg_types = std::move(types);
    if (!selectors::intrinsic_has_result(kind)) {
      in.type = Ty::Void;
      b_.emit_void(std::move(in));
      return RV{Value::undef(), Type::void_type()};
    }
    in.type = Ty::U32;
    return RV{b_.emit(std::move(in)), Type::u32()};
  }

  RV print(const Expr &e) {
    if (device_) {
      error(e.loc, "print is only available in host code");
      return RV{Value::undef(), Type::void_type()};
    }
    Instr in;
    in.op = Opcode::Intrinsic;
    in.type = Ty::Void;
    in.name = "print";
    for (const Expr &a : e.operands) {
      if (a.kind == ExprKind::StrLit) {
        in.args.push_back(Value::str(a.text));
        in.arg_types.push_back(Ty::Ptr);
        continue;
      }
      RV r = expr(a);
      if (r.t.is_void()) {
        error(a.loc, "void value passed to print");
        continue;
      }
      in.args.push_back(r.v);
      in.arg_types.push_back(lower_type(r.t));
    }
    b_.emit_void(std::move(in));
    return RV{Value::undef(), Type::void_type()};
  }

  ModuleEmitter &m_;
  FunctionBuilder &b_;
  Type ret_;
  bool kernel_;
  bool device_;
  std::vector<std::map<std::string, Local>> scopes_;
  std::vector<Loop> loops_;
};

} // namespace

//===----------------------------------------------------------------------===//
// ModuleEmitter
//===----------------------------------------------------------------------===//

ModuleEmitter::ModuleEmitter(const lowering::SpecializedModule &spec,
                             const selectors::TargetDesc &target,
                             const SignatureMap &externals, bool host_pass)
    : spec_(spec), target_(target), externals_(externals),
      host_pass_(host_pass) {
  module_.target = target.arch;
  const SourceModule &m = spec.module;
  for (size_t i = 0; i < m.declarations.size(); ++i) {
    bool device = m.in_device_span(i);
    if (auto *f = std::get_if<FunctionDecl>(&m.declarations[i])) {
      if (f->variant_of)
        continue;
      FunctionInfo &info = functions_[f->name];
      if (!info.decl || (f->is_definition() && !info.decl->is_definition()))
        info.decl = f;
      info.device = info.device || device;
    } else {
      const auto &g = std::get<GlobalDecl>(m.declarations[i]);
      auto &entry = globals_[g.name];
      if (!entry.first || (!g.is_extern && entry.first->is_extern))
        entry.first = &g;
      entry.second = entry.second || device;
    }
  }
}

const ModuleEmitter::FunctionInfo *
ModuleEmitter::function(const std::string &name) const {
  auto it = functions_.find(name);
  return it == functions_.end() ? nullptr : &it->second;
}

const GlobalDecl *ModuleEmitter::global(const std::string &name) const {
  auto it = globals_.find(name);
  return it == globals_.end() ? nullptr : it->second.first;
}

bool ModuleEmitter::global_in_device_span(const std::string &name) const {
  auto it = globals_.find(name);
  return it != globals_.end() && it->second.second;
}

void ModuleEmitter::request(const std::string &name) {
  if (requested_.insert(name).second)
    pending_.push_back(name);
}

void ModuleEmitter::drain() {
  while (!pending_.empty()) {
    std::string name = pending_.front();
    pending_.pop_front();
    const FunctionInfo *fi = function(name);
    if (fi && fi->decl->is_definition())
      emit_function(*fi->decl, fi->device);
  }
}

void ModuleEmitter::emit_function(const FunctionDecl &fn, bool device) {
  std::vector<Ty> params;
  for (const Param &p : fn.params)
    params.push_back(lower_type(p.type));
  FunctionBuilder b(fn.name, params, lower_type(fn.return_type), false);
  // Declare-target functions are device code in both passes: they may only
  // use declare-target globals and functions.
  BodyEmitter body(*this, b, fn.return_type, false, device);
  for (size_t i = 0; i < fn.params.size(); ++i)
    body.bind(fn.params[i].name, fn.params[i].type, b.param(i), false);
  body.stmts(*fn.body);
  ir::Function f = b.finish();
  f.comment = "function " + fn.name + " at line " + std::to_string(fn.loc.line);
  module_.functions.push_back(std::move(f));
}

void ModuleEmitter::emit_kernel(const TargetRegion &region) {
  std::vector<Ty> params;
  for (const CapturedArg &a : region.captured_args)
    params.push_back(a.kind == CaptureKind::Buffer ? Ty::Ptr
                                                   : lower_type(a.type));
  FunctionBuilder b(kernel_name(region.id), params, Ty::I64, true);
  BodyEmitter body(*this, b, Type::i64(), true, true);
  for (size_t i = 0; i < region.captured_args.size(); ++i) {
    const CapturedArg &a = region.captured_args[i];
    body.bind(a.name, a.type, b.param(i), a.kind == CaptureKind::Buffer);
  }
  body.stmts(region.body);
  ir::Function f = b.finish();
  f.comment = "target region " + std::to_string(region.id) + " at line " +
              std::to_string(region.loc.line);
  module_.functions.push_back(std::move(f));
}

void ModuleEmitter::emit_fallback(const TargetRegion &region) {
  std::vector<Ty> params = {Ty::U32, Ty::U32};
  std::vector<Ty> kernel_params;
  for (const CapturedArg &a : region.captured_args) {
    Ty t = a.kind == CaptureKind::Buffer ? Ty::Ptr : lower_type(a.type);
    params.push_back(t);
    kernel_params.push_back(t);
  }
  FunctionBuilder b(fallback_name(region.id), params, Ty::Void, false);
  Value teams = b.param(0);
  Value threads = b.param(1);

  auto counted_loop = [&](Value limit, auto &&body_fn, int &var) {
    var = b.new_var(Ty::U32);
    b.write(var, Value::imm(0));
    int header = b.create_block();
    int body = b.create_block();
    int exit = b.create_block();
    b.jmp(header);
    b.set_current(header);
    Instr cmp = make(Opcode::ICmp, Ty::U32, {b.read(var), limit});
    cmp.name = "lt";
    b.br(b.emit(std::move(cmp)), body, exit);
    b.seal(body);
    b.set_current(body);
    body_fn();
    b.write(var, b.emit(make(Opcode::Add, Ty::U32,
                             {b.read(var), Value::imm(1)})));
    b.jmp(header);
    b.seal(header);
    b.seal(exit);
    b.set_current(exit);
  };

  int team_var = 0;
  int thread_var = 0;
  counted_loop(
      teams,
      [&] {
        counted_loop(
            threads,
            [&] {
              Instr ctx = make(Opcode::Intrinsic, Ty::Void,
                               {b.read(team_var), b.read(thread_var), threads,
                                teams});
              ctx.name = "host.set.context";
              ctx.arg_types = {Ty::U32, Ty::U32, Ty::U32, Ty::U32};
              b.emit_void(std::move(ctx));
              Instr call = make(Opcode::Call, Ty::I64, {});
              call.name = kernel_name(region.id);
              for (size_t i = 0; i < kernel_params.size(); ++i)
                call.args.push_back(b.param(2 + i));
              call.arg_types = kernel_params;
              b.emit(std::move(call));
            },
            thread_var);
      },
      team_var);
  b.ret(std::nullopt, Ty::Void);
  ir::Function f = b.finish();
  f.comment = "host fallback for target region " + std::to_string(region.id);
  module_.functions.push_back(std::move(f));
}

void ModuleEmitter::emit_globals(bool device_only) {
  std::set<std::string> done;
  for (const Decl &d : spec_.module.declarations) {
    auto *decl = std::get_if<GlobalDecl>(&d);
    if (!decl || done.count(decl->name))
      continue;
    const GlobalDecl *g = global(decl->name);
    if (g->is_extern)
      continue;
    if (device_only && !global_in_device_span(g->name))
      continue;
    done.insert(g->name);
    ir::Global out;
    out.name = g->name;
    out.type = lower_type(g->value_type);
    out.count = g->array_len.value_or(1);
    auto p = spec_.placements.find(g->name);
    lowering::Placement placement =
        p != spec_.placements.end() ? p->second : lowering::Placement{};
    out.space = placement.space == lowering::Space::team_shared
                    ? ir::GlobalSpace::shared
                    : ir::GlobalSpace::global;
    switch (placement.init) {
    case lowering::InitKind::zero:
      out.init = ir::GlobalInit::zero;
      break;
    case lowering::InitKind::none:
      out.init = ir::GlobalInit::none;
      break;
    case lowering::InitKind::explicit_constant:
      out.init = ir::GlobalInit::explicit_values;
      for (uint64_t i = 0; i < out.count; ++i)
        out.values.push_back(fit(
            i < g->initializer.size() ? g->initializer[i] : 0, out.type));
      break;
    }
    module_.globals.push_back(std::move(out));
  }
}

Expected<ir::Module> emit_device_ir(const lowering::SpecializedModule &spec,
                                    const selectors::TargetDesc &target,
                                    const EmitOptions &options) {
  const SignatureMap &externals = options.externals
                                      ? *options.externals
                                      : devicert::runtime_signatures();
  ModuleEmitter m(spec, target, externals, false);
  m.emit_globals(true);
  for (const TargetRegion &region : spec.module.target_regions)
    m.emit_kernel(region);
  if (options.roots) {
    for (const std::string &name : *options.roots) {
      std::string symbol = name;
      auto r = spec.replacements.find(name);
      if (r != spec.replacements.end())
        symbol = r->second;
      const ModuleEmitter::FunctionInfo *fi = m.function(symbol);
      if (fi && fi->device && fi->decl->is_definition())
        m.request(symbol);
    }
  } else if (options.all_device_functions) {
    for (const Decl &d : spec.module.declarations) {
      auto *f = std::get_if<FunctionDecl>(&d);
      if (!f || f->variant_of || !f->is_definition())
        continue;
      const ModuleEmitter::FunctionInfo *fi = m.function(f->name);
      if (fi && fi->device)
        m.request(f->name);
    }
  }
  m.drain();
  if (!m.diags().empty())
    return m.diags();
  return std::move(m.module());
}

} // namespace forge::codegen
