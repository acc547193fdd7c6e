//===- frontend/Printer.cpp - AST pretty-printer -------------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/frontend/Parser.h"

#include <sstream>

namespace forge::frontend {

namespace {

std::string literal(uint64_t value, Type t) {
  std::string s;
  if (t.is_signed()) {
    int64_t v = t.bits() == 32 ? static_cast<int32_t>(value)
                               : static_cast<int64_t>(value);
    s = std::to_string(v);
  } else {
    s = std::to_string(value);
  }
  return s;
}

std::string escape(const std::string &s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
    case '\n':
      out += "\\n";
      break;
    case '\t':
      out += "\\t";
      break;
    case '"':
      out += "\\\"";
      break;
    case '\\':
      out += "\\\\";
      break;
    default:
      out.push_back(c);
    }
  }
  return out + "\"";
}

bool is_primary(const Expr &e) {
  return e.kind == ExprKind::IntLit || e.kind == ExprKind::StrLit ||
         e.kind == ExprKind::Var || e.kind == ExprKind::Call ||
         e.kind == ExprKind::Index;
}

std::string operand(const Expr &e) {
  std::string s = print_expr(e);
  if (is_primary(e))
    return s;
  return "(" + s + ")";
}

class Printer {
public:
  explicit Printer(const SourceModule &m) : module_(m) {}

  std::string run() {
    bool in_span = false;
    for (size_t i = 0; i < module_.declarations.size(); ++i) {
      bool device = module_.in_device_span(i);
      if (device != in_span) {
        os_ << (device ? "#pragma omp begin declare target\n"
                       : "#pragma omp end declare target\n");
        in_span = device;
      }
      std::visit([&](const auto &d) { decl(d); }, module_.declarations[i]);
    }
    if (in_span)
      os_ << "#pragma omp end declare target\n";
    return os_.str();
  }

private:
  void decl(const GlobalDecl &g) {
    if (g.is_extern)
      os_ << "extern ";
    os_ << type_name(g.value_type) << ' ' << g.name;
    if (g.array_len)
      os_ << '[' << *g.array_len << ']';
    if (g.loader_uninitialized)
      os_ << " [[loader_uninitialized]]";
    if (!g.initializer.empty()) {
      os_ << " = ";
      if (g.array_len) {
        os_ << '{';
        for (size_t i = 0; i < g.initializer.size(); ++i)
          os_ << (i ? ", " : "") << literal(g.initializer[i], g.value_type);
        os_ << '}';
      } else {
        os_ << literal(g.initializer[0], g.value_type);
      }
    }
    os_ << ";\n";
    if (g.allocator != Allocator::default_mem)
      os_ << "#pragma omp allocate(" << g.name << ") allocator("
          << (g.allocator == Allocator::pteam ? "omp_pteam_mem_alloc"
                                              : "omp_cgroup_mem_alloc")
          << ")\n";
  }

  void decl(const FunctionDecl &f) {
    if (f.variant_of)
      os_ << "#pragma omp begin declare variant match("
          << selectors::to_string(f.variant_of->selector) << ")\n";
    if (f.is_extern)
      os_ << "extern ";
    os_ << type_name(f.return_type) << ' ' << f.name << '(';
    for (size_t i = 0; i < f.params.size(); ++i)
      os_ << (i ? ", " : "") << type_name(f.params[i].type) << ' '
          << f.params[i].name;
    os_ << ')';
    if (f.body) {
      os_ << ' ';
      block(*f.body, 0);
      os_ << '\n';
    } else {
      os_ << ";\n";
    }
    if (f.variant_of)
      os_ << "#pragma omp end declare variant\n";
  }

  void indent(int depth) {
    for (int i = 0; i < depth; ++i)
      os_ << "  ";
  }

  void block(const StmtList &body, int depth) {
    os_ << "{\n";
    for (const Stmt &s : body)
      stmt(s, depth + 1);
    indent(depth);
    os_ << '}';
  }

  /// Print a single-statement branch or loop body.
  void sub(const StmtList &one, int depth) {
    const Stmt &s = one.front();
    if (auto *b = std::get_if<BlockStmt>(&s.node)) {
      os_ << ' ';
      block(b->body, depth);
      os_ << '\n';
    } else {
      os_ << '\n';
      stmt(s, depth + 1);
    }
  }

  std::string var_decl(const VarDecl &v) {
    std::string s = type_name(v.type) + " " + v.name;
    if (v.array_len)
      s += "[" + std::to_string(*v.array_len) + "]";
    if (v.init_list) {
      s += " = {";
      for (size_t i = 0; i < v.init.size(); ++i)
        s += (i ? ", " : "") + print_expr(v.init[i]);
      s += "}";
    } else if (!v.init.empty()) {
      s += " = " + print_expr(v.init[0]);
    }
    return s + ";";
  }

  void stmt(const Stmt &s, int depth) {
    indent(depth);
    std::visit([&](const auto &n) { print(n, depth); }, s.node);
  }

  void print(const BlockStmt &n, int depth) {
    block(n.body, depth);
    os_ << '\n';
  }
  void print(const DeclStmt &n, int) { os_ << var_decl(n.var) << '\n'; }
  void print(const ExprStmt &n, int) { os_ << print_expr(n.expr) << ";\n"; }
  void print(const IfStmt &n, int depth) {
    os_ << "if (" << print_expr(n.cond) << ")";
    sub(n.then_branch, depth);
    if (!n.else_branch.empty()) {
      indent(depth);
      os_ << "else";
      sub(n.else_branch, depth);
    }
  }
  void print(const WhileStmt &n, int depth) {
    os_ << "while (" << print_expr(n.cond) << ")";
    sub(n.body, depth);
  }
  void print(const ForStmt &n, int depth) {
    os_ << "for (";
    if (n.init.empty()) {
      os_ << ';';
    } else if (auto *d = std::get_if<DeclStmt>(&n.init.front().node)) {
      os_ << var_decl(d->var);
    } else {
      os_ << print_expr(std::get<ExprStmt>(n.init.front().node).expr) << ';';
    }
    os_ << ' ';
    if (n.cond)
      os_ << print_expr(*n.cond);
    os_ << "; ";
    if (n.step)
      os_ << print_expr(*n.step);
    os_ << ')';
    sub(n.body, depth);
  }
  void print(const ReturnStmt &n, int) {
    os_ << "return";
    if (n.value)
      os_ << ' ' << print_expr(*n.value);
    os_ << ";\n";
  }
  void print(const BreakStmt &, int) { os_ << "break;\n"; }
  void print(const ContinueStmt &, int) { os_ << "continue;\n"; }
  void print(const AtomicConstruct &n, int depth) {
    os_ << "#pragma omp atomic";
    if (n.has_compare)
      os_ << " compare";
    if (n.has_capture)
      os_ << " capture";
    os_ << " seq_cst\n";
    indent(depth);
    block(n.block, depth);
    os_ << '\n';
  }
  void print(const AtomicIntrinsic &n, int) {
    os_ << print_expr(n.v) << " = atomic." << atomic_kind_name(n.kind)
        << ".seq_cst(" << print_expr(n.x) << ", " << print_expr(n.e);
    if (n.d)
      os_ << ", " << print_expr(*n.d);
    os_ << ");\n";
  }
  void print(const TargetStmt &n, int depth) {
    const TargetRegion &r = module_.target_regions.at(n.region_id);
    os_ << "#pragma omp target teams";
    if (r.num_teams)
      os_ << " num_teams(" << *r.num_teams << ')';
    if (r.thread_limit)
      os_ << " thread_limit(" << *r.thread_limit << ')';
    os_ << '\n';
    indent(depth);
    block(r.body, depth);
    os_ << '\n';
  }

  const SourceModule &module_;
  std::ostringstream os_;
};

} // namespace

std::string print_expr(const Expr &e) {
  switch (e.kind) {
  case ExprKind::IntLit: {
    std::string s = std::to_string(e.value);
    if (!e.lit_type.is_signed())
      s += "u";
    if (e.lit_type.bits() == 64)
      s += "L";
    return s;
  }
  case ExprKind::StrLit:
    return escape(e.text);
  case ExprKind::Var:
    return e.text;
  case ExprKind::Unary:
    return e.text + operand(e.operands[0]);
  case ExprKind::Deref:
    return "*" + operand(e.operands[0]);
  case ExprKind::Binary:
    return operand(e.operands[0]) + " " + e.text + " " +
           operand(e.operands[1]);
  case ExprKind::Assign:
    return operand(e.operands[0]) + " " + e.text + " " +
           print_expr(e.operands[1]);
  case ExprKind::Ternary:
    return operand(e.operands[0]) + " ? " + operand(e.operands[1]) + " : " +
           operand(e.operands[2]);
  case ExprKind::Call: {
    std::string s = e.text + "(";
    for (size_t i = 0; i < e.operands.size(); ++i)
      s += (i ? ", " : "") + print_expr(e.operands[i]);
    return s + ")";
  }
  case ExprKind::Index:
    return operand(e.operands[0]) + "[" + print_expr(e.operands[1]) + "]";
  }
  return "?";
}

std::string print_module(const SourceModule &module) {
  return Printer(module).run();
}

} // namespace forge::frontend
