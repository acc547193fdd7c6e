//===- frontend/AST.cpp - Syntax tree helpers ----------------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/frontend/AST.h"

namespace forge::frontend {

std::string type_name(Type t) {
  std::string base;
  switch (t.scalar) {
  case ScalarKind::Void:
    base = "void";
    break;
  case ScalarKind::I32:
    base = "i32";
    break;
  case ScalarKind::U32:
    base = "u32";
    break;
  case ScalarKind::I64:
    base = "i64";
    break;
  case ScalarKind::U64:
    base = "u64";
    break;
  case ScalarKind::Ident:
    base = "kmp_Ident";
    break;
  }
  return t.pointer ? base + "*" : base;
}

std::string_view atomic_kind_name(AtomicKind kind) {
  switch (kind) {
  case AtomicKind::ADD:
    return "add";
  case AtomicKind::MAX:
    return "max";
  case AtomicKind::MIN:
    return "min";
  case AtomicKind::XCHG:
    return "xchg";
  case AtomicKind::CAS:
    return "cas";
  case AtomicKind::INC:
    return "inc";
  }
  return "?";
}

bool same_expr(const Expr &a, const Expr &b) {
  if (a.kind != b.kind || a.text != b.text ||
      a.operands.size() != b.operands.size())
    return false;
  if (a.kind == ExprKind::IntLit &&
      (a.value != b.value || !(a.lit_type == b.lit_type)))
    return false;
  for (size_t i = 0; i < a.operands.size(); ++i)
    if (!same_expr(a.operands[i], b.operands[i]))
      return false;
  return true;
}

bool mentions_var(const Expr &e, const std::string &name) {
  if (e.kind == ExprKind::Var && e.text == name)
    return true;
  for (const Expr &op : e.operands)
    if (mentions_var(op, name))
      return true;
  return false;
}

size_t SourceModule::function_count() const {
  size_t n = 0;
  for (const Decl &d : declarations)
    n += std::holds_alternative<FunctionDecl>(d) ? 1 : 0;
  return n;
}

size_t SourceModule::global_count() const {
  return declarations.size() - function_count();
}

const GlobalDecl *SourceModule::find_global(const std::string &name) const {
  const GlobalDecl *found = nullptr;
  for (const Decl &d : declarations)
    if (auto *g = std::get_if<GlobalDecl>(&d); g && g->name == name) {
      if (!g->is_extern)
        return g;
      if (!found)
        found = g;
    }
  return found;
}

const FunctionDecl *SourceModule::find_function(const std::string &name) const {
  const FunctionDecl *found = nullptr;
  for (const Decl &d : declarations)
    if (auto *f = std::get_if<FunctionDecl>(&d);
        f && f->name == name && !f->variant_of) {
      if (f->is_definition())
        return f;
      if (!found)
        found = f;
    }
  return found;
}

const std::string &decl_name(const Decl &d) {
  return std::visit([](const auto &x) -> const std::string & { return x.name; },
                    d);
}

} // namespace forge::frontend
