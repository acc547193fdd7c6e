//===- lowering/Lowering.cpp - Per-target specialization -----------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/lowering/Lowering.h"

#include "forge/selectors/Selectors.h"

#include <set>

namespace forge::lowering {

using namespace frontend;

namespace {

Diagnostic not_representable(SourceLoc loc, const std::string &why) {
  return make_diag(DiagKind::NotRepresentable,
                   "atomic construct is not representable: " + why, loc);
}

const Expr *as_assign(const Stmt &s, std::string_view op) {
  auto *es = std::get_if<ExprStmt>(&s.node);
  if (!es || es->expr.kind != ExprKind::Assign || es->expr.text != op)
    return nullptr;
  return &es->expr;
}

bool is_location(const Expr &e) {
  return e.kind == ExprKind::Var || e.kind == ExprKind::Deref ||
         e.kind == ExprKind::Index;
}

bool contains(const Expr &hay, const Expr &needle) {
  if (same_expr(hay, needle))
    return true;
  for (const Expr &op : hay.operands)
    if (contains(op, needle))
      return true;
  return false;
}

bool has_side_effects(const Expr &e) {
  if (e.kind == ExprKind::Assign || e.kind == ExprKind::Call)
    return true;
  for (const Expr &op : e.operands)
    if (has_side_effects(op))
      return true;
  return false;
}

/// The single `X = value;` statement of a conditional update's then branch.
const Expr *conditional_store(const IfStmt &s) {
  if (!s.else_branch.empty() || s.then_branch.size() != 1)
    return nullptr;
  const Stmt *inner = &s.then_branch.front();
  if (auto *b = std::get_if<BlockStmt>(&inner->node)) {
    if (b->body.size() != 1)
      return nullptr;
    inner = &b->body.front();
  }
  return as_assign(*inner, "=");
}

} // namespace

Expected<AtomicIntrinsic> lower_atomic(const AtomicConstruct &c,
                                       SourceLoc loc) {
  if (!c.has_capture)
    return not_representable(loc, "only capture forms are supported");
  if (c.block.size() != 2)
    return not_representable(loc, "expected exactly two statements");
  const Expr *capture = as_assign(c.block[0], "=");
  if (!capture || !is_location(capture->operands[1]))
    return not_representable(loc, "first statement must capture 'V = X'");
  AtomicIntrinsic out;
  out.v = capture->operands[0];
  out.x = capture->operands[1];
  if (same_expr(out.v, out.x) || contains(out.x, out.v))
    return not_representable(loc, "captured value aliases the location");

  auto operand_ok = [&](const Expr &e) {
    return !contains(e, out.x) && !contains(e, out.v) && !has_side_effects(e);
  };

  if (!c.has_compare) {
    const Stmt &s = c.block[1];
    if (const Expr *upd = as_assign(s, "+=");
        upd && same_expr(upd->operands[0], out.x)) {
      out.kind = AtomicKind::ADD;
      out.e = upd->operands[1];
    } else if (const Expr *wr = as_assign(s, "=");
               wr && same_expr(wr->operands[0], out.x)) {
      out.kind = AtomicKind::XCHG;
      out.e = wr->operands[1];
    } else {
      return not_representable(loc, "capture update must be 'X += E' or "
                                    "'X = E'");
    }
    if (!operand_ok(out.e))
      return not_representable(
          loc, "operand must not reference the location or captured value");
    return out;
  }

  auto *cond = std::get_if<IfStmt>(&c.block[1].node);
  if (!cond)
    return not_representable(loc, "compare form needs 'if (X op E) { X = "
                                  "... }'");
  const Expr &test = cond->cond;
  if (test.kind != ExprKind::Binary || !same_expr(test.operands[0], out.x))
    return not_representable(loc, "comparison must have the location on the "
                                  "left");
  const Expr *store = conditional_store(*cond);
  if (!store || !same_expr(store->operands[0], out.x))
    return not_representable(loc, "then branch must be the single statement "
                                  "'X = value' and there must be no else");
  out.e = test.operands[1];
  if (test.text == "<" || test.text == ">") {
    if (!same_expr(store->operands[1], out.e))
      return not_representable(loc, "ordered compare must store E");
    out.kind = test.text == "<" ? AtomicKind::MAX : AtomicKind::MIN;
  } else if (test.text == "==") {
    out.kind = AtomicKind::CAS;
    out.d = store->operands[1];
    if (!operand_ok(*out.d))
      return not_representable(
          loc, "operand must not reference the location or captured value");
  } else {
    return not_representable(loc, "order operation must be '<' or '>', or "
                                  "'==' for compare-and-swap");
  }
  if (!operand_ok(out.e))
    return not_representable(
        loc, "operand must not reference the location or captured value");
  return out;
}

Expected<Placement> place_global(const GlobalDecl &g) {
  if (g.loader_uninitialized && !g.initializer.empty())
    return make_diag(DiagKind::Semantic,
                     "loader_uninitialized global '" + g.name +
                         "' cannot have an initializer",
                     g.loc);
  Placement p;
  p.space = (g.allocator == Allocator::pteam || g.allocator == Allocator::cgroup)
                ? Space::team_shared
                : Space::global;
  if (g.loader_uninitialized)
    p.init = InitKind::none;
  else if (!g.initializer.empty())
    p.init = InitKind::explicit_constant;
  else
    p.init = InitKind::zero;
  return p;
}

namespace {

class Rewriter {
public:
  Rewriter(const std::map<std::string, std::string> &replacements,
           DiagnosticList &diags)
      : replacements_(replacements), diags_(diags) {}

  void stmts(StmtList &list) {
    for (Stmt &s : list)
      stmt(s);
  }

private:
  void stmt(Stmt &s) {
    if (auto *a = std::get_if<AtomicConstruct>(&s.node)) {
      Expected<AtomicIntrinsic> lowered = lower_atomic(*a, s.loc);
      if (!lowered) {
        for (const Diagnostic &d : lowered.diags())
          diags_.push_back(d);
        return;
      }
      s.node = std::move(*lowered);
    }
    std::visit([&](auto &n) { visit(n); }, s.node);
  }

  void visit(BlockStmt &n) { stmts(n.body); }
  void visit(DeclStmt &n) {
    for (Expr &e : n.var.init)
      expr(e);
  }
  void visit(ExprStmt &n) { expr(n.expr); }
  void visit(IfStmt &n) {
    expr(n.cond);
    stmts(n.then_branch);
    stmts(n.else_branch);
  }
  void visit(WhileStmt &n) {
    expr(n.cond);
    stmts(n.body);
  }
  void visit(ForStmt &n) {
    stmts(n.init);
    if (n.cond)
      expr(*n.cond);
    if (n.step)
      expr(*n.step);
    stmts(n.body);
  }
  void visit(ReturnStmt &n) {
    if (n.value)
      expr(*n.value);
  }
  void visit(BreakStmt &) {}
  void visit(ContinueStmt &) {}
  void visit(AtomicConstruct &) {}
  void visit(AtomicIntrinsic &n) {
    expr(n.x);
    expr(n.e);
    if (n.d)
      expr(*n.d);
    expr(n.v);
  }
  void visit(TargetStmt &) {}

  void expr(Expr &e) {
    if (e.kind == ExprKind::Call) {
      auto it = replacements_.find(e.text);
      if (it != replacements_.end())
        e.text = it->second;
    }
    for (Expr &op : e.operands)
      expr(op);
  }

  const std::map<std::string, std::string> &replacements_;
  DiagnosticList &diags_;
};

} // namespace

Expected<SpecializedModule> specialize(const SourceModule &module,
                                       const selectors::TargetDesc &target) {
  DiagnosticList diags;
  SpecializedModule out;
  out.arch = target.arch;

  // Resolve every base that has at least one variant.
  std::vector<FunctionDecl> variants;
  std::set<std::string> bases_with_variants;
  for (const Decl &d : module.declarations)
    if (auto *f = std::get_if<FunctionDecl>(&d); f && f->variant_of) {
      variants.push_back(*f);
      bases_with_variants.insert(f->variant_of->base);
    }
  for (const std::string &base : bases_with_variants) {
    const FunctionDecl *base_decl = module.find_function(base);
    if (!base_decl)
      continue; // analyze() already rejected this
    Expected<std::string> chosen =
        selectors::resolve_variant(*base_decl, variants, target);
    if (!chosen) {
      for (const Diagnostic &d : chosen.diags())
        diags.push_back(d);
      continue;
    }
    if (*chosen != base)
      out.replacements[base] = *chosen;
  }
  if (!diags.empty())
    return diags;

  SourceModule &m = out.module;
  m.target_regions = module.target_regions;
  for (size_t i = 0; i < module.declarations.size(); ++i) {
    Decl d = module.declarations[i];
    if (auto *f = std::get_if<FunctionDecl>(&d)) {
      if (f->variant_of) {
        std::string symbol = selectors::mangle_variant(f->variant_of->base,
                                                       f->variant_of->selector);
        auto it = out.replacements.find(f->variant_of->base);
        if (it == out.replacements.end() || it->second != symbol)
          continue;
        f->name = symbol;
        f->variant_of.reset();
      } else if (out.replacements.count(f->name)) {
        continue;
      }
    }
    if (module.in_device_span(i))
      m.device_span.insert(m.declarations.size());
    m.declarations.push_back(std::move(d));
  }

  Rewriter rewriter(out.replacements, diags);
  for (Decl &d : m.declarations)
    if (auto *f = std::get_if<FunctionDecl>(&d); f && f->body)
      rewriter.stmts(*f->body);
  for (TargetRegion &r : m.target_regions)
    rewriter.stmts(r.body);

  for (const Decl &d : m.declarations) {
    auto *g = std::get_if<GlobalDecl>(&d);
    if (!g)
      continue;
    Expected<Placement> p = place_global(*g);
    if (!p) {
      for (const Diagnostic &diag : p.diags())
        diags.push_back(diag);
      continue;
    }
    auto [it, inserted] = out.placements.emplace(g->name, *p);
    if (!inserted && !g->is_extern)
      it->second = *p;
  }
  if (!diags.empty())
    return diags;
  return out;
}

Expected<SpecializedModule> specialize(const SpecializedModule &module,
                                       const selectors::TargetDesc &target) {
  Expected<SpecializedModule> again = specialize(module.module, target);
  if (!again)
    return again;
  for (const auto &[base, symbol] : module.replacements)
    again->replacements.emplace(base, symbol);
  return again;
}

} // namespace forge::lowering
