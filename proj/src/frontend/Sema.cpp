//===- frontend/Sema.cpp - Module validation ------------------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "Sema.h"

#include <map>

namespace forge::frontend {

namespace {

bool same_signature(const FunctionDecl &a, const FunctionDecl &b) {
  if (!(a.return_type == b.return_type) || a.params.size() != b.params.size())
    return false;
  for (size_t i = 0; i < a.params.size(); ++i)
    if (!(a.params[i].type == b.params[i].type))
      return false;
  return true;
}

struct VarInfo {
  Type type;
  std::optional<uint64_t> array_len;
};

class BodyChecker {
public:
  BodyChecker(SourceModule &module, DiagnosticList &diags, bool device,
              const std::string &function_name)
      : module_(module), diags_(diags), device_(device),
        function_name_(function_name) {}

  void check_function(const FunctionDecl &fn, StmtList &body) {
    scopes_.emplace_back();
    for (const Param &p : fn.params)
      scopes_.back()[p.name] = VarInfo{p.type, std::nullopt};
    stmts(body);
    scopes_.pop_back();
  }

private:
  void error(SourceLoc loc, std::string message) {
    diags_.push_back(make_diag(DiagKind::Semantic, std::move(message), loc));
  }

  void stmts(StmtList &list) {
    for (Stmt &s : list)
      stmt(s);
  }

  void scoped(StmtList &list) {
    scopes_.emplace_back();
    stmts(list);
    scopes_.pop_back();
  }

  void stmt(Stmt &s) {
    std::visit([&](auto &n) { visit(s, n); }, s.node);
  }

  void visit(Stmt &, BlockStmt &n) { scoped(n.body); }
  void visit(Stmt &s, DeclStmt &n) {
    if (n.var.type.scalar == ScalarKind::Ident)
      error(s.loc, "kmp_Ident locals are not supported");
    for (Expr &e : n.var.init)
      expr(e);
    if (scopes_.back().count(n.var.name))
      error(s.loc, "redefinition of '" + n.var.name + "'");
    scopes_.back()[n.var.name] = VarInfo{n.var.type, n.var.array_len};
  }
  void visit(Stmt &, ExprStmt &n) { expr(n.expr); }
  void visit(Stmt &, IfStmt &n) {
    expr(n.cond);
    scoped(n.then_branch);
    scoped(n.else_branch);
  }
  void visit(Stmt &, WhileStmt &n) {
    expr(n.cond);
    ++loop_depth_;
    scoped(n.body);
    --loop_depth_;
  }
  void visit(Stmt &, ForStmt &n) {
    scopes_.emplace_back();
    stmts(n.init);
    if (n.cond)
      expr(*n.cond);
    if (n.step)
      expr(*n.step);
    ++loop_depth_;
    scoped(n.body);
    --loop_depth_;
    scopes_.pop_back();
  }
  void visit(Stmt &, ReturnStmt &n) {
    if (n.value)
      expr(*n.value);
  }
  void visit(Stmt &s, BreakStmt &) {
    if (loop_depth_ == 0)
      error(s.loc, "'break' outside a loop");
  }
  void visit(Stmt &s, ContinueStmt &) {
    if (loop_depth_ == 0)
      error(s.loc, "'continue' outside a loop");
  }
  void visit(Stmt &, AtomicConstruct &n) { scoped(n.block); }
  void visit(Stmt &, AtomicIntrinsic &n) {
    expr(n.x);
    expr(n.e);
    if (n.d)
      expr(*n.d);
    expr(n.v);
  }
  void visit(Stmt &s, TargetStmt &n) {
    if (device_) {
      error(s.loc, "target region inside declare target code");
      return;
    }
    if (region_depth_ > 0) {
      error(s.loc, "nested target regions are not supported");
      return;
    }
    TargetRegion &region = module_.target_regions[n.region_id];
    region.enclosing_function = function_name_;
    region.captured_args.clear();
    current_region_ = &region;
    region_scope_base_ = scopes_.size();
    int saved_loops = loop_depth_;
    loop_depth_ = 0;
    ++region_depth_;
    scoped(region.body);
    --region_depth_;
    loop_depth_ = saved_loops;
    current_region_ = nullptr;
  }

  void capture(const Expr &e, const VarInfo &info) {
    for (const CapturedArg &c : current_region_->captured_args)
      if (c.name == e.text)
        return;
    CapturedArg arg;
    arg.name = e.text;
    if (info.array_len) {
      arg.kind = CaptureKind::Buffer;
      arg.type = info.type;
      arg.element_count = *info.array_len;
    } else if (info.type.pointer) {
      error(e.loc, "target region captures pointer '" + e.text +
                       "'; only local arrays can be mapped");
      return;
    } else {
      arg.kind = CaptureKind::Scalar;
      arg.type = info.type;
    }
    current_region_->captured_args.push_back(std::move(arg));
  }

  void resolve_var(Expr &e) {
    for (size_t i = scopes_.size(); i-- > 0;) {
      auto it = scopes_[i].find(e.text);
      if (it == scopes_[i].end())
        continue;
      if (current_region_ && i < region_scope_base_)
        capture(e, it->second);
      return;
    }
    const GlobalDecl *g = nullptr;
    size_t index = 0;
    for (size_t i = 0; i < module_.declarations.size(); ++i) {
      if (auto *gd = std::get_if<GlobalDecl>(&module_.declarations[i]);
          gd && gd->name == e.text) {
        g = gd;
        index = i;
        break;
      }
    }
    if (!g) {
      error(e.loc, "use of undeclared identifier '" + e.text + "'");
      return;
    }
    if ((device_ || current_region_) && !module_.in_device_span(index))
      error(e.loc, "global '" + e.text +
                       "' is used in device code but not declared target");
  }

  static bool is_lvalue(const Expr &e) {
    return e.kind == ExprKind::Var || e.kind == ExprKind::Deref ||
           e.kind == ExprKind::Index;
  }

  void expr(Expr &e) {
    switch (e.kind) {
    case ExprKind::IntLit:
      return;
    case ExprKind::StrLit:
      error(e.loc, "string literals are only allowed as arguments of print, "
                   "error and trap");
      return;
    case ExprKind::Var:
      resolve_var(e);
      return;
    case ExprKind::Assign:
      if (!is_lvalue(e.operands[0]))
        error(e.loc, "expression is not assignable");
      break;
    case ExprKind::Call:
      if (e.text == "print" || e.text == "error" || e.text == "trap") {
        if (e.text == "print" && (device_ || current_region_))
          error(e.loc, "print is only available in host code");
        if (e.text != "print" &&
            (e.operands.size() != 1 ||
             e.operands[0].kind != ExprKind::StrLit))
          error(e.loc, e.text + " expects a single string literal");
        for (Expr &a : e.operands)
          if (a.kind != ExprKind::StrLit)
            expr(a);
        return;
      }
      break;
    default:
      break;
    }
    for (Expr &op : e.operands)
      expr(op);
  }

  SourceModule &module_;
  DiagnosticList &diags_;
  bool device_;
  std::string function_name_;
  std::vector<std::map<std::string, VarInfo>> scopes_;
  int loop_depth_ = 0;
  int region_depth_ = 0;
  TargetRegion *current_region_ = nullptr;
  size_t region_scope_base_ = 0;
};

void check_declarations(const SourceModule &module, DiagnosticList &diags) {
  std::map<std::string, std::vector<const GlobalDecl *>> globals;
  std::map<std::string, std::vector<const FunctionDecl *>> bases;
  std::vector<const FunctionDecl *> variants;
  for (const Decl &d : module.declarations) {
    if (auto *g = std::get_if<GlobalDecl>(&d)) {
      globals[g->name].push_back(g);
      continue;
    }
    const auto &f = std::get<FunctionDecl>(d);
    if (f.variant_of)
      variants.push_back(&f);
    else
      bases[f.name].push_back(&f);
  }
  for (auto &[name, decls] : globals) {
    int definitions = 0;
    for (const GlobalDecl *g : decls)
      definitions += g->is_extern ? 0 : 1;
    if (definitions > 1)
      diags.push_back(make_diag(DiagKind::Semantic,
                                "redefinition of global '" + name + "'",
                                decls.back()->loc));
    for (const GlobalDecl *g : decls)
      if (!(g->value_type == decls.front()->value_type) ||
          g->array_len != decls.front()->array_len)
        diags.push_back(make_diag(DiagKind::Semantic,
                                  "conflicting types for global '" + name +
                                      "'",
                                  g->loc));
    if (bases.count(name))
      diags.push_back(make_diag(DiagKind::Semantic,
                                "'" + name +
                                    "' is declared as both global and function",
                                decls.front()->loc));
  }
  for (auto &[name, decls] : bases) {
    int definitions = 0;
    for (const FunctionDecl *f : decls) {
      definitions += f->is_definition() ? 1 : 0;
      if (!same_signature(*f, *decls.front()))
        diags.push_back(make_diag(DiagKind::Semantic,
                                  "conflicting declaration of '" + name + "'",
                                  f->loc));
    }
    if (definitions > 1)
      diags.push_back(make_diag(DiagKind::Semantic,
                                "redefinition of function '" + name + "'",
                                decls.back()->loc));
  }
  for (const FunctionDecl *v : variants) {
    auto it = bases.find(v->variant_of->base);
    if (it == bases.end()) {
      diags.push_back(make_diag(DiagKind::Semantic,
                                "declare variant for undeclared function '" +
                                    v->name + "'",
                                v->loc));
      continue;
    }
    if (!same_signature(*v, *it->second.front()))
      diags.push_back(make_diag(DiagKind::Semantic,
                                "variant signature mismatch for '" + v->name +
                                    "'",
                                v->loc));
  }
}

} // namespace

void analyze(SourceModule &module, DiagnosticList &diags) {
  check_declarations(module, diags);
  for (size_t i = 0; i < module.declarations.size(); ++i) {
    auto *fn = std::get_if<FunctionDecl>(&module.declarations[i]);
    if (!fn || !fn->body)
      continue;
    FunctionDecl header = *fn;
    header.body.reset();
    BodyChecker checker(module, diags, module.in_device_span(i), fn->name);
    // `fn` stays valid: the checker never resizes the declaration list.
    checker.check_function(header, *fn->body);
  }
}

} // namespace forge::frontend
