//===- frontend/Parser.cpp - Recursive-descent parser for .mc -------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Grammar summary (see docs/grammar.md for the full EBNF):
//
//   module    := { directive | global | function }
//   directive := '#pragma omp' ( begin declare target | declare target
//                | end declare target | begin declare variant match(...)
//                | end declare variant | allocate(...) allocator(...) )
//
// Inside function bodies `#pragma omp atomic ...` and `#pragma omp target ...`
// prefix the statement they apply to.
//
//===----------------------------------------------------------------------===//

#include "forge/frontend/Parser.h"

#include "Lexer.h"
#include "Sema.h"

#include <map>

namespace forge::frontend {

namespace {

struct ParseError {};

std::optional<Type> keyword_type(const std::string &word) {
  static const std::map<std::string, Type, std::less<>> kTypes = {
      {"int", Type::i32()},         {"int32_t", Type::i32()},
      {"i32", Type::i32()},         {"uint32_t", Type::u32()},
      {"u32", Type::u32()},         {"int64_t", Type::i64()},
      {"i64", Type::i64()},         {"long", Type::i64()},
      {"uint64_t", Type::u64()},    {"u64", Type::u64()},
      {"unsigned", Type::u32()},    {"void", Type::void_type()},
      {"kmp_Ident", Type{ScalarKind::Ident, false}},
  };
  auto it = kTypes.find(word);
  if (it == kTypes.end())
    return std::nullopt;
  return it->second;
}

/// Cursor over a token vector with the usual accept/expect helpers.
class TokenCursor {
public:
  TokenCursor(std::vector<Token> toks, DiagnosticList &diags)
      : toks_(std::move(toks)), diags_(diags) {}

  const Token &cur() const { return toks_[pos_]; }
  const Token &peek(size_t n = 1) const {
    return toks_[std::min(pos_ + n, toks_.size() - 1)];
  }
  bool at_end() const { return cur().kind == TokKind::Eof; }
  const Token &next() {
    const Token &t = toks_[pos_];
    if (pos_ + 1 < toks_.size())
      ++pos_;
    return t;
  }

  bool is_punct(std::string_view p) const {
    return cur().kind == TokKind::Punct && cur().text == p;
  }
  bool is_word(std::string_view w) const {
    return cur().kind == TokKind::Ident && cur().text == w;
  }
  bool accept_punct(std::string_view p) {
    if (!is_punct(p))
      return false;
    next();
    return true;
  }
  bool accept_word(std::string_view w) {
    if (!is_word(w))
      return false;
    next();
    return true;
  }
  void expect_punct(std::string_view p) {
    if (!accept_punct(p))
      fail(std::string("expected '") + std::string(p) + "'");
  }
  void expect_word(std::string_view w) {
    if (!accept_word(w))
      fail(std::string("expected '") + std::string(w) + "'");
  }
  std::string expect_ident() {
    if (cur().kind != TokKind::Ident)
      fail("expected identifier");
    return next().text;
  }

  [[noreturn]] void fail(std::string message) { fail_at(cur().loc, message); }
  [[noreturn]] void fail_at(SourceLoc loc, std::string message) {
    diags_.push_back(make_diag(DiagKind::Parse, std::move(message), loc));
    throw ParseError{};
  }
  void error_at(SourceLoc loc, std::string message,
                DiagKind kind = DiagKind::Parse) {
    diags_.push_back(make_diag(kind, std::move(message), loc));
  }

  size_t position() const { return pos_; }
  void set_position(size_t p) { pos_ = p; }

protected:
  std::vector<Token> toks_;
  size_t pos_ = 0;
  DiagnosticList &diags_;
};

selectors::ContextSelector parse_selector_tokens(TokenCursor &c) {
  using selectors::Extension;
  selectors::ContextSelector sel;
  bool seen_device = false;
  SourceLoc start = c.cur().loc;
  do {
    SourceLoc set_loc = c.cur().loc;
    std::string set = c.expect_ident();
    c.expect_punct("=");
    c.expect_punct("{");
    if (set == "device") {
      if (seen_device)
        c.fail_at(set_loc, "duplicate selector set 'device'");
      seen_device = true;
      do {
        SourceLoc trait_loc = c.cur().loc;
        std::string trait = c.expect_ident();
        if (trait != "arch")
          c.fail_at(trait_loc, "unknown device trait '" + trait + "'");
        c.expect_punct("(");
        std::vector<std::string> archs;
        if (c.is_punct(")"))
          c.fail_at(trait_loc, "empty arch list");
        do {
          archs.push_back(c.expect_ident());
        } while (c.accept_punct(","));
        c.expect_punct(")");
        if (sel.device_arch)
          c.fail_at(trait_loc, "duplicate arch trait");
        sel.device_arch = std::move(archs);
      } while (c.accept_punct(","));
    } else if (set == "implementation") {
      if (sel.has_implementation_set)
        c.fail_at(set_loc, "duplicate selector set 'implementation'");
      sel.has_implementation_set = true;
      do {
        SourceLoc trait_loc = c.cur().loc;
        std::string trait = c.expect_ident();
        if (trait != "extension")
          c.fail_at(trait_loc, "unknown implementation trait '" + trait + "'");
        c.expect_punct("(");
        SourceLoc ext_loc = c.cur().loc;
        std::string ext = c.expect_ident();
        if (ext == "match_any")
          sel.extension = Extension::match_any;
        else if (ext == "match_none")
          sel.extension = Extension::match_none;
        else
          c.fail_at(ext_loc, "unknown extension name '" + ext + "'");
        c.expect_punct(")");
      } while (c.accept_punct(","));
    } else {
      c.fail_at(set_loc, "unknown set name '" + set + "'");
    }
    c.expect_punct("}");
  } while (c.accept_punct(","));
  if (sel.extension != Extension::none && !sel.device_arch)
    c.fail_at(start, "extension requires a device arch list");
  return sel;
}

class Parser : public TokenCursor {
public:
  Parser(std::vector<Token> toks, DiagnosticList &diags)
      : TokenCursor(std::move(toks), diags) {}

  SourceModule run() {
    while (!at_end()) {
      size_t before = position();
      try {
        if (cur().kind == TokKind::Pragma)
          top_level_pragma(next());
        else
          declaration();
      } catch (ParseError &) {
        synchronize(before);
      }
    }
    for (auto it = regions_.rbegin(); it != regions_.rend(); ++it)
      error_at(it->loc, it->is_target ? "unbalanced declare target"
                                      : "unbalanced declare variant");
    return std::move(module_);
  }

private:
  struct OpenRegion {
    bool is_target = true;
    SourceLoc loc;
    selectors::ContextSelector selector;
  };

  bool in_target_span() const {
    for (const OpenRegion &r : regions_)
      if (r.is_target)
        return true;
    return false;
  }
  const OpenRegion *open_variant() const {
    for (const OpenRegion &r : regions_)
      if (!r.is_target)
        return &r;
    return nullptr;
  }

  /// Skip the rest of a failed declaration: up to its terminating ';' or the
  /// brace that closes its body.
  void synchronize(size_t before) {
    set_position(before);
    if (cur().kind == TokKind::Pragma) {
      next();
      return;
    }
    int depth = 0;
    while (!at_end()) {
      if (depth == 0 && cur().kind == TokKind::Pragma)
        return;
      if (is_punct("{")) {
        ++depth;
      } else if (is_punct("}")) {
        if (--depth <= 0) {
          next();
          return;
        }
      } else if (is_punct(";") && depth == 0) {
        next();
        return;
      }
      next();
    }
  }

  // Directives ------------------------------------------------------------

  TokenCursor pragma_cursor(const Token &tok, std::vector<Token> &storage) {
    DiagnosticList local;
    storage = tokenize(tok.text, SourceLoc{tok.loc.line, tok.loc.column + 7},
                       local);
    for (Diagnostic &d : local)
      diags_.push_back(std::move(d));
    return TokenCursor(storage, diags_);
  }

  void top_level_pragma(const Token &tok) {
    std::vector<Token> storage;
    TokenCursor p = pragma_cursor(tok, storage);
    if (!p.accept_word("omp"))
      fail_at(tok.loc, "unknown pragma");
    if (p.accept_word("begin")) {
      p.expect_word("declare");
      if (p.accept_word("target")) {
        expect_pragma_end(p);
        regions_.push_back({true, tok.loc, {}});
        return;
      }
      if (p.accept_word("variant")) {
        p.expect_word("match");
        p.expect_punct("(");
        selectors::ContextSelector sel = parse_selector_tokens(p);
        p.expect_punct(")");
        expect_pragma_end(p);
        if (open_variant())
          fail_at(tok.loc, "nested declare variant regions are not supported");
        regions_.push_back({false, tok.loc, std::move(sel)});
        return;
      }
      fail_at(tok.loc, "unknown pragma");
    }
    if (p.accept_word("declare")) {
      if (p.is_word("variant"))
        fail_at(tok.loc, "only the begin/end form of declare variant is "
                         "supported");
      p.expect_word("target");
      expect_pragma_end(p);
      regions_.push_back({true, tok.loc, {}});
      return;
    }
    if (p.accept_word("end")) {
      p.expect_word("declare");
      bool target = p.accept_word("target");
      if (!target)
        p.expect_word("variant");
      expect_pragma_end(p);
      if (regions_.empty() || regions_.back().is_target != target)
        fail_at(tok.loc, target ? "unbalanced declare target"
                                : "unbalanced declare variant");
      regions_.pop_back();
      return;
    }
    if (p.accept_word("allocate")) {
      allocate_directive(p, tok.loc);
      return;
    }
    if (p.is_word("atomic") || p.is_word("target"))
      fail_at(tok.loc, "'" + p.cur().text +
                           "' directive is only allowed inside a function");
    fail_at(tok.loc, "unknown pragma");
  }

  void expect_pragma_end(TokenCursor &p) {
    if (!p.at_end())
      p.fail("unexpected tokens at end of directive");
  }

  void allocate_directive(TokenCursor &p, SourceLoc loc) {
    p.expect_punct("(");
    std::vector<std::pair<std::string, SourceLoc>> names;
    do {
      SourceLoc nloc = p.cur().loc;
      names.emplace_back(p.expect_ident(), nloc);
    } while (p.accept_punct(","));
    p.expect_punct(")");
    Allocator alloc = Allocator::default_mem;
    if (p.accept_word("allocator")) {
      p.expect_punct("(");
      SourceLoc aloc = p.cur().loc;
      std::string name = p.expect_ident();
      p.expect_punct(")");
      if (name == "omp_pteam_mem_alloc")
        alloc = Allocator::pteam;
      else if (name == "omp_cgroup_mem_alloc")
        alloc = Allocator::cgroup;
      else if (name != "omp_default_mem_alloc")
        p.fail_at(aloc, "unsupported allocator '" + name + "'");
    }
    expect_pragma_end(p);
    for (auto &[name, nloc] : names) {
      auto it = global_index_.find(name);
      if (it == global_index_.end()) {
        error_at(nloc, "allocate directive names unknown global '" + name +
                           "'");
        continue;
      }
      for (size_t idx : it->second) {
        auto &g = std::get<GlobalDecl>(module_.declarations[idx]);
        if (alloc != Allocator::default_mem && !module_.in_device_span(idx)) {
          error_at(loc, "allocator outside declare target span for '" + name +
                            "'");
          continue;
        }
        g.allocator = alloc;
      }
    }
  }

  // Declarations ----------------------------------------------------------

  std::optional<Type> try_type() {
    if (cur().kind != TokKind::Ident)
      return std::nullopt;
    std::optional<Type> t = keyword_type(cur().text);
    if (!t)
      return std::nullopt;
    std::string first = next().text;
    if (first == "unsigned") {
      if (accept_word("long")) {
        accept_word("long");
        t = Type::u64();
      } else {
        accept_word("int");
      }
    } else if (first == "long") {
      accept_word("long");
      accept_word("int");
    }
    if (accept_punct("*")) {
      if (t->is_void())
        fail("pointer to void is not supported");
      t->pointer = true;
    }
    return t;
  }

  void declaration() {
    SourceLoc loc = cur().loc;
    bool is_extern = accept_word("extern");
    std::optional<Type> type = try_type();
    if (!type) {
      // `extern name(...)` declares a function returning nothing.
      if (!(is_extern && cur().kind == TokKind::Ident && peek().text == "("))
        fail("expected declaration");
      type = Type::void_type();
    }
    if (type->scalar == ScalarKind::Ident && !type->pointer)
      fail("kmp_Ident may only be used behind a pointer");
    SourceLoc name_loc = cur().loc;
    std::string name = expect_ident();
    if (keyword_type(name))
      fail_at(name_loc, "expected identifier");
    if (is_punct("("))
      function_rest(*type, name, is_extern, loc);
    else
      global_rest(*type, name, is_extern, loc);
  }

  void add_decl(Decl d, bool device) {
    size_t idx = module_.declarations.size();
    if (auto *g = std::get_if<GlobalDecl>(&d))
      global_index_[g->name].push_back(idx);
    module_.declarations.push_back(std::move(d));
    if (device)
      module_.device_span.insert(idx);
  }

  void function_rest(Type ret, const std::string &name, bool is_extern,
                     SourceLoc loc) {
    FunctionDecl fn;
    fn.name = name;
    fn.return_type = ret;
    fn.is_extern = is_extern;
    fn.loc = loc;
    expect_punct("(");
    if (is_word("void") && peek().text == ")") {
      next();
    } else if (!is_punct(")")) {
      do {
        SourceLoc ploc = cur().loc;
        std::optional<Type> pt = try_type();
        if (!pt || pt->is_void())
          fail_at(ploc, "expected parameter type");
        Param p;
        p.type = *pt;
        p.name = expect_ident();
        fn.params.push_back(std::move(p));
      } while (accept_punct(","));
    }
    expect_punct(")");
    if (const OpenRegion *v = open_variant())
      fn.variant_of = VariantOf{name, v->selector};
    if (accept_punct(";")) {
      if (fn.variant_of)
        fail_at(loc, "declare variant regions may only contain definitions");
      add_decl(std::move(fn), in_target_span());
      return;
    }
    if (is_extern)
      fail("extern function cannot have a body");
    fn.body = block_body();
    add_decl(std::move(fn), in_target_span());
  }

  uint64_t constant_value(const Type &type) {
    SourceLoc loc = cur().loc;
    bool negate = accept_punct("-");
    if (cur().kind != TokKind::Int)
      fail_at(loc, "expected integer constant");
    uint64_t v = next().value;
    if (negate)
      v = ~v + 1;
    if (type.bits() == 32)
      v &= 0xffffffffu;
    return v;
  }

  void global_rest(Type type, const std::string &name, bool is_extern,
                   SourceLoc loc) {
    if (type.is_void())
      fail_at(loc, "global of type void");
    if (open_variant())
      fail_at(loc, "declare variant regions may only contain functions");
    GlobalDecl g;
    g.name = name;
    g.value_type = type;
    g.is_extern = is_extern;
    g.loc = loc;
    if (accept_punct("[")) {
      if (cur().kind != TokKind::Int || cur().value == 0)
        fail("expected positive array length");
      g.array_len = next().value;
      expect_punct("]");
    }
    if (is_punct("[") && peek().text == "[") {
      next();
      next();
      SourceLoc aloc = cur().loc;
      std::string attr = expect_ident();
      if (attr != "loader_uninitialized")
        fail_at(aloc, "unknown attribute '" + attr + "'");
      g.loader_uninitialized = true;
      expect_punct("]");
      expect_punct("]");
    }
    if (accept_punct("=")) {
      SourceLoc iloc = cur().loc;
      if (is_extern)
        fail_at(iloc, "extern global cannot have an initializer");
      if (accept_punct("{")) {
        if (!g.array_len)
          fail_at(iloc, "initializer list for a scalar global");
        if (!is_punct("}")) {
          do {
            g.initializer.push_back(constant_value(type));
          } while (accept_punct(","));
        }
        expect_punct("}");
        if (g.initializer.size() > *g.array_len)
          fail_at(iloc, "too many initializers");
      } else {
        if (g.array_len)
          fail_at(iloc, "array global needs an initializer list");
        g.initializer.push_back(constant_value(type));
      }
      if (g.loader_uninitialized)
        error_at(iloc, "loader_uninitialized global '" + name +
                           "' cannot have an initializer");
    }
    expect_punct(";");
    add_decl(std::move(g), in_target_span());
  }

  // Statements ------------------------------------------------------------

  StmtList block_body() {
    expect_punct("{");
    StmtList body;
    while (!is_punct("}")) {
      if (at_end())
        fail("expected '}'");
      body.push_back(statement());
    }
    next();
    return body;
  }

  Stmt make_stmt(SourceLoc loc, auto node) {
    Stmt s;
    s.loc = loc;
    s.node = std::move(node);
    return s;
  }

  Stmt statement() {
    SourceLoc loc = cur().loc;
    if (cur().kind == TokKind::Pragma)
      return pragma_statement(next());
    if (is_punct("{"))
      return make_stmt(loc, BlockStmt{block_body()});
    if (accept_word("if")) {
      expect_punct("(");
      IfStmt s;
      s.cond = expression();
      expect_punct(")");
      s.then_branch.push_back(statement());
      if (accept_word("else"))
        s.else_branch.push_back(statement());
      return make_stmt(loc, std::move(s));
    }
    if (accept_word("while")) {
      expect_punct("(");
      WhileStmt s;
      s.cond = expression();
      expect_punct(")");
      s.body.push_back(statement());
      return make_stmt(loc, std::move(s));
    }
    if (accept_word("for")) {
      expect_punct("(");
      ForStmt s;
      if (!accept_punct(";")) {
        SourceLoc iloc = cur().loc;
        if (cur().kind == TokKind::Ident && keyword_type(cur().text)) {
          s.init.push_back(make_stmt(iloc, DeclStmt{local_decl()}));
        } else {
          s.init.push_back(make_stmt(iloc, ExprStmt{expression()}));
          expect_punct(";");
        }
      }
      if (!is_punct(";"))
        s.cond = expression();
      expect_punct(";");
      if (!is_punct(")"))
        s.step = expression();
      expect_punct(")");
      s.body.push_back(statement());
      return make_stmt(loc, std::move(s));
    }
    if (accept_word("return")) {
      ReturnStmt s;
      if (!is_punct(";"))
        s.value = expression();
      expect_punct(";");
      return make_stmt(loc, std::move(s));
    }
    if (accept_word("break")) {
      expect_punct(";");
      return make_stmt(loc, BreakStmt{});
    }
    if (accept_word("continue")) {
      expect_punct(";");
      return make_stmt(loc, ContinueStmt{});
    }
    if (cur().kind == TokKind::Ident && keyword_type(cur().text))
      return make_stmt(loc, DeclStmt{local_decl()});
    Expr e = expression();
    expect_punct(";");
    return make_stmt(loc, ExprStmt{std::move(e)});
  }

  VarDecl local_decl() {
    VarDecl v;
    SourceLoc tloc = cur().loc;
    std::optional<Type> t = try_type();
    if (!t || t->is_void())
      fail_at(tloc, "expected variable type");
    v.type = *t;
    v.name = expect_ident();
    if (accept_punct("[")) {
      if (cur().kind != TokKind::Int || cur().value == 0)
        fail("expected positive array length");
      v.array_len = next().value;
      expect_punct("]");
    }
    if (accept_punct("=")) {
      if (accept_punct("{")) {
        if (!v.array_len)
          fail("initializer list for a scalar variable");
        v.init_list = true;
        if (!is_punct("}")) {
          do {
            v.init.push_back(assignment());
          } while (accept_punct(","));
        }
        expect_punct("}");
        if (v.init.size() > *v.array_len)
          fail("too many initializers");
      } else {
        if (v.array_len)
          fail("array variable needs an initializer list");
        v.init.push_back(expression());
      }
    }
    expect_punct(";");
    return v;
  }

  Stmt pragma_statement(const Token &tok) {
    std::vector<Token> storage;
    TokenCursor p = pragma_cursor(tok, storage);
    if (!p.accept_word("omp"))
      fail_at(tok.loc, "unknown pragma");
    if (p.accept_word("atomic"))
      return atomic_statement(p, tok.loc);
    if (p.accept_word("target"))
      return target_statement(p, tok.loc);
    if (p.is_word("begin") || p.is_word("end") || p.is_word("declare") ||
        p.is_word("allocate"))
      fail_at(tok.loc, "'" + p.cur().text +
                           "' directive is not allowed inside a function");
    fail_at(tok.loc, "unknown pragma");
  }

  Stmt atomic_statement(TokenCursor &p, SourceLoc loc) {
    AtomicConstruct a;
    bool ordered = false;
    while (!p.at_end()) {
      SourceLoc cloc = p.cur().loc;
      std::string clause = p.expect_ident();
      if (clause == "capture") {
        a.has_capture = true;
      } else if (clause == "compare") {
        a.has_compare = true;
      } else if (clause == "seq_cst") {
        ordered = true;
      } else if (clause == "relaxed" || clause == "acquire" ||
                 clause == "release" || clause == "acq_rel") {
        p.fail_at(cloc, "only seq_cst ordering is supported on atomic "
                        "constructs");
      } else if (clause == "read" || clause == "write" || clause == "update") {
        p.fail_at(cloc, "atomic '" + clause + "' clause is not supported");
      } else {
        p.fail_at(cloc, "unknown atomic clause '" + clause + "'");
      }
      p.accept_punct(",");
    }
    if (!ordered)
      fail_at(loc, "atomic construct requires seq_cst ordering");
    SourceLoc bloc = cur().loc;
    if (!is_punct("{"))
      fail_at(bloc, "expected '{' after atomic directive");
    a.block = block_body();
    return make_stmt(loc, std::move(a));
  }

  Stmt target_statement(TokenCursor &p, SourceLoc loc) {
    TargetRegion region;
    region.loc = loc;
    p.accept_word("teams");
    while (!p.at_end()) {
      SourceLoc cloc = p.cur().loc;
      std::string clause = p.expect_ident();
      if (clause != "num_teams" && clause != "thread_limit")
        p.fail_at(cloc, "unsupported target clause '" + clause + "'");
      p.expect_punct("(");
      if (p.cur().kind != TokKind::Int || p.cur().value == 0 ||
          p.cur().value > 1024)
        p.fail("expected a constant in [1, 1024]");
      auto v = static_cast<uint32_t>(p.next().value);
      p.expect_punct(")");
      (clause == "num_teams" ? region.num_teams : region.thread_limit) = v;
      p.accept_punct(",");
    }
    if (!is_punct("{"))
      fail("expected '{' after target directive");
    region.body = block_body();
    region.id = static_cast<unsigned>(module_.target_regions.size());
    module_.target_regions.push_back(std::move(region));
    return make_stmt(loc, TargetStmt{module_.target_regions.back().id});
  }

  // Expressions -----------------------------------------------------------

  Expr expression() { return assignment(); }

  static Expr node(ExprKind kind, SourceLoc loc, std::string text,
                   std::vector<Expr> operands) {
    Expr e;
    e.kind = kind;
    e.loc = loc;
    e.text = std::move(text);
    e.operands = std::move(operands);
    return e;
  }

  Expr assignment() {
    Expr lhs = ternary();
    static const std::set<std::string, std::less<>> kAssignOps = {
        "=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>="};
    if (cur().kind == TokKind::Punct && kAssignOps.count(cur().text)) {
      const Token &op = next();
      Expr rhs = assignment();
      return node(ExprKind::Assign, op.loc, op.text,
                  {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  Expr ternary() {
    Expr cond = binary(0);
    if (is_punct("?")) {
      SourceLoc loc = next().loc;
      Expr a = assignment();
      expect_punct(":");
      Expr b = ternary();
      return node(ExprKind::Ternary, loc, "?",
                  {std::move(cond), std::move(a), std::move(b)});
    }
    return cond;
  }

  static int precedence(const std::string &op) {
    static const std::map<std::string, int, std::less<>> kPrec = {
        {"||", 1}, {"&&", 2}, {"|", 3},  {"^", 4},  {"&", 5},
        {"==", 6}, {"!=", 6}, {"<", 7},  {">", 7},  {"<=", 7},
        {">=", 7}, {"<<", 8}, {">>", 8}, {"+", 9},  {"-", 9},
        {"*", 10}, {"/", 10}, {"%", 10}};
    auto it = kPrec.find(op);
    return it == kPrec.end() ? -1 : it->second;
  }

  Expr binary(int min_prec) {
    Expr lhs = unary();
    while (cur().kind == TokKind::Punct) {
      int prec = precedence(cur().text);
      if (prec < 0 || prec <= min_prec)
        break;
      const Token &op = next();
      Expr rhs = binary(prec);
      lhs = node(ExprKind::Binary, op.loc, op.text,
                 {std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  static Expr one(SourceLoc loc) {
    Expr e;
    e.kind = ExprKind::IntLit;
    e.loc = loc;
    e.value = 1;
    return e;
  }

  Expr unary() {
    SourceLoc loc = cur().loc;
    if (accept_punct("-"))
      return node(ExprKind::Unary, loc, "-", {unary()});
    if (accept_punct("!"))
      return node(ExprKind::Unary, loc, "!", {unary()});
    if (accept_punct("~"))
      return node(ExprKind::Unary, loc, "~", {unary()});
    if (accept_punct("+"))
      return unary();
    if (accept_punct("*"))
      return node(ExprKind::Deref, loc, "*", {unary()});
    if (is_punct("++") || is_punct("--")) {
      std::string op = next().text == "++" ? "+=" : "-=";
      Expr target = unary();
      return node(ExprKind::Assign, loc, op, {std::move(target), one(loc)});
    }
    if (is_punct("&"))
      fail("address-of is not supported");
    return postfix();
  }

  Expr postfix() {
    Expr e = primary();
    for (;;) {
      SourceLoc loc = cur().loc;
      if (accept_punct("[")) {
        Expr idx = expression();
        expect_punct("]");
        e = node(ExprKind::Index, loc, "[]", {std::move(e), std::move(idx)});
      } else if (is_punct("++") || is_punct("--")) {
        // Statement-level sugar: behaves as the compound assignment.
        std::string op = next().text == "++" ? "+=" : "-=";
        e = node(ExprKind::Assign, loc, op, {std::move(e), one(loc)});
      } else {
        return e;
      }
    }
  }

  Expr primary() {
    const Token &t = cur();
    if (t.kind == TokKind::Int) {
      next();
      Expr e;
      e.kind = ExprKind::IntLit;
      e.loc = t.loc;
      e.value = t.value;
      bool is_unsigned = t.unsigned_suffix;
      bool wide = t.long_suffix;
      if (!wide) {
        if (is_unsigned ? t.value > 0xffffffffull : t.value > 0x7fffffffull)
          wide = true;
      }
      if (wide && !is_unsigned && t.value > 0x7fffffffffffffffull)
        is_unsigned = true;
      e.lit_type = wide ? (is_unsigned ? Type::u64() : Type::i64())
                        : (is_unsigned ? Type::u32() : Type::i32());
      return e;
    }
    if (t.kind == TokKind::String) {
      next();
      Expr e;
      e.kind = ExprKind::StrLit;
      e.loc = t.loc;
      e.text = t.text;
      return e;
    }
    if (t.kind == TokKind::Ident) {
      if (keyword_type(t.text))
        fail("unexpected type name in expression");
      const Token &id = next();
      if (accept_punct("(")) {
        std::vector<Expr> args;
        if (!is_punct(")")) {
          do {
            args.push_back(assignment());
          } while (accept_punct(","));
        }
        expect_punct(")");
        return node(ExprKind::Call, id.loc, id.text, std::move(args));
      }
      return node(ExprKind::Var, id.loc, id.text, {});
    }
    if (accept_punct("(")) {
      Expr e = expression();
      expect_punct(")");
      return e;
    }
    fail("expected expression");
  }

  SourceModule module_;
  std::vector<OpenRegion> regions_;
  std::map<std::string, std::vector<size_t>> global_index_;
};

} // namespace

Expected<selectors::ContextSelector> parse_selector(std::string_view text) {
  DiagnosticList diags;
  std::vector<Token> toks = tokenize(text, SourceLoc{1, 1}, diags);
  if (!diags.empty())
    return diags;
  TokenCursor c(std::move(toks), diags);
  try {
    selectors::ContextSelector sel = parse_selector_tokens(c);
    if (!c.at_end())
      c.fail("unexpected tokens after selector");
    return sel;
  } catch (ParseError &) {
    return diags;
  }
}

Expected<SourceModule> parse_module(std::string_view text) {
  DiagnosticList diags;
  std::vector<Token> toks = tokenize(text, SourceLoc{1, 1}, diags);
  SourceModule module = Parser(std::move(toks), diags).run();
  if (diags.empty())
    analyze(module, diags);
  if (!diags.empty())
    return diags;
  return module;
}

} // namespace forge::frontend
