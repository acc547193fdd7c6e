//===- forge/frontend/AST.h - Mini-language syntax tree --------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Value-semantic syntax tree for `.mc` translation units. Nodes own their
// children through std::vector so a module can be copied and specialized per
// target without aliasing.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_FRONTEND_AST_H
#define FORGE_FRONTEND_AST_H

#include "forge/selectors/Target.h"
#include "forge/support/Diagnostics.h"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace forge::frontend {

enum class ScalarKind : uint8_t { Void, I32, U32, I64, U64, Ident };

struct Type {
  ScalarKind scalar = ScalarKind::I32;
  bool pointer = false;

  bool operator==(const Type &) const = default;

  bool is_void() const { return scalar == ScalarKind::Void && !pointer; }
  bool is_integer() const {
    return !pointer && scalar != ScalarKind::Void &&
           scalar != ScalarKind::Ident;
  }
  bool is_signed() const {
    return !pointer && (scalar == ScalarKind::I32 || scalar == ScalarKind::I64);
  }
  unsigned bits() const {
    if (pointer || scalar == ScalarKind::I64 || scalar == ScalarKind::U64)
      return 64;
    return 32;
  }
  Type pointee() const { return Type{scalar, false}; }
  Type pointer_to() const { return Type{scalar, true}; }

  static Type i32() { return {ScalarKind::I32, false}; }
  static Type u32() { return {ScalarKind::U32, false}; }
  static Type i64() { return {ScalarKind::I64, false}; }
  static Type u64() { return {ScalarKind::U64, false}; }
  static Type void_type() { return {ScalarKind::Void, false}; }
};

/// Canonical spelling: `i32`, `u64*`, `void`, `kmp_Ident*`.
std::string type_name(Type t);

enum class ExprKind : uint8_t {
  IntLit,
  StrLit,
  Var,
  Unary,   // text: "-", "!", "~"
  Binary,  // text: operator spelling
  Assign,  // text: "=", "+=", ...
  Ternary, // operands: cond, then, else
  Call,    // text: callee
  Index,   // operands: base, index
  Deref,   // operands: pointer
};

struct Expr {
  ExprKind kind = ExprKind::IntLit;
  SourceLoc loc;
  std::string text;
  uint64_t value = 0;
  /// Type of an integer literal (from its suffix and magnitude).
  Type lit_type = Type::i32();
  std::vector<Expr> operands;
};

/// Structural equality ignoring source locations.
bool same_expr(const Expr &a, const Expr &b);
/// Whether `needle` (a variable name) occurs anywhere in `e`.
bool mentions_var(const Expr &e, const std::string &name);

struct Stmt;
using StmtList = std::vector<Stmt>;

struct VarDecl {
  std::string name;
  Type type;
  std::optional<uint64_t> array_len;
  /// Scalar initializer (one element) or array initializer list.
  std::vector<Expr> init;
  bool init_list = false;
};

struct BlockStmt {
  StmtList body;
};
struct DeclStmt {
  VarDecl var;
};
struct ExprStmt {
  Expr expr;
};
struct IfStmt {
  Expr cond;
  StmtList then_branch; // exactly one statement
  StmtList else_branch; // zero or one statement
};
struct WhileStmt {
  Expr cond;
  StmtList body; // exactly one statement
};
struct ForStmt {
  StmtList init; // zero or one DeclStmt/ExprStmt
  std::optional<Expr> cond;
  std::optional<Expr> step;
  StmtList body; // exactly one statement
};
struct ReturnStmt {
  std::optional<Expr> value;
};
struct BreakStmt {};
struct ContinueStmt {};

enum class MemoryOrder : uint8_t { seq_cst };

/// `#pragma omp atomic [compare] capture seq_cst` followed by a block whose
/// statements name V (captured old value), X (location), E and D.
struct AtomicConstruct {
  bool has_capture = false;
  bool has_compare = false;
  MemoryOrder ordering = MemoryOrder::seq_cst;
  StmtList block;
};

enum class AtomicKind : uint8_t { ADD, MAX, MIN, XCHG, CAS, INC };

std::string_view atomic_kind_name(AtomicKind kind); // "add", "max", ...

/// The lowered form of an atomic construct: V = atomic<kind>(X, E[, D]).
/// `x` is an lvalue expression designating the memory location.
struct AtomicIntrinsic {
  AtomicKind kind = AtomicKind::ADD;
  MemoryOrder ordering = MemoryOrder::seq_cst;
  Expr x;
  Expr e;
  std::optional<Expr> d;
  Expr v;
};

/// Reference to `SourceModule::target_regions[region_id]` at its position in
/// the enclosing host function.
struct TargetStmt {
  unsigned region_id = 0;
};

struct Stmt {
  SourceLoc loc;
  std::variant<BlockStmt, DeclStmt, ExprStmt, IfStmt, WhileStmt, ForStmt,
               ReturnStmt, BreakStmt, ContinueStmt, AtomicConstruct,
               AtomicIntrinsic, TargetStmt>
      node;
};

enum class Allocator : uint8_t { default_mem, pteam, cgroup };

struct GlobalDecl {
  std::string name;
  Type value_type;
  std::optional<uint64_t> array_len;
  /// Constant initializer values (one per element; empty means none).
  std::vector<uint64_t> initializer;
  Allocator allocator = Allocator::default_mem;
  bool loader_uninitialized = false;
  bool is_extern = false;
  SourceLoc loc;
};

struct Param {
  std::string name;
  Type type;
};

struct VariantOf {
  std::string base;
  selectors::ContextSelector selector;
};

struct FunctionDecl {
  std::string name;
  Type return_type;
  std::vector<Param> params;
  std::optional<StmtList> body;
  std::optional<VariantOf> variant_of;
  bool is_extern = false;
  SourceLoc loc;

  bool is_definition() const { return body.has_value(); }
};

enum class CaptureKind : uint8_t { Scalar, Buffer };

struct CapturedArg {
  std::string name;
  CaptureKind kind = CaptureKind::Scalar;
  /// Scalar type, or element type for buffers.
  Type type;
  uint64_t element_count = 0; // buffers only
};

struct TargetRegion {
  unsigned id = 0;
  std::optional<uint32_t> num_teams;
  std::optional<uint32_t> thread_limit;
  StmtList body;
  std::vector<CapturedArg> captured_args;
  /// Host function that contains the region.
  std::string enclosing_function;
  SourceLoc loc;
};

using Decl = std::variant<GlobalDecl, FunctionDecl>;

struct SourceModule {
  std::vector<Decl> declarations;
  std::vector<TargetRegion> target_regions;
  /// Indices into `declarations` covered by begin/end declare target.
  std::set<size_t> device_span;

  bool in_device_span(size_t index) const {
    return device_span.count(index) != 0;
  }
  size_t function_count() const;
  size_t global_count() const;
  const GlobalDecl *find_global(const std::string &name) const;
  /// First definition (or declaration, if no definition) of a non-variant
  /// function with this name.
  const FunctionDecl *find_function(const std::string &name) const;
};

const std::string &decl_name(const Decl &d);

} // namespace forge::frontend

#endif // FORGE_FRONTEND_AST_H
