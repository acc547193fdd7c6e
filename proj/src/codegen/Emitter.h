//===- codegen/Emitter.h - AST to IR emission ------------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_CODEGEN_EMITTER_H
#define FORGE_CODEGEN_EMITTER_H

#include "Builder.h"

#include "forge/codegen/CodeGen.h"

#include <deque>
#include <functional>
#include <set>

namespace forge::codegen {

/// Module-wide state shared by the function emitters of one pass.
class ModuleEmitter {
public:
  ModuleEmitter(const lowering::SpecializedModule &spec,
                const selectors::TargetDesc &target,
                const SignatureMap &externals, bool host_pass);

  struct FunctionInfo {
    const frontend::FunctionDecl *decl = nullptr;
    bool device = false;
  };

  const FunctionInfo *function(const std::string &name) const;
  const frontend::GlobalDecl *global(const std::string &name) const;
  bool global_in_device_span(const std::string &name) const;

  /// Emit `decl` (a definition) once; further requests are ignored.
  void request(const std::string &name);
  /// Emit all requested functions not emitted yet.
  void drain();

  void emit_kernel(const frontend::TargetRegion &region);
  void emit_fallback(const frontend::TargetRegion &region);
  void emit_globals(bool device_only);

  ir::Module &module() { return module_; }
  DiagnosticList &diags() { return diags_; }
  const selectors::TargetDesc &target() const { return target_; }
  const SignatureMap &externals() const { return externals_; }
  bool host_pass() const { return host_pass_; }
  const lowering::SpecializedModule &spec() const { return spec_; }

  void error(DiagKind kind, SourceLoc loc, std::string message) {
    diags_.push_back(make_diag(kind, std::move(message), loc));
  }

private:
  void emit_function(const frontend::FunctionDecl &fn, bool device);

  const lowering::SpecializedModule &spec_;
  const selectors::TargetDesc &target_;
  const SignatureMap &externals_;
  bool host_pass_;
  std::map<std::string, FunctionInfo> functions_;
  std::map<std::string, std::pair<const frontend::GlobalDecl *, bool>>
      globals_;
  std::set<std::string> requested_;
  std::deque<std::string> pending_;
  ir::Module module_;
  DiagnosticList diags_;
};

} // namespace forge::codegen

#endif // FORGE_CODEGEN_EMITTER_H
