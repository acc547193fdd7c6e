//===- devicert/DeviceRuntime.cpp - Embedded runtime compilation ---------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/devicert/DeviceRuntime.h"

#include "forge/frontend/Parser.h"
#include "forge/lowering/Lowering.h"

#include <array>
#include <cstdlib>
#include <iostream>
#include <mutex>

namespace forge::devicert {

namespace detail {
extern const std::string_view kRuntimeSource;
} // namespace detail

std::string_view runtime_source() { return detail::kRuntimeSource; }

const frontend::SourceModule &runtime_module() {
  static const frontend::SourceModule module = [] {
    Expected<frontend::SourceModule> parsed =
        frontend::parse_module(runtime_source());
    if (!parsed) {
      print_diagnostics(std::cerr, "<devicert>", parsed.diags());
      std::abort();
    }
    return std::move(*parsed);
  }();
  return module;
}

const codegen::SignatureMap &runtime_signatures() {
  static const codegen::SignatureMap signatures = [] {
    codegen::SignatureMap out;
    for (const frontend::Decl &d : runtime_module().declarations) {
      auto *f = std::get_if<frontend::FunctionDecl>(&d);
      if (!f || f->variant_of)
        continue;
      codegen::FunctionSig sig;
      sig.ret = f->return_type;
      for (const frontend::Param &p : f->params)
        sig.params.push_back(p.type);
      out.emplace(f->name, std::move(sig));
    }
    return out;
  }();
  return signatures;
}

namespace {

Expected<ir::Module> compile(const selectors::TargetDesc &target,
                             const std::set<std::string> *roots) {
  Expected<lowering::SpecializedModule> spec =
      lowering::specialize(runtime_module(), target);
  if (!spec)
    return spec.diags();
  static const codegen::SignatureMap none;
  codegen::EmitOptions options;
  options.externals = &none;
  options.roots = roots;
  Expected<ir::Module> m = codegen::emit_device_ir(*spec, target, options);
  if (!m)
    return m;
  m->aliases = spec->replacements;
  return m;
}

bool is_builtin(const selectors::TargetDesc &target) {
  const selectors::TargetDesc &builtin = selectors::target_desc(target.arch);
  return target.intrinsic_table == builtin.intrinsic_table &&
         target.shared_space_capacity == builtin.shared_space_capacity &&
         target.executable == builtin.executable;
}

} // namespace

Expected<ir::Module> runtime_ir(const selectors::TargetDesc &target) {
  if (!is_builtin(target))
    return compile(target, nullptr);
  static std::array<std::once_flag, selectors::kAllArchs.size()> once;
  static std::array<std::optional<Expected<ir::Module>>,
                    selectors::kAllArchs.size()>
      cache;
  size_t index = static_cast<size_t>(target.arch);
  std::call_once(once[index],
                 [&] { cache[index].emplace(compile(target, nullptr)); });
  return *cache[index];
}

Expected<ir::Module> runtime_ir(const selectors::TargetDesc &target,
                                const std::set<std::string> &roots) {
  return compile(target, &roots);
}

} // namespace forge::devicert
