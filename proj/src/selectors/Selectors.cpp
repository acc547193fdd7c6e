//===- selectors/Selectors.cpp - Variant selection -----------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/selectors/Selectors.h"

#include <algorithm>

namespace forge::selectors {

bool selector_matches(const ContextSelector &sel, const TargetDesc &target) {
  if (!sel.device_arch)
    return true;
  std::string_view arch = arch_name(target.arch);
  const auto &list = *sel.device_arch;
  bool listed = std::find(list.begin(), list.end(), arch) != list.end();
  switch (sel.extension) {
  case Extension::none:
    return std::all_of(list.begin(), list.end(),
                       [&](const std::string &a) { return a == arch; });
  case Extension::match_any:
    return listed;
  case Extension::match_none:
    return !listed;
  }
  return false;
}

std::optional<unsigned> selector_score(const ContextSelector &sel,
                                       const TargetDesc &target) {
  if (!selector_matches(sel, target))
    return std::nullopt;
  return sel.device_arch ? 1u : 0u;
}

Expected<std::string>
resolve_variant(const frontend::FunctionDecl &base,
                std::span<const frontend::FunctionDecl> candidates,
                const TargetDesc &target) {
  const frontend::FunctionDecl *best = nullptr;
  unsigned best_score = 0;
  bool tied = false;
  for (const frontend::FunctionDecl &c : candidates) {
    if (!c.variant_of || c.variant_of->base != base.name)
      continue;
    std::optional<unsigned> score =
        selector_score(c.variant_of->selector, target);
    if (!score)
      continue;
    if (!best || *score > best_score) {
      best = &c;
      best_score = *score;
      tied = false;
    } else if (*score == best_score) {
      tied = true;
    }
  }
  if (!best)
    return base.name;
  if (tied)
    return make_diag(DiagKind::Ambiguous,
                     "ambiguous declare variant for '" + base.name +
                         "' on target " + std::string(arch_name(target.arch)),
                     best->loc);
  return mangle_variant(base.name, best->variant_of->selector);
}

std::string mangle_variant(const std::string &base, const ContextSelector &sel) {
  std::string name = base + "$ompvariant$";
  if (sel.device_arch) {
    name += "arch";
    for (const std::string &a : *sel.device_arch)
      name += "_" + a;
  }
  if (sel.extension != Extension::none)
    name += "$" + std::string(extension_name(sel.extension));
  return name;
}

std::string demangle_variant(const std::string &name) {
  size_t pos = name.find("$ompvariant$");
  return pos == std::string::npos ? name : name.substr(0, pos);
}

} // namespace forge::selectors
