//===- forge/selectors/Selectors.h - Variant selection ---------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Context-selector matching. Without an extension every listed architecture
// must be the one being compiled for; `match_any` accepts any listed
// architecture and `match_none` is its complement.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_SELECTORS_SELECTORS_H
#define FORGE_SELECTORS_SELECTORS_H

#include "forge/frontend/AST.h"
#include "forge/selectors/Target.h"

#include <optional>
#include <span>
#include <string>

namespace forge::selectors {

bool selector_matches(const ContextSelector &sel, const TargetDesc &target);

/// Number of selector sets present when the selector matches: the device set
/// counts one, an implementation extension counts zero.
std::optional<unsigned> selector_score(const ContextSelector &sel,
                                       const TargetDesc &target);

/// Name of the function that replaces `base` for `target`: the unique best
/// scoring matching candidate, or the base itself when nothing matches.
/// Two matching candidates tied at the best score are an Ambiguous error.
Expected<std::string>
resolve_variant(const frontend::FunctionDecl &base,
                std::span<const frontend::FunctionDecl> candidates,
                const TargetDesc &target);

/// Symbol name of a variant definition, `<base>$ompvariant$<selector>`.
std::string mangle_variant(const std::string &base, const ContextSelector &sel);

/// Strip a `$ompvariant$...` suffix, if any.
std::string demangle_variant(const std::string &name);

} // namespace forge::selectors

#endif // FORGE_SELECTORS_SELECTORS_H
