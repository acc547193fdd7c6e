//===- forge/frontend/Parser.h - Parsing and printing ----------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_FRONTEND_PARSER_H
#define FORGE_FRONTEND_PARSER_H

#include "forge/frontend/AST.h"

#include <string>
#include <string_view>

namespace forge::frontend {

/// Parse and validate a translation unit. On failure every diagnostic carries
/// the line and column of the offending construct.
Expected<SourceModule> parse_module(std::string_view text);

/// Parse the contents of a `match(...)` clause.
Expected<selectors::ContextSelector> parse_selector(std::string_view text);

/// Pretty-print a module back to `.mc` source. Parsing the output yields a
/// module that prints identically.
std::string print_module(const SourceModule &module);

std::string print_expr(const Expr &e);

} // namespace forge::frontend

#endif // FORGE_FRONTEND_PARSER_H
