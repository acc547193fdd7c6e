//===- frontend/Lexer.h - Tokenizer for .mc sources ------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_FRONTEND_LEXER_H
#define FORGE_FRONTEND_LEXER_H

#include "forge/support/Diagnostics.h"

#include <string>
#include <string_view>
#include <vector>

namespace forge::frontend {

enum class TokKind { Ident, Int, String, Punct, Pragma, Eof };

struct Token {
  TokKind kind = TokKind::Eof;
  std::string text;
  SourceLoc loc;
  uint64_t value = 0;
  bool unsigned_suffix = false;
  bool long_suffix = false;
  bool overflow = false;
};

/// Tokenize `text`. `#pragma` lines (with `\` continuations joined) become a
/// single Pragma token whose text is everything after `#pragma`.
/// Identifiers may contain `$` and, after the first character, `.`.
std::vector<Token> tokenize(std::string_view text, SourceLoc origin,
                            DiagnosticList &diags);

} // namespace forge::frontend

#endif // FORGE_FRONTEND_LEXER_H
