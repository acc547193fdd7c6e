//===- support/Diagnostics.cpp - Diagnostic rendering -------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/support/Diagnostics.h"

namespace forge {

void print_diagnostics(std::ostream &os, const std::string &file,
                       const DiagnosticList &diags) {
  for (const Diagnostic &d : diags) {
    os << file;
    if (d.loc.line)
      os << ':' << d.loc.line << ':' << d.loc.column;
    os << ": error: " << d.message << '\n';
  }
}

} // namespace forge
