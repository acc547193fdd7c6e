//===- frontend/Sema.h - Module validation ---------------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_FRONTEND_SEMA_H
#define FORGE_FRONTEND_SEMA_H

#include "forge/frontend/AST.h"

namespace forge::frontend {

/// Check declaration invariants, resolve variable references and compute the
/// captured arguments of every target region.
void analyze(SourceModule &module, DiagnosticList &diags);

} // namespace forge::frontend

#endif // FORGE_FRONTEND_SEMA_H
