//===- forge/driver/Driver.h - Compilation pipeline and CLI ----*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_DRIVER_DRIVER_H
#define FORGE_DRIVER_DRIVER_H

#include "forge/frontend/AST.h"
#include "forge/ir/IR.h"
#include "forge/selectors/Target.h"

#include <string>
#include <vector>

namespace forge::driver {

enum ExitCode : int {
  kExitOk = 0,
  kExitDiagnostics = 1,
  kExitTrap = 2,
  kExitDiffMismatch = 3,
};

/// Device pass: specialize, emit, link the device runtime.
Expected<ir::Module> compile_device(const frontend::SourceModule &module,
                                    const selectors::TargetDesc &target);

struct CompileOutput {
  std::string bundle;
  /// Linked device IR text per target, in request order.
  std::vector<std::pair<selectors::Arch, std::string>> device_ir;
};

/// Host pass plus one device pass per target, joined into a bundle.
Expected<CompileOutput> compile_source(std::string_view source,
                                       const std::vector<selectors::Arch> &targets);

/// `forge` command line entry point; returns the process exit status.
int run_cli(int argc, char **argv);

} // namespace forge::driver

#endif // FORGE_DRIVER_DRIVER_H
