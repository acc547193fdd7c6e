//===- forge/devicert/DeviceRuntime.h - Portable device runtime -*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// The device runtime is a single mini-language source (devicert.mc) that is
// embedded at build time and compiled on demand for each target. Its target
// dependent parts are declare-variant regions over per-target intrinsics.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_DEVICERT_DEVICERUNTIME_H
#define FORGE_DEVICERT_DEVICERUNTIME_H

#include "forge/codegen/CodeGen.h"
#include "forge/frontend/AST.h"
#include "forge/ir/IR.h"
#include "forge/selectors/Target.h"

#include <cstdint>
#include <set>
#include <string>
#include <string_view>

namespace forge::devicert {

/// Team-shared arena size in bytes.
inline constexpr uint64_t kSharedArenaBytes = 65536;

std::string_view runtime_source();

/// The parsed runtime. Parsing happens once; the result is immutable.
const frontend::SourceModule &runtime_module();

/// Signatures of the functions user code may call.
const codegen::SignatureMap &runtime_signatures();

/// The runtime compiled for `target`. Built-in target descriptions are
/// compiled once and cached; the cache is safe to use from several threads.
Expected<ir::Module> runtime_ir(const selectors::TargetDesc &target);

/// Only the runtime functions named in `roots` (base names or variant
/// symbols) and their callees.
Expected<ir::Module> runtime_ir(const selectors::TargetDesc &target,
                                const std::set<std::string> &roots);

} // namespace forge::devicert

#endif // FORGE_DEVICERT_DEVICERUNTIME_H
