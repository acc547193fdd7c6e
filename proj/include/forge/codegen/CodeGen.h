//===- forge/codegen/CodeGen.h - Device and host IR emission ---*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Lowering of specialized modules to IR. Device images contain one kernel per
// target region plus every declare-target function; the host program contains
// the host functions, a `tgt.target` launch per region and a sequential
// fallback for each kernel.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_CODEGEN_CODEGEN_H
#define FORGE_CODEGEN_CODEGEN_H

#include "forge/frontend/AST.h"
#include "forge/ir/IR.h"
#include "forge/lowering/Lowering.h"
#include "forge/selectors/Target.h"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace forge::codegen {

struct FunctionSig {
  frontend::Type ret;
  std::vector<frontend::Type> params;
};

using SignatureMap = std::map<std::string, FunctionSig>;

ir::Ty lower_type(frontend::Type t);

/// Instruction name of an intrinsic kind on `target`.
Expected<std::string> map_intrinsic(selectors::IntrinsicKind kind,
                                    const selectors::TargetDesc &target);

struct EmitOptions {
  /// Functions callable without a declaration in the module. When null the
  /// device runtime API is used.
  const SignatureMap *externals = nullptr;
  /// Emit every declare-target function, not only those reachable from a
  /// kernel.
  bool all_device_functions = true;
  /// When set, emit only these functions and what they call, instead of all
  /// declare-target functions.
  const std::set<std::string> *roots = nullptr;
};

/// One `__omp_offload_<id>` kernel per target region plus the module's
/// declare-target functions and globals.
Expected<ir::Module> emit_device_ir(const lowering::SpecializedModule &spec,
                                    const selectors::TargetDesc &target,
                                    const EmitOptions &options = {});

/// Name of the kernel and host fallback for region `id`.
std::string kernel_name(unsigned id);
std::string fallback_name(unsigned id);

/// Append every runtime function transitively referenced by `user`.
/// Calls to replaced runtime bases are rewritten to the chosen variant.
Expected<ir::Module> link_runtime(const ir::Module &user,
                                  const ir::Module &runtime);
/// Same, with the device runtime compiled for `target`.
Expected<ir::Module> link_runtime(const ir::Module &user,
                                  const selectors::TargetDesc &target);

struct ArgDescriptor {
  std::string name;
  bool buffer = false;
  ir::Ty type = ir::Ty::U32;  // scalar type or buffer element type
  uint64_t element_count = 0; // buffers only
  uint64_t size_bytes = 0;    // buffers only

  bool operator==(const ArgDescriptor &) const = default;
};

struct TargetCall {
  unsigned kernel_id = 0;
  std::string kernel;
  std::string fallback;
  std::vector<ArgDescriptor> args;
  uint32_t num_teams = 1;
  uint32_t thread_limit = 1;

  bool operator==(const TargetCall &) const = default;
};

struct HostBuffer {
  std::string function;
  std::string name;
  uint64_t size_bytes = 0;

  bool operator==(const HostBuffer &) const = default;
};

struct HostProgram {
  /// Host IR: `main`, the other host functions, host-compiled kernels,
  /// fallbacks, and the linked host runtime.
  ir::Module module;
  std::vector<TargetCall> target_calls;
  std::vector<HostBuffer> buffers;
};

Expected<HostProgram> emit_host_program(const frontend::SourceModule &module);

std::string serialize_host_program(const HostProgram &program);
Expected<HostProgram> deserialize_host_program(std::string_view text);

} // namespace forge::codegen

#endif // FORGE_CODEGEN_CODEGEN_H
