//===- forge/host/Host.h - Host interpreter and offload runtime -*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_HOST_HOST_H
#define FORGE_HOST_HOST_H

#include "forge/bundler/Bundler.h"
#include "forge/codegen/CodeGen.h"
#include "forge/vgpu/VGpu.h"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace forge::host {

enum TargetStatus : int {
  kLaunched = 0,
  kNoImage = 1,
  kDeviceTrap = 2,
};

struct RunOptions {
  selectors::Arch device = selectors::Arch::vgpu;
  /// Overrides num_teams / thread_limit of every target region.
  std::optional<uint32_t> teams;
  std::optional<uint32_t> threads;
  bool force_fail = false;
  uint64_t sched_seed = 0;
  bool check_uninit = false;
};

/// Dispatches `__tgt_target` calls to the bundle's image for one device.
class OffloadRuntime {
public:
  OffloadRuntime(const bundler::Bundle &bundle, RunOptions options);
  ~OffloadRuntime();

  /// 0: launched, buffers in `args` updated. 1: nothing ran, caller must
  /// fall back. 2: the kernel trapped (see trap()).
  Expected<int> tgt_target(const codegen::TargetCall &call, uint32_t teams,
                           uint32_t threads,
                           std::vector<vgpu::LaunchArg> &args);

  const std::optional<vgpu::TrapInfo> &trap() const { return trap_; }
  const std::vector<vgpu::TraceEvent> &trace() const { return trace_; }
  uint64_t instruction_count() const { return instructions_; }

private:
  const bundler::Bundle &bundle_;
  RunOptions options_;
  std::unique_ptr<vgpu::Device> device_;
  bool loaded_ = false;
  std::optional<vgpu::TrapInfo> trap_;
  std::vector<vgpu::TraceEvent> trace_;
  uint64_t instructions_ = 0;
};

struct BufferState {
  std::string name;
  std::vector<uint8_t> bytes;

  bool operator==(const BufferState &) const = default;
};

struct RunResult {
  /// 0 success, 2 trap.
  int exit_status = 0;
  std::string output;
  /// Final contents of every host buffer passed to a target region, in order
  /// of first use.
  std::vector<BufferState> buffers;
  /// Status of each `__tgt_target` call in execution order.
  std::vector<int> launch_statuses;
  std::optional<vgpu::TrapInfo> trap;
  std::vector<vgpu::TraceEvent> trace;
  uint64_t device_instructions = 0;
};

Expected<RunResult> run_bundle(const bundler::Bundle &bundle,
                               const RunOptions &options);
Expected<RunResult> run_bundle(std::string_view bytes,
                               const RunOptions &options);

} // namespace forge::host

#endif // FORGE_HOST_HOST_H
