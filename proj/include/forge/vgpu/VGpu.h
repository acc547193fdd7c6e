//===- forge/vgpu/VGpu.h - Simulated GPU target ----------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Executes vgpu device images over a teams x threads grid. Threads are
// interleaved by a seeded round-robin scheduler with a random quantum of one
// to eight instructions; every memory access is sequentially consistent.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_VGPU_VGPU_H
#define FORGE_VGPU_VGPU_H

#include "forge/ir/IR.h"
#include "forge/vgpu/Machine.h"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace forge::vgpu {

inline constexpr uint32_t kMaxGridDim = 1024;

struct GridConfig {
  uint32_t num_teams = 1;
  uint32_t threads_per_team = 1;
  uint64_t sched_seed = 0;
  bool check_uninit = false;
};

struct LaunchArg {
  bool buffer = false;
  std::vector<uint8_t> bytes; // buffers
  uint64_t value = 0;         // scalars

  static LaunchArg make_buffer(std::vector<uint8_t> bytes) {
    return {true, std::move(bytes), 0};
  }
  static LaunchArg make_scalar(uint64_t value) { return {false, {}, value}; }
};

struct TraceEvent {
  uint64_t seq = 0;
  uint32_t team = 0;
  uint32_t thread = 0;
  std::string kind; // atomic, fence, barrier
  std::string detail;

  bool operator==(const TraceEvent &) const = default;
};

struct TrapInfo {
  std::string kind;
  std::string detail;
  uint32_t team = 0;
  uint32_t thread = 0;

  bool operator==(const TrapInfo &) const = default;
};

struct ExecResult {
  /// Device globals in image order, concatenated.
  std::vector<uint8_t> global_memory;
  /// Final contents of each buffer argument.
  std::vector<std::vector<uint8_t>> buffers;
  /// Kernel return value per thread, team-major.
  std::vector<int64_t> returns;
  std::optional<TrapInfo> trap;
  uint64_t instruction_count = 0;
  std::vector<TraceEvent> trace;

  bool operator==(const ExecResult &) const = default;
};

/// `seq team thread kind detail`, one event per line.
std::string format_trace(const std::vector<TraceEvent> &trace);

/// A loaded device image. Global-space variables keep their values across
/// launches on the same device.
class Device {
public:
  static Expected<std::unique_ptr<Device>> load(ir::Module image);
  ~Device();

  const ir::Module &image() const { return image_; }
  Expected<ExecResult> launch(std::string_view entry, const GridConfig &grid,
                              const std::vector<LaunchArg> &args);

private:
  explicit Device(ir::Module image);

  ir::Module image_;
  Memory memory_;
  std::vector<uint32_t> globals_; // object per global-space variable
  size_t persistent_objects_ = 0;
};

/// One-shot launch on a fresh device.
Expected<ExecResult> launch(const ir::Module &image, std::string_view entry,
                            const GridConfig &grid,
                            const std::vector<LaunchArg> &args);

} // namespace forge::vgpu

#endif // FORGE_VGPU_VGPU_H
