//===- forge/vgpu/Machine.h - IR interpreter core --------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Memory model and single-thread stepping shared by the simulated GPU and the
// host interpreter. Pointers are (object << 32) | offset; object 0 is null.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_VGPU_MACHINE_H
#define FORGE_VGPU_MACHINE_H

#include "forge/ir/IR.h"

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace forge::vgpu {

inline constexpr uint8_t kPoisonByte = 0xAA;

/// Thrown out of the interpreter; the launch stops at the first one.
struct Trap {
  std::string kind;
  std::string detail;
};

class Memory {
public:
  Memory();

  /// New object of `size` bytes, zero filled unless `poison`. Poisoned
  /// objects remember which bytes were written since.
  uint32_t create(std::string name, uint64_t size, bool poison = false);
  void fill(uint32_t obj, bool poison);
  /// Drop every object created after the first `count`.
  void truncate(size_t count) { objects_.resize(count); }
  size_t size() const { return objects_.size(); }

  std::vector<uint8_t> &bytes(uint32_t obj) { return objects_.at(obj).data; }
  const std::vector<uint8_t> &bytes(uint32_t obj) const {
    return objects_.at(obj).data;
  }
  /// Copy in `data`, marking every byte written.
  void assign(uint32_t obj, const std::vector<uint8_t> &data);

  uint64_t load(uint64_t ptr, unsigned width, bool check_uninit) const;
  void store(uint64_t ptr, unsigned width, uint64_t value);
  /// Validate [ptr, ptr + size) and return (object, offset).
  std::pair<uint32_t, uint32_t> check(uint64_t ptr, uint64_t size) const;
  std::string describe(uint64_t ptr) const;

  static uint64_t pointer(uint32_t obj, uint32_t off) {
    return (uint64_t(obj) << 32) | off;
  }
  static uint32_t object_of(uint64_t ptr) { return uint32_t(ptr >> 32); }
  static uint32_t offset_of(uint64_t ptr) { return uint32_t(ptr); }

private:
  struct Object {
    std::string name;
    std::vector<uint8_t> data;
    std::vector<bool> written;
    bool tracked = false;
  };
  std::vector<Object> objects_;
};

uint64_t truncate_to(ir::Ty t, uint64_t v);
int64_t sign_extend(ir::Ty t, uint64_t v);

struct ThreadContext {
  uint32_t team = 0;
  uint32_t thread = 0;
  uint32_t threads = 1;
  uint32_t teams = 1;
};

struct FunctionInfo;

struct Frame {
  const FunctionInfo *fn = nullptr;
  size_t block = 0;
  size_t ip = 0;
  std::vector<uint64_t> regs;
  int64_t result = -1; // caller temp receiving the return value
};

struct ThreadState {
  enum class Status : uint8_t { Runnable, AtBarrier, Done };
  ThreadContext ctx;
  std::vector<Frame> stack;
  Status status = Status::Runnable;
  uint64_t ret = 0;
  uint64_t instructions = 0;
  /// Index into the launch's thread list.
  size_t index = 0;
};

/// Hooks for what the core does not implement itself.
class Environment {
public:
  virtual ~Environment();
  virtual uint64_t global_address(const ThreadState &t,
                                  const std::string &name) = 0;
  /// Unknown intrinsics, grid.* and tgt.target.
  virtual uint64_t extension(ThreadState &t, const ir::Instr &in,
                             const std::vector<uint64_t> &args);
  virtual void event(const ThreadState &t, std::string kind,
                     std::string detail);
};

enum class StepResult : uint8_t { Continue, Barrier, Finished };

struct ExecutorOptions {
  bool check_uninit = false;
  /// Barriers and fences are no-ops (host fallback execution).
  bool sequential = false;
};

class Executor {
public:
  /// Fails when a call target is missing from the module.
  static Expected<Executor> create(const ir::Module &module, Memory &memory,
                                   Environment &env,
                                   ExecutorOptions options = {});
  ~Executor();
  Executor(Executor &&) noexcept;
  Executor &operator=(Executor &&) = delete;

  const ir::Function *function(std::string_view name) const;
  ThreadState start(std::string_view function,
                    const std::vector<uint64_t> &args, ThreadContext ctx) const;
  /// Execute one instruction. Throws Trap.
  StepResult step(ThreadState &t);
  /// Step until the thread finishes; barriers are ignored.
  uint64_t run(ThreadState &t);

private:
  Executor(const ir::Module &module, Memory &memory, Environment &env,
           ExecutorOptions options);
  uint64_t eval(const ThreadState &t, const Frame &f,
                const ir::Value &v) const;
  void enter(ThreadState &t, Frame &f, size_t from, size_t to);
  uint64_t atomic(ThreadState &t, std::string_view kind, ir::Ty ty,
                  uint64_t ptr, uint64_t e, uint64_t d);

  const ir::Module &module_;
  Memory &memory_;
  Environment &env_;
  ExecutorOptions options_;
  const selectors::TargetDesc &target_;
  std::vector<FunctionInfo> functions_;
  std::unordered_map<std::string, size_t> by_name_;
};

} // namespace forge::vgpu

#endif // FORGE_VGPU_MACHINE_H
