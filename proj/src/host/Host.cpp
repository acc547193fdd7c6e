//===- host/Host.cpp - Host interpreter and offload runtime --------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/host/Host.h"

#include <sstream>

namespace forge::host {

using ir::Instr;
using ir::Opcode;
using vgpu::LaunchArg;
using vgpu::Memory;
using vgpu::ThreadState;
using vgpu::Trap;

//===----------------------------------------------------------------------===//
// OffloadRuntime
//===----------------------------------------------------------------------===//

OffloadRuntime::OffloadRuntime(const bundler::Bundle &bundle,
                               RunOptions options)
    : bundle_(bundle), options_(options) {}

OffloadRuntime::~OffloadRuntime() = default;

Expected<int> OffloadRuntime::tgt_target(const codegen::TargetCall &call,
                                         uint32_t teams, uint32_t threads,
                                         std::vector<LaunchArg> &args) {
  if (options_.force_fail)
    return kNoImage;
  const selectors::TargetDesc &desc = selectors::target_desc(options_.device);
  if (options_.device == selectors::Arch::host || !desc.executable)
    return kNoImage;
  const bundler::Entry *entry =
      bundle_.find(selectors::arch_name(options_.device));
  if (!entry)
    return kNoImage;
  if (!loaded_) {
    loaded_ = true;
    Expected<ir::Module> image = ir::parse_module(entry->payload);
    if (!image)
      return image.diags();
    Expected<std::unique_ptr<vgpu::Device>> device =
        vgpu::Device::load(std::move(*image));
    if (!device)
      return device.diags();
    device_ = std::move(*device);
  }
  if (!device_ || !device_->image().find_function(call.kernel))
    return kNoImage;

  vgpu::GridConfig grid;
  grid.num_teams = teams;
  grid.threads_per_team = threads;
  grid.sched_seed = options_.sched_seed;
  grid.check_uninit = options_.check_uninit;
  Expected<vgpu::ExecResult> result = device_->launch(call.kernel, grid, args);
  if (!result)
    return result.diags();
  instructions_ += result->instruction_count;
  for (vgpu::TraceEvent &e : result->trace) {
    e.seq = trace_.size();
    trace_.push_back(std::move(e));
  }
  if (result->trap) {
    trap_ = result->trap;
    return kDeviceTrap;
  }
  size_t b = 0;
  for (LaunchArg &a : args)
    if (a.buffer)
      a.bytes = std::move(result->buffers[b++]);
  return kLaunched;
}

//===----------------------------------------------------------------------===//
// Host interpreter
//===----------------------------------------------------------------------===//

namespace {

/// Ends the host program after a device trap.
struct DeviceTrapped {};

std::string format_value(ir::Ty t, uint64_t v) {
  if (ir::ty_signed(t))
    return std::to_string(vgpu::sign_extend(t, v));
  return std::to_string(vgpu::truncate_to(t, v));
}

class HostEnv : public vgpu::Environment {
public:
  HostEnv(const codegen::HostProgram &program, Memory &memory,
          OffloadRuntime &runtime, const RunOptions &options,
          RunResult &result)
      : program_(program), memory_(memory), runtime_(runtime),
        options_(options), result_(result) {
    for (const ir::Global &g : program.module.globals) {
      uint32_t obj = memory.create(g.name, g.size_bytes());
      globals_[g.name] = obj;
      reset(g, obj);
      if (g.space == ir::GlobalSpace::shared)
        shared_.emplace_back(&g, obj);
    }
  }

  uint64_t global_address(const ThreadState &,
                          const std::string &name) override {
    auto it = globals_.find(name);
    if (it == globals_.end())
      throw Trap{"OutOfBounds", "unknown global @" + name};
    return Memory::pointer(it->second, 0);
  }

  uint64_t extension(ThreadState &t, const Instr &in,
                     const std::vector<uint64_t> &args) override {
    switch (in.op) {
    case Opcode::GridTeams:
      return options_.teams.value_or(uint32_t(in.count));
    case Opcode::GridThreads:
      return options_.threads.value_or(uint32_t(in.count));
    case Opcode::TgtTarget:
      return target(in, args);
    default:
      break;
    }
    if (in.name == "print") {
      std::string line;
      for (size_t i = 0; i < in.args.size(); ++i) {
        if (i)
          line += ' ';
        if (in.args[i].kind == ir::Value::Kind::Str)
          line += in.args[i].name;
        else
          line += format_value(in.arg_types.at(i), args[i]);
      }
      result_.output += line + "\n";
      return 0;
    }
    if (in.name == "host.set.context") {
      t.ctx = vgpu::ThreadContext{uint32_t(args.at(0)), uint32_t(args.at(1)),
                                  uint32_t(args.at(2)), uint32_t(args.at(3))};
      // A new team starts with fresh team-shared memory.
      if (t.ctx.thread == 0)
        for (auto &[g, obj] : shared_)
          reset(*g, obj);
      return 0;
    }
    return Environment::extension(t, in, args);
  }

  void finish() {
    for (const auto &[name, ptr, size] : buffers_) {
      auto [obj, off] = memory_.check(ptr, size);
      const std::vector<uint8_t> &bytes = memory_.bytes(obj);
      result_.buffers.push_back(
          {name, std::vector<uint8_t>(bytes.begin() + off,
                                      bytes.begin() + off + size)});
    }
  }

private:
  void reset(const ir::Global &g, uint32_t obj) {
    memory_.fill(obj, g.init == ir::GlobalInit::none);
    if (g.init != ir::GlobalInit::explicit_values)
      return;
    unsigned width = ir::ty_bytes(g.type);
    for (size_t i = 0; i < g.values.size() && i < g.count; ++i)
      memory_.store(Memory::pointer(obj, uint32_t(i * width)), width,
                    g.values[i]);
  }

  uint64_t target(const Instr &in, const std::vector<uint64_t> &args) {
    const codegen::TargetCall *call = nullptr;
    for (const codegen::TargetCall &c : program_.target_calls)
      if (c.kernel_id == in.count)
        call = &c;
    if (!call || call->args.size() != in.kernel_args.size())
      throw Trap{"IllegalInstruction",
                 "no target call descriptor for region " +
                     std::to_string(in.count)};
    uint32_t teams = uint32_t(args.at(0));
    uint32_t threads = uint32_t(args.at(1));
    std::vector<LaunchArg> launch;
    std::vector<std::pair<uint64_t, uint64_t>> spans;
    for (size_t i = 0; i < in.kernel_args.size(); ++i) {
      const ir::KernelArg &ka = in.kernel_args[i];
      uint64_t v = args.at(2 + i);
      if (!ka.buffer) {
        launch.push_back(LaunchArg::make_scalar(v));
        continue;
      }
      uint64_t size = ka.count * ir::ty_bytes(ka.type);
      auto [obj, off] = memory_.check(v, size);
      const std::vector<uint8_t> &bytes = memory_.bytes(obj);
      launch.push_back(LaunchArg::make_buffer(std::vector<uint8_t>(
          bytes.begin() + off, bytes.begin() + off + size)));
      spans.emplace_back(v, size);
      bool seen = false;
      for (const auto &b : buffers_)
        seen |= std::get<1>(b) == v;
      if (!seen)
        buffers_.emplace_back(call->args[i].name, v, size);
    }
    Expected<int> status = runtime_.tgt_target(*call, teams, threads, launch);
    if (!status) {
      diags_ = status.diags();
      throw DeviceTrapped{};
    }
    result_.launch_statuses.push_back(*status);
    if (*status == kDeviceTrap)
      throw DeviceTrapped{};
    if (*status == kLaunched) {
      size_t b = 0;
      for (const LaunchArg &a : launch) {
        if (!a.buffer)
          continue;
        auto [obj, off] = memory_.check(spans[b].first, spans[b].second);
        std::copy(a.bytes.begin(), a.bytes.end(),
                  memory_.bytes(obj).begin() + off);
        ++b;
      }
    }
    return uint64_t(*status);
  }

  const codegen::HostProgram &program_;
  Memory &memory_;
  OffloadRuntime &runtime_;
  const RunOptions &options_;
  RunResult &result_;
  std::unordered_map<std::string, uint32_t> globals_;
  std::vector<std::pair<const ir::Global *, uint32_t>> shared_;
  std::vector<std::tuple<std::string, uint64_t, uint64_t>> buffers_;

public:
  DiagnosticList diags_;
};

} // namespace

Expected<RunResult> run_bundle(const bundler::Bundle &bundle,
                               const RunOptions &options) {
  if (bundle.entries.empty() ||
      bundle.entries.front().target != bundler::kHostEntry)
    return make_diag(DiagKind::Bundle, "bundle has no host entry");
  Expected<codegen::HostProgram> program =
      codegen::deserialize_host_program(bundle.host());
  if (!program)
    return program.diags();
  if (!program->module.find_function("main"))
    return make_diag(DiagKind::Launch, "host program has no 'main'");

  RunResult result;
  OffloadRuntime runtime(bundle, options);
  Memory memory;
  HostEnv env(*program, memory, runtime, options, result);
  vgpu::ExecutorOptions exec;
  exec.check_uninit = options.check_uninit;
  exec.sequential = true;
  Expected<vgpu::Executor> executor =
      vgpu::Executor::create(program->module, memory, env, exec);
  if (!executor)
    return executor.diags();
  ThreadState main = executor->start("main", {}, vgpu::ThreadContext{});
  try {
    executor->run(main);
  } catch (const DeviceTrapped &) {
    if (!env.diags_.empty())
      return env.diags_;
    result.trap = runtime.trap();
    result.exit_status = 2;
  } catch (const Trap &trap) {
    result.trap = vgpu::TrapInfo{trap.kind, trap.detail, main.ctx.team,
                                 main.ctx.thread};
    result.exit_status = 2;
  }
  env.finish();
  result.trace = runtime.trace();
  result.device_instructions = runtime.instruction_count();
  return result;
}

Expected<RunResult> run_bundle(std::string_view bytes,
                               const RunOptions &options) {
  Expected<bundler::Bundle> bundle = bundler::unbundle(bytes);
  if (!bundle)
    return bundle.diags();
  return run_bundle(*bundle, options);
}

} // namespace forge::host
