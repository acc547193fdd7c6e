//===- vgpu/Interpreter.cpp - Grid launch and scheduling -----------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/vgpu/VGpu.h"

#include <random>
#include <sstream>

namespace forge::vgpu {

using ir::GlobalInit;
using ir::GlobalSpace;

std::string format_trace(const std::vector<TraceEvent> &trace) {
  std::ostringstream os;
  for (const TraceEvent &e : trace)
    os << e.seq << ' ' << e.team << ' ' << e.thread << ' ' << e.kind << ' '
       << e.detail << '\n';
  return os.str();
}

namespace {

Diagnostic launch_error(std::string message) {
  return make_diag(DiagKind::Launch, std::move(message));
}

void initialize(Memory &memory, uint32_t obj, const ir::Global &g) {
  switch (g.init) {
  case GlobalInit::zero:
    memory.fill(obj, false);
    break;
  case GlobalInit::none:
    memory.fill(obj, true);
    break;
  case GlobalInit::explicit_values: {
    memory.fill(obj, false);
    unsigned width = ir::ty_bytes(g.type);
    for (size_t i = 0; i < g.values.size() && i < g.count; ++i)
      memory.store(Memory::pointer(obj, uint32_t(i * width)), width,
                   g.values[i]);
    break;
  }
  }
}

class LaunchEnv : public Environment {
public:
  LaunchEnv(const ir::Module &image, Memory &memory,
            const std::vector<uint32_t> &globals, uint32_t teams,
            std::vector<TraceEvent> &trace)
      : trace_(trace) {
    size_t gi = 0;
    for (const ir::Global &g : image.globals) {
      if (g.space == GlobalSpace::global) {
        global_[g.name] = globals[gi++];
        continue;
      }
      std::vector<uint32_t> per_team;
      for (uint32_t t = 0; t < teams; ++t) {
        uint32_t obj = memory.create(
            g.name + ".team" + std::to_string(t), g.size_bytes());
        initialize(memory, obj, g);
        per_team.push_back(obj);
      }
      shared_[g.name] = std::move(per_team);
    }
  }

  uint64_t global_address(const ThreadState &t,
                          const std::string &name) override {
    if (auto it = global_.find(name); it != global_.end())
      return Memory::pointer(it->second, 0);
    if (auto it = shared_.find(name); it != shared_.end())
      return Memory::pointer(it->second.at(t.ctx.team), 0);
    throw Trap{"OutOfBounds", "unknown global @" + name};
  }

  void event(const ThreadState &t, std::string kind,
             std::string detail) override {
    trace_.push_back(TraceEvent{trace_.size(), t.ctx.team, t.ctx.thread,
                                std::move(kind), std::move(detail)});
  }

private:
  std::unordered_map<std::string, uint32_t> global_;
  std::unordered_map<std::string, std::vector<uint32_t>> shared_;
  std::vector<TraceEvent> &trace_;
};

} // namespace

Device::Device(ir::Module image) : image_(std::move(image)) {}
Device::~Device() = default;

Expected<std::unique_ptr<Device>> Device::load(ir::Module image) {
  const selectors::TargetDesc &vgpu =
      selectors::target_desc(selectors::Arch::vgpu);
  if (image.target != selectors::Arch::vgpu)
    return launch_error("image for '" +
                        std::string(selectors::arch_name(image.target)) +
                        "' cannot run on the simulated GPU");
  uint64_t shared = 0;
  for (const ir::Global &g : image.globals)
    if (g.space == GlobalSpace::shared)
      shared += g.size_bytes();
  if (shared > vgpu.shared_space_capacity)
    return launch_error("team-shared variables need " +
                        std::to_string(shared) + " bytes; capacity is " +
                        std::to_string(vgpu.shared_space_capacity));
  std::unique_ptr<Device> device(new Device(std::move(image)));
  for (const ir::Global &g : device->image_.globals) {
    if (g.space != GlobalSpace::global)
      continue;
    uint32_t obj = device->memory_.create(g.name, g.size_bytes());
    initialize(device->memory_, obj, g);
    device->globals_.push_back(obj);
  }
  device->persistent_objects_ = device->memory_.size();
  return device;
}

Expected<ExecResult> Device::launch(std::string_view entry,
                                    const GridConfig &grid,
                                    const std::vector<LaunchArg> &args) {
  if (grid.num_teams < 1 || grid.num_teams > kMaxGridDim ||
      grid.threads_per_team < 1 || grid.threads_per_team > kMaxGridDim)
    return launch_error("grid " + std::to_string(grid.num_teams) + "x" +
                        std::to_string(grid.threads_per_team) +
                        " is outside 1..1024 per dimension");
  const ir::Function *kernel = image_.find_function(entry);
  if (!kernel || !kernel->kernel)
    return launch_error("no kernel named '" + std::string(entry) + "'");
  if (kernel->params.size() != args.size())
    return launch_error("kernel '" + std::string(entry) + "' takes " +
                        std::to_string(kernel->params.size()) +
                        " arguments, got " + std::to_string(args.size()));
  for (size_t i = 0; i < args.size(); ++i)
    if ((kernel->params[i] == ir::Ty::Ptr) != args[i].buffer)
      return launch_error("argument " + std::to_string(i) + " of '" +
                          std::string(entry) + "' must be a " +
                          (args[i].buffer ? "scalar" : "buffer"));

  memory_.truncate(persistent_objects_);
  ExecResult result;
  LaunchEnv env(image_, memory_, globals_, grid.num_teams, result.trace);
  ExecutorOptions options;
  options.check_uninit = grid.check_uninit;
  Expected<Executor> executor =
      Executor::create(image_, memory_, env, options);
  if (!executor)
    return executor.diags();

  std::vector<uint64_t> values;
  std::vector<uint32_t> buffers;
  for (size_t i = 0; i < args.size(); ++i) {
    if (!args[i].buffer) {
      values.push_back(args[i].value);
      continue;
    }
    uint32_t obj =
        memory_.create("arg" + std::to_string(i), args[i].bytes.size());
    memory_.assign(obj, args[i].bytes);
    buffers.push_back(obj);
    values.push_back(Memory::pointer(obj, 0));
  }

  size_t n = size_t(grid.num_teams) * grid.threads_per_team;
  std::vector<ThreadState> threads;
  threads.reserve(n);
  for (uint32_t team = 0; team < grid.num_teams; ++team)
    for (uint32_t th = 0; th < grid.threads_per_team; ++th) {
      ThreadContext ctx{team, th, grid.threads_per_team, grid.num_teams};
      threads.push_back(executor->start(entry, values, ctx));
      threads.back().index = threads.size() - 1;
    }
  struct TeamState {
    uint32_t arrived = 0;
    uint32_t finished = 0;
  };
  std::vector<TeamState> teams(grid.num_teams);

  std::mt19937_64 rng(grid.sched_seed);
  std::uniform_int_distribution<int> quantum_dist(1, 8);
  size_t cursor = 0;
  size_t live = n;
  ThreadState *current = nullptr;
  auto deadlock = [&](uint32_t team) {
    TeamState &ts = teams[team];
    return ts.arrived > 0 && ts.arrived + ts.finished == grid.threads_per_team;
  };
  try {
    while (live > 0) {
      size_t scanned = 0;
      while (scanned < n &&
             threads[cursor].status != ThreadState::Status::Runnable) {
        cursor = (cursor + 1) % n;
        ++scanned;
      }
      if (scanned == n)
        throw Trap{"Deadlock", "no runnable thread"};
      current = &threads[cursor];
      int quantum = quantum_dist(rng);
      for (int q = 0; q < quantum; ++q) {
        StepResult r = executor->step(*current);
        if (r == StepResult::Continue)
          continue;
        TeamState &ts = teams[current->ctx.team];
        if (r == StepResult::Finished) {
          --live;
          ++ts.finished;
          if (deadlock(current->ctx.team))
            throw Trap{"Deadlock", "thread exited while its team waits at "
                                   "a barrier"};
          break;
        }
        env.event(*current, "barrier", "arrive");
        current->status = ThreadState::Status::AtBarrier;
        ++ts.arrived;
        if (ts.arrived == grid.threads_per_team) {
          size_t first = size_t(current->ctx.team) * grid.threads_per_team;
          for (size_t i = first; i < first + grid.threads_per_team; ++i)
            threads[i].status = ThreadState::Status::Runnable;
          ts.arrived = 0;
        } else if (deadlock(current->ctx.team)) {
          throw Trap{"Deadlock", "barrier reached by " +
                                     std::to_string(ts.arrived) + " of " +
                                     std::to_string(grid.threads_per_team) +
                                     " threads"};
        }
        break;
      }
      cursor = (cursor + 1) % n;
    }
  } catch (const Trap &trap) {
    result.trap = TrapInfo{trap.kind, trap.detail,
                           current ? current->ctx.team : 0,
                           current ? current->ctx.thread : 0};
  }

  for (const ThreadState &t : threads) {
    result.instruction_count += t.instructions;
    result.returns.push_back(sign_extend(kernel->ret, t.ret));
  }
  for (uint32_t obj : buffers)
    result.buffers.push_back(memory_.bytes(obj));
  for (uint32_t obj : globals_) {
    const std::vector<uint8_t> &bytes = memory_.bytes(obj);
    result.global_memory.insert(result.global_memory.end(), bytes.begin(),
                                bytes.end());
  }
  memory_.truncate(persistent_objects_);
  return result;
}

Expected<ExecResult> launch(const ir::Module &image, std::string_view entry,
                            const GridConfig &grid,
                            const std::vector<LaunchArg> &args) {
  Expected<std::unique_ptr<Device>> device = Device::load(image);
  if (!device)
    return device.diags();
  return (*device)->launch(entry, grid, args);
}

} // namespace forge::vgpu
