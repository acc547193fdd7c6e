//===- vgpu/Machine.cpp - IR interpreter core ----------------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/vgpu/Machine.h"

#include <sstream>

namespace forge::vgpu {

using ir::Instr;
using ir::Opcode;
using ir::Ty;
using ir::Value;

//===----------------------------------------------------------------------===//
// Memory
//===----------------------------------------------------------------------===//

Memory::Memory() { objects_.push_back(Object{"null", {}, {}, false}); }

uint32_t Memory::create(std::string name, uint64_t size, bool poison) {
  if (objects_.size() >= UINT32_MAX || size > UINT32_MAX)
    throw Trap{"OutOfMemory", "cannot allocate " + std::to_string(size) +
                                  " bytes for " + name};
  Object o;
  o.name = std::move(name);
  o.data.assign(size, 0);
  objects_.push_back(std::move(o));
  uint32_t id = uint32_t(objects_.size() - 1);
  if (poison)
    fill(id, true);
  return id;
}

void Memory::fill(uint32_t obj, bool poison) {
  Object &o = objects_.at(obj);
  std::fill(o.data.begin(), o.data.end(), poison ? kPoisonByte : 0);
  o.tracked = poison;
  o.written.assign(poison ? o.data.size() : 0, false);
}

void Memory::assign(uint32_t obj, const std::vector<uint8_t> &data) {
  Object &o = objects_.at(obj);
  o.data = data;
  o.tracked = false;
  o.written.clear();
}

std::pair<uint32_t, uint32_t> Memory::check(uint64_t ptr,
                                            uint64_t size) const {
  uint32_t obj = object_of(ptr);
  uint32_t off = offset_of(ptr);
  if (obj == 0 || obj >= objects_.size() ||
      uint64_t(off) + size > objects_[obj].data.size())
    throw Trap{"OutOfBounds", "access of " + std::to_string(size) +
                                  " bytes at " + describe(ptr)};
  return {obj, off};
}

uint64_t Memory::load(uint64_t ptr, unsigned width, bool check_uninit) const {
  auto [obj, off] = check(ptr, width);
  const Object &o = objects_[obj];
  if (check_uninit && o.tracked)
    for (unsigned i = 0; i < width; ++i)
      if (!o.written[off + i])
        throw Trap{"UninitializedRead", "read of " + describe(ptr)};
  uint64_t v = 0;
  for (unsigned i = 0; i < width; ++i)
    v |= uint64_t(o.data[off + i]) << (8 * i);
  return v;
}

void Memory::store(uint64_t ptr, unsigned width, uint64_t value) {
  auto [obj, off] = check(ptr, width);
  Object &o = objects_[obj];
  for (unsigned i = 0; i < width; ++i) {
    o.data[off + i] = uint8_t(value >> (8 * i));
    if (o.tracked)
      o.written[off + i] = true;
  }
}

std::string Memory::describe(uint64_t ptr) const {
  uint32_t obj = object_of(ptr);
  std::string name = obj < objects_.size() ? objects_[obj].name
                                           : "#" + std::to_string(obj);
  return name + "+" + std::to_string(offset_of(ptr));
}

//===----------------------------------------------------------------------===//
// Values
//===----------------------------------------------------------------------===//

uint64_t truncate_to(Ty t, uint64_t v) {
  switch (ir::ty_bytes(t)) {
  case 4:
    return v & 0xffffffffu;
  case 8:
    return v;
  default:
    return 0;
  }
}

int64_t sign_extend(Ty t, uint64_t v) {
  if (ir::ty_bytes(t) == 4)
    return int64_t(int32_t(uint32_t(v)));
  return int64_t(v);
}

namespace {

bool less(Ty t, uint64_t a, uint64_t b) {
  if (ir::ty_signed(t))
    return sign_extend(t, a) < sign_extend(t, b);
  return a < b;
}

uint64_t binary(Opcode op, Ty t, uint64_t a, uint64_t b) {
  bool is_signed = ir::ty_signed(t);
  unsigned bits = ir::ty_bytes(t) * 8;
  switch (op) {
  case Opcode::Add:
    return truncate_to(t, a + b);
  case Opcode::Sub:
    return truncate_to(t, a - b);
  case Opcode::Mul:
    return truncate_to(t, a * b);
  case Opcode::Div:
  case Opcode::Rem: {
    if (b == 0)
      throw Trap{"DivideByZero", op == Opcode::Div ? "div" : "rem"};
    if (!is_signed)
      return op == Opcode::Div ? a / b : a % b;
    int64_t x = sign_extend(t, a);
    int64_t y = sign_extend(t, b);
    if (y == -1) // avoids INT_MIN / -1
      return op == Opcode::Div ? truncate_to(t, 0 - uint64_t(x)) : 0;
    return truncate_to(t, uint64_t(op == Opcode::Div ? x / y : x % y));
  }
  case Opcode::And:
    return a & b;
  case Opcode::Or:
    return a | b;
  case Opcode::Xor:
    return a ^ b;
  case Opcode::Shl:
    return truncate_to(t, a << (b % bits));
  case Opcode::Shr:
    if (is_signed)
      return truncate_to(t, uint64_t(sign_extend(t, a) >> (b % bits)));
    return a >> (b % bits);
  default:
    return 0;
  }
}

bool compare(std::string_view pred, Ty t, uint64_t a, uint64_t b) {
  if (pred == "eq")
    return a == b;
  if (pred == "ne")
    return a != b;
  if (pred == "lt")
    return less(t, a, b);
  if (pred == "le")
    return !less(t, b, a);
  if (pred == "gt")
    return less(t, b, a);
  if (pred == "ge")
    return !less(t, a, b);
  throw Trap{"IllegalInstruction", "icmp " + std::string(pred)};
}

uint64_t convert(Ty from, Ty to, uint64_t v) {
  uint64_t wide = ir::ty_signed(from) ? uint64_t(sign_extend(from, v))
                                      : truncate_to(from, v);
  return truncate_to(to, wide);
}

} // namespace

//===----------------------------------------------------------------------===//
// Executor
//===----------------------------------------------------------------------===//

struct FunctionInfo {
  const ir::Function *fn = nullptr;
  size_t regs = 0;
  std::unordered_map<std::string, size_t> blocks;
  /// Per block, per instruction: resolved label indices.
  std::vector<std::vector<std::vector<size_t>>> targets;
  /// Resolved callee per call instruction.
  std::vector<std::vector<const FunctionInfo *>> callees;
};

Environment::~Environment() = default;

uint64_t Environment::extension(ThreadState &, const Instr &in,
                                const std::vector<uint64_t> &) {
  throw Trap{"IllegalInstruction", "unsupported intrinsic '" + in.name + "'"};
}

void Environment::event(const ThreadState &, std::string, std::string) {}

Executor::Executor(const ir::Module &module, Memory &memory, Environment &env,
                   ExecutorOptions options)
    : module_(module), memory_(memory), env_(env), options_(options),
      target_(selectors::target_desc(module.target)) {}

Executor::~Executor() = default;
Executor::Executor(Executor &&) noexcept = default;

Expected<Executor> Executor::create(const ir::Module &module, Memory &memory,
                                    Environment &env,
                                    ExecutorOptions options) {
  Executor ex(module, memory, env, options);
  ex.functions_.resize(module.functions.size());
  for (size_t i = 0; i < module.functions.size(); ++i)
    ex.by_name_[module.functions[i].name] = i;

  DiagnosticList diags;
  for (size_t i = 0; i < module.functions.size(); ++i) {
    const ir::Function &f = module.functions[i];
    FunctionInfo &info = ex.functions_[i];
    info.fn = &f;
    info.regs = f.params.size();
    for (size_t b = 0; b < f.blocks.size(); ++b)
      info.blocks[f.blocks[b].label] = b;
    info.targets.resize(f.blocks.size());
    info.callees.resize(f.blocks.size());
    for (size_t b = 0; b < f.blocks.size(); ++b) {
      for (const Instr &in : f.blocks[b].instrs) {
        if (in.result >= 0)
          info.regs = std::max(info.regs, size_t(in.result) + 1);
        for (const Value &v : in.args)
          if (v.is_temp())
            info.regs = std::max(info.regs, size_t(v.num) + 1);
        std::vector<size_t> labels;
        for (const std::string &l : in.labels) {
          auto it = info.blocks.find(l);
          if (it == info.blocks.end()) {
            diags.push_back(make_diag(DiagKind::Launch,
                                      "unknown label '" + l + "' in @" +
                                          f.name));
            labels.push_back(0);
            continue;
          }
          labels.push_back(it->second);
        }
        info.targets[b].push_back(std::move(labels));
        const FunctionInfo *callee = nullptr;
        if (in.op == Opcode::Call) {
          auto it = ex.by_name_.find(in.name);
          if (it == ex.by_name_.end())
            diags.push_back(make_diag(DiagKind::Launch,
                                      "call to undefined function '" +
                                          in.name + "' in @" + f.name));
          else
            callee = &ex.functions_[it->second];
        }
        info.callees[b].push_back(callee);
      }
    }
  }
  if (!diags.empty())
    return diags;
  return ex;
}

const ir::Function *Executor::function(std::string_view name) const {
  auto it = by_name_.find(std::string(name));
  return it == by_name_.end() ? nullptr : functions_[it->second].fn;
}

ThreadState Executor::start(std::string_view function,
                            const std::vector<uint64_t> &args,
                            ThreadContext ctx) const {
  ThreadState t;
  t.ctx = ctx;
  const FunctionInfo &info = functions_.at(by_name_.at(std::string(function)));
  Frame f;
  f.fn = &info;
  f.regs.assign(info.regs, 0);
  for (size_t i = 0; i < args.size() && i < info.fn->params.size(); ++i)
    f.regs[i] = truncate_to(info.fn->params[i], args[i]);
  t.stack.push_back(std::move(f));
  return t;
}

uint64_t Executor::eval(const ThreadState &t, const Frame &f,
                        const Value &v) const {
  switch (v.kind) {
  case Value::Kind::Temp:
    return f.regs[v.num];
  case Value::Kind::Imm:
    return v.num;
  case Value::Kind::Global:
    return env_.global_address(t, v.name);
  case Value::Kind::Undef:
  case Value::Kind::Str:
    return 0;
  }
  return 0;
}

void Executor::enter(ThreadState &t, Frame &f, size_t from, size_t to) {
  const ir::Block &block = f.fn->fn->blocks[to];
  const std::string &pred = f.fn->fn->blocks[from].label;
  // Phis read their operands before any of them is written.
  std::vector<std::pair<int64_t, uint64_t>> writes;
  size_t ip = 0;
  for (; ip < block.instrs.size() && block.instrs[ip].op == Opcode::Phi; ++ip) {
    const Instr &phi = block.instrs[ip];
    size_t k = 0;
    while (k < phi.labels.size() && phi.labels[k] != pred)
      ++k;
    if (k == phi.labels.size())
      throw Trap{"IllegalInstruction",
                 "phi in @" + f.fn->fn->name + " has no entry for " + pred};
    writes.emplace_back(phi.result,
                        truncate_to(phi.type, eval(t, f, phi.args[k])));
  }
  for (auto &[r, v] : writes)
    f.regs[r] = v;
  t.instructions += ip;
  f.block = to;
  f.ip = ip;
}

uint64_t Executor::atomic(ThreadState &t, std::string_view kind, Ty ty,
                          uint64_t ptr, uint64_t e, uint64_t d) {
  unsigned width = ir::ty_bytes(ty);
  uint64_t old = memory_.load(ptr, width, options_.check_uninit);
  e = truncate_to(ty, e);
  d = truncate_to(ty, d);
  uint64_t next = old;
  if (kind == "add")
    next = truncate_to(ty, old + e);
  else if (kind == "max")
    next = less(ty, old, e) ? e : old;
  else if (kind == "min")
    next = less(ty, e, old) ? e : old;
  else if (kind == "xchg")
    next = e;
  else if (kind == "cas")
    next = old == e ? d : old;
  else if (kind == "inc")
    next = old >= e ? 0 : truncate_to(ty, old + 1);
  else
    throw Trap{"IllegalInstruction", "atomic." + std::string(kind)};
  memory_.store(ptr, width, next);
  std::ostringstream os;
  os << kind << ' ' << memory_.describe(ptr) << ' ' << old << ' ' << next;
  env_.event(t, "atomic", os.str());
  return old;
}

StepResult Executor::step(ThreadState &t) {
  Frame &f = t.stack.back();
  const ir::Function &fn = *f.fn->fn;
  const ir::Block &block = fn.blocks[f.block];
  if (f.ip >= block.instrs.size())
    throw Trap{"IllegalInstruction", "fell off block " + block.label +
                                         " in @" + fn.name};
  size_t index = f.ip++;
  const Instr &in = block.instrs[index];
  ++t.instructions;
  auto arg = [&](size_t i) { return eval(t, f, in.args.at(i)); };
  auto set = [&](uint64_t v) {
    if (in.result >= 0)
      f.regs[in.result] = v;
  };

  switch (in.op) {
  case Opcode::Add:
  case Opcode::Sub:
  case Opcode::Mul:
  case Opcode::Div:
  case Opcode::Rem:
  case Opcode::And:
  case Opcode::Or:
  case Opcode::Xor:
  case Opcode::Shl:
  case Opcode::Shr:
    set(binary(in.op, in.type, truncate_to(in.type, arg(0)),
               truncate_to(in.type, arg(1))));
    return StepResult::Continue;
  case Opcode::ICmp:
    set(compare(in.name, in.type, truncate_to(in.type, arg(0)),
                truncate_to(in.type, arg(1))));
    return StepResult::Continue;
  case Opcode::Conv:
    set(convert(in.from, in.type, arg(0)));
    return StepResult::Continue;
  case Opcode::Load:
    set(memory_.load(arg(0), ir::ty_bytes(in.type), options_.check_uninit));
    return StepResult::Continue;
  case Opcode::Store:
    memory_.store(arg(1), ir::ty_bytes(in.type),
                  truncate_to(in.type, arg(0)));
    return StepResult::Continue;
  case Opcode::Gep: {
    uint64_t p = arg(0);
    int64_t off = int64_t(Memory::offset_of(p)) +
                  int64_t(arg(1)) * int64_t(ir::ty_bytes(in.type));
    if (off < 0 || off > int64_t(UINT32_MAX))
      off = UINT32_MAX; // never a valid offset
    set(Memory::pointer(Memory::object_of(p), uint32_t(off)));
    return StepResult::Continue;
  }
  case Opcode::Alloca: {
    uint32_t obj = memory_.create("alloca." + fn.name,
                                  in.count * ir::ty_bytes(in.type));
    set(Memory::pointer(obj, 0));
    return StepResult::Continue;
  }
  case Opcode::Call: {
    if (t.stack.size() >= 4096)
      throw Trap{"StackOverflow", "call to @" + in.name};
    const FunctionInfo *callee = f.fn->callees[f.block][index];
    Frame next;
    next.fn = callee;
    next.regs.assign(callee->regs, 0);
    for (size_t i = 0; i < in.args.size() && i < callee->fn->params.size();
         ++i)
      next.regs[i] = truncate_to(callee->fn->params[i], arg(i));
    next.result = in.result;
    t.stack.push_back(std::move(next));
    return StepResult::Continue;
  }
  case Opcode::Atomic:
    set(atomic(t, in.name, in.type, arg(0), arg(1),
               in.args.size() > 2 ? arg(2) : 0));
    return StepResult::Continue;
  case Opcode::Intrinsic: {
    std::vector<uint64_t> args;
    for (size_t i = 0; i < in.args.size(); ++i)
      args.push_back(arg(i));
    std::optional<selectors::IntrinsicKind> kind = target_.lookup(in.name);
    if (!kind) {
      set(env_.extension(t, in, args));
      return StepResult::Continue;
    }
    using K = selectors::IntrinsicKind;
    switch (*kind) {
    case K::AtomicAdd:
      set(atomic(t, "add", Ty::U32, args.at(0), args.at(1), 0));
      break;
    case K::AtomicMax:
      set(atomic(t, "max", Ty::U32, args.at(0), args.at(1), 0));
      break;
    case K::AtomicMin:
      set(atomic(t, "min", Ty::U32, args.at(0), args.at(1), 0));
      break;
    case K::AtomicXchg:
      set(atomic(t, "xchg", Ty::U32, args.at(0), args.at(1), 0));
      break;
    case K::AtomicCas:
      set(atomic(t, "cas", Ty::U32, args.at(0), args.at(1), args.at(2)));
      break;
    case K::AtomicInc:
      set(atomic(t, "inc", Ty::U32, args.at(0), args.at(1), 0));
      break;
    case K::ThreadFence:
      if (!options_.sequential)
        env_.event(t, "fence", "seq_cst");
      break;
    case K::Barrier:
      if (!options_.sequential)
        return StepResult::Barrier;
      break;
    case K::ThreadId:
      set(t.ctx.thread);
      break;
    case K::TeamId:
      set(t.ctx.team);
      break;
    case K::NumThreads:
      set(t.ctx.threads);
      break;
    case K::NumTeams:
      set(t.ctx.teams);
      break;
    }
    return StepResult::Continue;
  }
  case Opcode::GridTeams:
  case Opcode::GridThreads:
  case Opcode::TgtTarget: {
    std::vector<uint64_t> args;
    for (size_t i = 0; i < in.args.size(); ++i)
      args.push_back(arg(i));
    set(env_.extension(t, in, args));
    return StepResult::Continue;
  }
  case Opcode::Phi:
    throw Trap{"IllegalInstruction", "phi after non-phi in @" + fn.name};
  case Opcode::Br: {
    const std::vector<size_t> &targets = f.fn->targets[f.block][index];
    enter(t, f, f.block, arg(0) ? targets.at(0) : targets.at(1));
    return StepResult::Continue;
  }
  case Opcode::Jmp:
    enter(t, f, f.block, f.fn->targets[f.block][index].at(0));
    return StepResult::Continue;
  case Opcode::Ret: {
    uint64_t v = in.args.empty() ? 0 : truncate_to(in.type, arg(0));
    int64_t result = f.result;
    t.stack.pop_back();
    if (t.stack.empty()) {
      t.ret = v;
      t.status = ThreadState::Status::Done;
      return StepResult::Finished;
    }
    if (result >= 0)
      t.stack.back().regs[result] = v;
    return StepResult::Continue;
  }
  case Opcode::Trap:
    throw Trap{in.name, "in @" + fn.name};
  }
  return StepResult::Continue;
}

uint64_t Executor::run(ThreadState &t) {
  while (step(t) != StepResult::Finished) {
  }
  return t.ret;
}

} // namespace forge::vgpu
