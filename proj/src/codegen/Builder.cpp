//===- codegen/Builder.cpp - SSA function builder ------------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "Builder.h"

#include <cassert>
#include <set>

namespace forge::codegen {

using ir::Instr;
using ir::Opcode;
using ir::Value;

FunctionBuilder::FunctionBuilder(std::string name, std::vector<ir::Ty> params,
                                 ir::Ty ret, bool kernel)
    : name_(std::move(name)), params_(std::move(params)), ret_(ret),
      kernel_(kernel), next_temp_(static_cast<int64_t>(params_.size())) {
  create_block();
  seal(0);
}

int FunctionBuilder::create_block() {
  blocks_.emplace_back();
  return static_cast<int>(blocks_.size() - 1);
}

void FunctionBuilder::ensure_open() {
  if (!blocks_[current_].terminated)
    return;
  // Code after a terminator is unreachable; give it a block of its own.
  current_ = create_block();
  seal(current_);
}

Value FunctionBuilder::emit(Instr in) {
  ensure_open();
  in.result = next_temp_++;
  Value v = Value::temp(in.result);
  blocks_[current_].instrs.push_back(std::move(in));
  return v;
}

void FunctionBuilder::emit_void(Instr in) {
  ensure_open();
  in.result = -1;
  blocks_[current_].instrs.push_back(std::move(in));
}

void FunctionBuilder::add_edge(int from, int to) {
  assert(!blocks_[to].sealed && "edge into a sealed block");
  blocks_[to].preds.push_back(from);
}

void FunctionBuilder::jmp(int target) {
  ensure_open();
  Instr in;
  in.op = Opcode::Jmp;
  in.labels = {"#" + std::to_string(target)};
  blocks_[current_].instrs.push_back(std::move(in));
  blocks_[current_].terminated = true;
  add_edge(current_, target);
}

void FunctionBuilder::br(Value cond, int if_true, int if_false) {
  ensure_open();
  Instr in;
  in.op = Opcode::Br;
  in.args = {cond};
  in.labels = {"#" + std::to_string(if_true), "#" + std::to_string(if_false)};
  blocks_[current_].instrs.push_back(std::move(in));
  blocks_[current_].terminated = true;
  add_edge(current_, if_true);
  if (if_false != if_true)
    add_edge(current_, if_false);
}

void FunctionBuilder::ret(std::optional<Value> value, ir::Ty type) {
  ensure_open();
  Instr in;
  in.op = Opcode::Ret;
  if (value) {
    in.type = type;
    in.args = {*value};
  }
  blocks_[current_].instrs.push_back(std::move(in));
  blocks_[current_].terminated = true;
}

void FunctionBuilder::trap(const std::string &kind) {
  ensure_open();
  Instr in;
  in.op = Opcode::Trap;
  in.name = kind;
  blocks_[current_].instrs.push_back(std::move(in));
  blocks_[current_].terminated = true;
}

int FunctionBuilder::new_var(ir::Ty type) {
  var_types_.push_back(type);
  return static_cast<int>(var_types_.size() - 1);
}

void FunctionBuilder::write(int var, int block, Value value) {
  blocks_[block].defs[var] = std::move(value);
}

Value FunctionBuilder::read(int var, int block) {
  auto it = blocks_[block].defs.find(var);
  if (it != blocks_[block].defs.end())
    return it->second;
  return read_recursive(var, block);
}

int64_t FunctionBuilder::new_phi(int block, int var) {
  int64_t t = next_temp_++;
  Phi phi;
  phi.block = block;
  phi.var = var;
  phi.type = var_types_[var];
  phis_[t] = phi;
  blocks_[block].phis.push_back(t);
  return t;
}

Value FunctionBuilder::read_recursive(int var, int block) {
  BlockState &b = blocks_[block];
  Value v;
  if (!b.sealed) {
    int64_t t = new_phi(block, var);
    blocks_[block].incomplete[var] = t;
    v = Value::temp(t);
  } else if (b.preds.empty()) {
    v = Value::undef();
  } else if (b.preds.size() == 1) {
    v = read(var, b.preds.front());
  } else {
    int64_t t = new_phi(block, var);
    write(var, block, Value::temp(t));
    add_phi_operands(t);
    v = Value::temp(t);
  }
  write(var, block, v);
  return v;
}

void FunctionBuilder::add_phi_operands(int64_t t) {
  Phi &phi = phis_[t];
  std::vector<int> preds = blocks_[phi.block].preds;
  int var = phi.var;
  for (int p : preds) {
    Value v = read(var, p);
    Phi &again = phis_[t];
    again.ops.push_back(v);
    again.preds.push_back(p);
  }
}

void FunctionBuilder::seal(int block) {
  BlockState &b = blocks_[block];
  if (b.sealed)
    return;
  std::map<int, int64_t> pending = std::move(b.incomplete);
  blocks_[block].incomplete.clear();
  blocks_[block].sealed = true;
  for (const auto &[var, t] : pending)
    add_phi_operands(t);
}

Value FunctionBuilder::resolve(Value v) const {
  while (v.is_temp()) {
    auto it = replaced_.find(static_cast<int64_t>(v.num));
    if (it == replaced_.end())
      break;
    v = it->second;
  }
  return v;
}

ir::Function FunctionBuilder::finish() {
  for (size_t i = 0; i < blocks_.size(); ++i) {
    assert(blocks_[i].sealed && "unsealed block at finish");
    if (!blocks_[i].terminated) {
      current_ = static_cast<int>(i);
      if (ret_ == ir::Ty::Void)
        ret(std::nullopt, ret_);
      else
        ret(Value::imm(0), ret_);
    }
  }

  // Reachability from the entry block.
  std::vector<bool> live(blocks_.size(), false);
  std::vector<int> work = {0};
  live[0] = true;
  while (!work.empty()) {
    int b = work.back();
    work.pop_back();
    for (const Instr &in : blocks_[b].instrs)
      for (const std::string &l : in.labels) {
        int to = std::stoi(l.substr(1));
        if (!live[to]) {
          live[to] = true;
          work.push_back(to);
        }
      }
  }

  for (auto &[t, phi] : phis_) {
    if (!live[phi.block]) {
      phi.dead = true;
      continue;
    }
    std::vector<Value> ops;
    std::vector<int> preds;
    for (size_t i = 0; i < phi.ops.size(); ++i)
      if (live[phi.preds[i]]) {
        ops.push_back(phi.ops[i]);
        preds.push_back(phi.preds[i]);
      }
    phi.ops = std::move(ops);
    phi.preds = std::move(preds);
  }

  // Remove trivial phis until nothing changes.
  for (bool changed = true; changed;) {
    changed = false;
    for (auto &[t, phi] : phis_) {
      if (phi.dead)
        continue;
      std::optional<Value> same;
      bool trivial = true;
      for (const Value &op : phi.ops) {
        Value r = resolve(op);
        if (r == Value::temp(t) || (same && r == *same))
          continue;
        if (same) {
          trivial = false;
          break;
        }
        same = r;
      }
      if (!trivial)
        continue;
      replaced_[t] = same ? *same : Value::undef();
      phi.dead = true;
      changed = true;
    }
  }

  ir::Function f;
  f.name = name_;
  f.kernel = kernel_;
  f.params = params_;
  f.ret = ret_;

  std::map<int, std::string> labels;
  for (size_t i = 0, n = 0; i < blocks_.size(); ++i)
    if (live[i])
      labels[static_cast<int>(i)] = n++ == 0 ? "entry" : "L" + std::to_string(n - 1);

  std::map<int64_t, int64_t> renumber;
  int64_t next = static_cast<int64_t>(params_.size());
  for (int64_t i = 0; i < next; ++i)
    renumber[i] = i;
  auto number = [&](int64_t t) {
    if (!renumber.count(t))
      renumber[t] = next++;
  };
  for (size_t i = 0; i < blocks_.size(); ++i) {
    if (!live[i])
      continue;
    for (int64_t t : blocks_[i].phis)
      if (!phis_[t].dead)
        number(t);
    for (const Instr &in : blocks_[i].instrs)
      if (in.result >= 0)
        number(in.result);
  }
  auto fix = [&](Value v) {
    v = resolve(v);
    if (v.is_temp()) {
      auto it = renumber.find(static_cast<int64_t>(v.num));
      // A use whose definition was unreachable.
      if (it == renumber.end())
        return Value::undef();
      v.num = static_cast<uint64_t>(it->second);
    }
    return v;
  };

  for (size_t i = 0; i < blocks_.size(); ++i) {
    if (!live[i])
      continue;
    ir::Block block;
    block.label = labels[static_cast<int>(i)];
    for (int64_t t : blocks_[i].phis) {
      const Phi &phi = phis_[t];
      if (phi.dead)
        continue;
      Instr in;
      in.op = Opcode::Phi;
      in.result = renumber[t];
      in.type = phi.type;
      for (size_t k = 0; k < phi.ops.size(); ++k) {
        in.args.push_back(fix(phi.ops[k]));
        in.labels.push_back(labels[phi.preds[k]]);
      }
      block.instrs.push_back(std::move(in));
    }
    for (Instr in : blocks_[i].instrs) {
      if (in.result >= 0)
        in.result = renumber[in.result];
      for (Value &v : in.args)
        v = fix(v);
      for (std::string &l : in.labels)
        l = labels[std::stoi(l.substr(1))];
      block.instrs.push_back(std::move(in));
    }
    f.blocks.push_back(std::move(block));
  }
  return f;
}

} // namespace forge::codegen
