//===- codegen/Builder.h - SSA function builder ----------------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// On-the-fly SSA construction over structured control flow (Braun et al.,
// "Simple and Efficient Construction of Static Single Assignment Form").
// Local scalars never touch memory, so equivalent sources produce the same
// instruction sequence regardless of how temporaries were spelled.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_CODEGEN_BUILDER_H
#define FORGE_CODEGEN_BUILDER_H

#include "forge/ir/IR.h"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace forge::codegen {

class FunctionBuilder {
public:
  FunctionBuilder(std::string name, std::vector<ir::Ty> params, ir::Ty ret,
                  bool kernel);

  int create_block();
  int current() const { return current_; }
  void set_current(int block) { current_ = block; }
  void seal(int block);

  ir::Value param(unsigned i) const { return ir::Value::temp(i); }

  /// Append an instruction that produces a value.
  ir::Value emit(ir::Instr in);
  /// Append an instruction without a result.
  void emit_void(ir::Instr in);

  void jmp(int target);
  void br(ir::Value cond, int if_true, int if_false);
  void ret(std::optional<ir::Value> value, ir::Ty type);
  void trap(const std::string &kind);

  int new_var(ir::Ty type);
  void write(int var, ir::Value value) { write(var, current_, value); }
  ir::Value read(int var) { return read(var, current_); }

  /// Resolve phis, drop unreachable blocks, number temps and labels densely.
  ir::Function finish();

private:
  struct BlockState {
    std::vector<int64_t> phis;
    std::vector<ir::Instr> instrs;
    std::vector<int> preds;
    bool sealed = false;
    bool terminated = false;
    std::map<int, ir::Value> defs;
    std::map<int, int64_t> incomplete;
  };

  struct Phi {
    int block = 0;
    int var = 0;
    ir::Ty type = ir::Ty::I32;
    std::vector<ir::Value> ops;
    std::vector<int> preds;
    bool dead = false;
  };

  void ensure_open();
  void add_edge(int from, int to);
  void write(int var, int block, ir::Value value);
  ir::Value read(int var, int block);
  ir::Value read_recursive(int var, int block);
  int64_t new_phi(int block, int var);
  void add_phi_operands(int64_t phi);
  ir::Value resolve(ir::Value v) const;

  std::string name_;
  std::vector<ir::Ty> params_;
  ir::Ty ret_;
  bool kernel_;
  std::vector<BlockState> blocks_;
  int current_ = 0;
  int64_t next_temp_;
  std::vector<ir::Ty> var_types_;
  std::map<int64_t, Phi> phis_;
  std::map<int64_t, ir::Value> replaced_;
};

} // namespace forge::codegen

#endif // FORGE_CODEGEN_BUILDER_H
