//===- forge/ir/IR.h - Textual SSA intermediate representation -*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// The device and host images are IR modules. The text form is documented in
// docs/ir-format.md; print_module() and parse_module() are exact inverses. A
// `;` comment line before a function is kept as that function's comment.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_IR_IR_H
#define FORGE_IR_IR_H

#include "forge/selectors/Target.h"
#include "forge/support/Diagnostics.h"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge::ir {

enum class Ty : uint8_t { Void, I32, U32, I64, U64, Ptr };

std::string_view ty_name(Ty t);
std::optional<Ty> parse_ty(std::string_view s);
unsigned ty_bytes(Ty t);
bool ty_signed(Ty t);

struct Value {
  enum class Kind : uint8_t { Temp, Imm, Global, Undef, Str };
  Kind kind = Kind::Undef;
  uint64_t num = 0;  // temp id or immediate bits
  std::string name;  // global symbol or string literal

  static Value temp(uint64_t id) { return {Kind::Temp, id, {}}; }
  static Value imm(uint64_t bits) { return {Kind::Imm, bits, {}}; }
  static Value global(std::string n) { return {Kind::Global, 0, std::move(n)}; }
  static Value undef() { return {Kind::Undef, 0, {}}; }
  static Value str(std::string s) { return {Kind::Str, 0, std::move(s)}; }

  bool is_temp() const { return kind == Kind::Temp; }
  bool operator==(const Value &) const = default;
};

enum class Opcode : uint8_t {
  Add,
  Sub,
  Mul,
  Div,
  Rem,
  And,
  Or,
  Xor,
  Shl,
  Shr,
  ICmp,
  Conv,
  Load,
  Store,
  Gep,
  Alloca,
  Call,
  Intrinsic,
  Atomic,
  Phi,
  Br,
  Jmp,
  Ret,
  Trap,
  GridTeams,
  GridThreads,
  TgtTarget,
};

/// Kernel argument descriptor of a `tgt.target` instruction.
struct KernelArg {
  bool buffer = false;
  Ty type = Ty::U32;   // scalar type or buffer element type
  uint64_t count = 0;  // buffer element count
};

struct Instr {
  Opcode op = Opcode::Ret;
  /// Result temp, or -1.
  int64_t result = -1;
  /// Operation type: the value type for arithmetic, loads, stores, atomics,
  /// phis and returns; the element type for gep/alloca; the result type for
  /// calls and intrinsics; the destination type for conv.
  Ty type = Ty::Void;
  /// Source type of conv.
  Ty from = Ty::Void;
  /// Callee / intrinsic name / icmp predicate / atomic kind / trap kind.
  std::string name;
  std::vector<Value> args;
  /// Operand types for calls and intrinsics.
  std::vector<Ty> arg_types;
  /// Branch targets, or the incoming block of each phi operand.
  std::vector<std::string> labels;
  /// alloca element count, grid constant, or tgt.target kernel id.
  uint64_t count = 0;
  std::vector<KernelArg> kernel_args;

  bool operator==(const Instr &) const = default;
};

struct Block {
  std::string label;
  std::vector<Instr> instrs;
};

struct Function {
  std::string name;
  bool kernel = false;
  std::vector<Ty> params;
  Ty ret = Ty::Void;
  std::vector<Block> blocks;
  /// Free-form comment printed before the function (metadata; not compared).
  std::string comment;
};

enum class GlobalSpace : uint8_t { global, shared };
enum class GlobalInit : uint8_t { zero, none, explicit_values };

struct Global {
  std::string name;
  Ty type = Ty::U32;
  uint64_t count = 1;
  GlobalSpace space = GlobalSpace::global;
  GlobalInit init = GlobalInit::zero;
  std::vector<uint64_t> values; // explicit_values only

  uint64_t size_bytes() const { return count * ty_bytes(type); }
};

struct Module {
  selectors::Arch target = selectors::Arch::vgpu;
  std::vector<Global> globals;
  std::vector<Function> functions;
  /// Base name -> variant symbol for replaced bases (runtime images only).
  std::map<std::string, std::string> aliases;

  const Function *find_function(std::string_view name) const;
  Function *find_function(std::string_view name);
  const Global *find_global(std::string_view name) const;
};

std::string print_module(const Module &m);
Expected<Module> parse_module(std::string_view text);

/// Canonical text: comments dropped, variant-mangled names demangled,
/// functions and globals sorted by name, temps and labels renumbered densely
/// in order of appearance.
std::string normalize_ir(const Module &m);

struct Difference {
  std::string location;
  std::string left;
  std::string right;
};

struct DiffReport {
  bool semantically_equal = true;
  std::vector<Difference> differences;
};

/// Compare normalized texts line by line. Modules for different targets are
/// an error.
Expected<DiffReport> diff_ir(const Module &a, const Module &b);

} // namespace forge::ir

#endif // FORGE_IR_IR_H
