//===- forge/selectors/Target.h - Architectures and selectors --*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Target descriptions (architecture plus per-target intrinsic table) and the
// context selector that a `begin declare variant match(...)` region carries.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_SELECTORS_TARGET_H
#define FORGE_SELECTORS_TARGET_H

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace forge::selectors {

enum class Arch : uint8_t { amdgcn, nvptx, nvptx64, vgpu, host };

inline constexpr std::array<Arch, 5> kAllArchs = {
    Arch::amdgcn, Arch::nvptx, Arch::nvptx64, Arch::vgpu, Arch::host};

std::string_view arch_name(Arch arch);
std::optional<Arch> parse_arch(std::string_view name);

/// Operations a target provides through compiler intrinsics. The first five
/// are also produced by lowering OpenMP atomic constructs.
enum class IntrinsicKind : uint8_t {
  AtomicAdd,
  AtomicMax,
  AtomicMin,
  AtomicXchg,
  AtomicCas,
  AtomicInc,
  ThreadFence,
  Barrier,
  ThreadId,
  TeamId,
  NumThreads,
  NumTeams,
};

inline constexpr std::array<IntrinsicKind, 12> kAllIntrinsicKinds = {
    IntrinsicKind::AtomicAdd,  IntrinsicKind::AtomicMax,
    IntrinsicKind::AtomicMin,  IntrinsicKind::AtomicXchg,
    IntrinsicKind::AtomicCas,  IntrinsicKind::AtomicInc,
    IntrinsicKind::ThreadFence, IntrinsicKind::Barrier,
    IntrinsicKind::ThreadId,   IntrinsicKind::TeamId,
    IntrinsicKind::NumThreads, IntrinsicKind::NumTeams};

std::string_view intrinsic_kind_name(IntrinsicKind kind);

/// Number of value operands the intrinsic takes (the location counts as one).
unsigned intrinsic_arity(IntrinsicKind kind);
/// Whether the intrinsic produces a u32 result (all others return void).
bool intrinsic_has_result(IntrinsicKind kind);
/// True for the five kinds that have a target-independent IR opcode.
bool intrinsic_is_generic_atomic(IntrinsicKind kind);

struct TargetDesc {
  Arch arch = Arch::vgpu;
  /// Entries may be absent; codegen reports MissingIntrinsic for those.
  std::map<IntrinsicKind, std::string> intrinsic_table;
  uint64_t shared_space_capacity = 0;
  /// Only vgpu and host images can be executed in this toolchain.
  bool executable = false;

  std::optional<IntrinsicKind> lookup(std::string_view instruction) const;
};

/// Built-in description for an architecture.
const TargetDesc &target_desc(Arch arch);

/// The intrinsic kind and owning architectures of a builtin name, if any
/// built-in target table mentions it.
std::optional<IntrinsicKind> known_intrinsic(std::string_view name);

enum class Extension : uint8_t { none, match_any, match_none };

std::string_view extension_name(Extension ext);

struct ContextSelector {
  /// Absent when the selector has no device set.
  std::optional<std::vector<std::string>> device_arch;
  Extension extension = Extension::none;
  /// An `implementation={...}` set was written.
  bool has_implementation_set = false;

  bool operator==(const ContextSelector &) const = default;
};

/// Canonical `match(...)` contents, e.g. `device={arch(amdgcn)}`.
std::string to_string(const ContextSelector &sel);

} // namespace forge::selectors

#endif // FORGE_SELECTORS_TARGET_H
