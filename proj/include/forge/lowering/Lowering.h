//===- forge/lowering/Lowering.h - Per-target specialization ---*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_LOWERING_LOWERING_H
#define FORGE_LOWERING_LOWERING_H

#include "forge/frontend/AST.h"
#include "forge/selectors/Target.h"

#include <map>
#include <string>

namespace forge::lowering {

enum class Space : uint8_t { global, team_shared };
enum class InitKind : uint8_t { zero, explicit_constant, none };

struct Placement {
  Space space = Space::global;
  InitKind init = InitKind::zero;

  bool operator==(const Placement &) const = default;
};

/// A module specialized for one target: variants resolved and renamed to their
/// mangled symbol, non-matching variants dropped, atomic constructs replaced by
/// AtomicIntrinsic statements, and a placement for every global.
struct SpecializedModule {
  frontend::SourceModule module;
  selectors::Arch arch = selectors::Arch::vgpu;
  std::map<std::string, Placement> placements;
  /// Base function name -> chosen variant symbol, for bases that were replaced.
  std::map<std::string, std::string> replacements;
};

Expected<SpecializedModule> specialize(const frontend::SourceModule &module,
                                       const selectors::TargetDesc &target);
Expected<SpecializedModule> specialize(const SpecializedModule &module,
                                       const selectors::TargetDesc &target);

/// Recognize one of the five canonical capture / compare-capture shapes.
/// Everything else, including the wrap-around increment, is NotRepresentable.
Expected<frontend::AtomicIntrinsic>
lower_atomic(const frontend::AtomicConstruct &construct, SourceLoc loc = {});

Expected<Placement> place_global(const frontend::GlobalDecl &global);

} // namespace forge::lowering

#endif // FORGE_LOWERING_LOWERING_H
