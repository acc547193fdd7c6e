//===- selectors/Target.cpp - Built-in target descriptions ---------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/selectors/Target.h"

#include <sstream>

namespace forge::selectors {

std::string_view arch_name(Arch arch) {
  switch (arch) {
  case Arch::amdgcn:
    return "amdgcn";
  case Arch::nvptx:
    return "nvptx";
  case Arch::nvptx64:
    return "nvptx64";
  case Arch::vgpu:
    return "vgpu";
  case Arch::host:
    return "host";
  }
  return "?";
}

std::optional<Arch> parse_arch(std::string_view name) {
  for (Arch a : kAllArchs)
    if (arch_name(a) == name)
      return a;
  return std::nullopt;
}

std::string_view intrinsic_kind_name(IntrinsicKind kind) {
  switch (kind) {
  case IntrinsicKind::AtomicAdd:
    return "ADD";
  case IntrinsicKind::AtomicMax:
    return "MAX";
  case IntrinsicKind::AtomicMin:
    return "MIN";
  case IntrinsicKind::AtomicXchg:
    return "XCHG";
  case IntrinsicKind::AtomicCas:
    return "CAS";
  case IntrinsicKind::AtomicInc:
    return "INC";
  case IntrinsicKind::ThreadFence:
    return "THREADFENCE";
  case IntrinsicKind::Barrier:
    return "BARRIER";
  case IntrinsicKind::ThreadId:
    return "THREAD_ID";
  case IntrinsicKind::TeamId:
    return "TEAM_ID";
  case IntrinsicKind::NumThreads:
    return "NUM_THREADS";
  case IntrinsicKind::NumTeams:
    return "NUM_TEAMS";
  }
  return "?";
}

unsigned intrinsic_arity(IntrinsicKind kind) {
  switch (kind) {
  case IntrinsicKind::AtomicAdd:
  case IntrinsicKind::AtomicMax:
  case IntrinsicKind::AtomicMin:
  case IntrinsicKind::AtomicXchg:
  case IntrinsicKind::AtomicInc:
    return 2;
  case IntrinsicKind::AtomicCas:
    return 3;
  default:
    return 0;
  }
}

bool intrinsic_has_result(IntrinsicKind kind) {
  return kind != IntrinsicKind::ThreadFence && kind != IntrinsicKind::Barrier;
}

bool intrinsic_is_generic_atomic(IntrinsicKind kind) {
  switch (kind) {
  case IntrinsicKind::AtomicAdd:
  case IntrinsicKind::AtomicMax:
  case IntrinsicKind::AtomicMin:
  case IntrinsicKind::AtomicXchg:
  case IntrinsicKind::AtomicCas:
    return true;
  default:
    return false;
  }
}

std::optional<IntrinsicKind> TargetDesc::lookup(std::string_view name) const {
  for (const auto &[kind, instr] : intrinsic_table)
    if (instr == name)
      return kind;
  return std::nullopt;
}

namespace {

using K = IntrinsicKind;

TargetDesc make_nvptx(Arch arch) {
  TargetDesc t;
  t.arch = arch;
  t.shared_space_capacity = 96 * 1024;
  t.intrinsic_table = {
      {K::AtomicAdd, "__nvvm_atom_add_gen_i"},
      {K::AtomicMax, "__nvvm_atom_max_gen_ui"},
      {K::AtomicMin, "__nvvm_atom_min_gen_ui"},
      {K::AtomicXchg, "__nvvm_atom_xchg_gen_i"},
      {K::AtomicCas, "__nvvm_atom_cas_gen_i"},
      {K::AtomicInc, "__nvvm_atom_inc_gen_ui"},
      {K::ThreadFence, "__nvvm_membar_gl"},
      {K::Barrier, "__nvvm_barrier_sync"},
      {K::ThreadId, "__nvvm_read_ptx_sreg_tid_x"},
      {K::TeamId, "__nvvm_read_ptx_sreg_ctaid_x"},
      {K::NumThreads, "__nvvm_read_ptx_sreg_ntid_x"},
      {K::NumTeams, "__nvvm_read_ptx_sreg_nctaid_x"},
  };
  return t;
}

TargetDesc make_amdgcn() {
  TargetDesc t;
  t.arch = Arch::amdgcn;
  t.shared_space_capacity = 96 * 1024;
  t.intrinsic_table = {
      {K::AtomicAdd, "__hip_atomic_fetch_add"},
      {K::AtomicMax, "__hip_atomic_fetch_max"},
      {K::AtomicMin, "__hip_atomic_fetch_min"},
      {K::AtomicXchg, "__hip_atomic_exchange"},
      {K::AtomicCas, "__hip_atomic_compare_exchange"},
      {K::AtomicInc, "__builtin_amdgcn_atomic_inc32"},
      {K::ThreadFence, "__builtin_amdgcn_fence"},
      {K::Barrier, "__builtin_amdgcn_s_barrier"},
      {K::ThreadId, "__builtin_amdgcn_workitem_id_x"},
      {K::TeamId, "__builtin_amdgcn_workgroup_id_x"},
      {K::NumThreads, "__builtin_amdgcn_workgroup_size_x"},
      {K::NumTeams, "__builtin_amdgcn_num_workgroups_x"},
  };
  return t;
}

TargetDesc make_prefixed(Arch arch, const std::string &prefix, bool exec) {
  TargetDesc t;
  t.arch = arch;
  t.shared_space_capacity = 96 * 1024;
  t.executable = exec;
  t.intrinsic_table = {
      {K::AtomicAdd, prefix + ".atomic.add"},
      {K::AtomicMax, prefix + ".atomic.max"},
      {K::AtomicMin, prefix + ".atomic.min"},
      {K::AtomicXchg, prefix + ".atomic.xchg"},
      {K::AtomicCas, prefix + ".atomic.cas"},
      {K::AtomicInc, prefix + ".atomic.inc"},
      {K::ThreadFence, prefix + ".threadfence"},
      {K::Barrier, prefix + ".barrier"},
      {K::ThreadId, prefix + ".thread.id"},
      {K::TeamId, prefix + ".team.id"},
      {K::NumThreads, prefix + ".num.threads"},
      {K::NumTeams, prefix + ".num.teams"},
  };
  return t;
}

const std::array<TargetDesc, 5> &builtin_targets() {
  static const std::array<TargetDesc, 5> targets = {
      make_amdgcn(),
      make_nvptx(Arch::nvptx),
      make_nvptx(Arch::nvptx64),
      make_prefixed(Arch::vgpu, "vgpu", true),
      make_prefixed(Arch::host, "host", true),
  };
  return targets;
}

} // namespace

const TargetDesc &target_desc(Arch arch) {
  return builtin_targets()[static_cast<size_t>(arch)];
}

std::optional<IntrinsicKind> known_intrinsic(std::string_view name) {
  for (const TargetDesc &t : builtin_targets())
    if (auto k = t.lookup(name))
      return k;
  return std::nullopt;
}

std::string_view extension_name(Extension ext) {
  switch (ext) {
  case Extension::none:
    return "none";
  case Extension::match_any:
    return "match_any";
  case Extension::match_none:
    return "match_none";
  }
  return "?";
}

std::string to_string(const ContextSelector &sel) {
  std::ostringstream os;
  bool first = true;
  if (sel.device_arch) {
    os << "device={arch(";
    for (size_t i = 0; i < sel.device_arch->size(); ++i)
      os << (i ? "," : "") << (*sel.device_arch)[i];
    os << ")}";
    first = false;
  }
  if (sel.has_implementation_set) {
    if (!first)
      os << ", ";
    os << "implementation={";
    if (sel.extension != Extension::none)
      os << "extension(" << extension_name(sel.extension) << ")";
    os << "}";
  }
  return os.str();
}

} // namespace forge::selectors
