//===- tests/support/Oracles.h - Reference models for tests ----*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Small, deliberately naive models that the implementation is checked
// against. None of them share code with the library.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_TESTS_ORACLES_H
#define FORGE_TESTS_ORACLES_H

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace forge::oracle {

inline const std::vector<std::string> kArchNames = {"amdgcn", "nvptx",
                                                    "nvptx64", "vgpu", "host"};

/// Arch-list matching. mode: 0 default (all listed), 1 match_any,
/// 2 match_none.
inline bool selector(const std::vector<std::string> &archs, int mode,
                     const std::string &target) {
  bool any = false;
  bool all = true;
  for (const std::string &a : archs) {
    if (a == target)
      any = true;
    else
      all = false;
  }
  switch (mode) {
  case 0:
    return all;
  case 1:
    return any;
  default:
    return !any;
  }
}

/// All ordered sublists of the arch universe, in universe order, including
/// the empty one when `with_empty`.
inline std::vector<std::vector<std::string>> arch_sublists(bool with_empty) {
  std::vector<std::vector<std::string>> out;
  for (unsigned mask = with_empty ? 0 : 1; mask < (1u << kArchNames.size());
       ++mask) {
    std::vector<std::string> l;
    for (size_t i = 0; i < kArchNames.size(); ++i)
      if (mask & (1u << i))
        l.push_back(kArchNames[i]);
    out.push_back(l);
  }
  return out;
}

/// Old value and new value of one CUDA-style wrapping increment.
inline std::pair<uint32_t, uint32_t> inc(uint32_t x, uint32_t e) {
  return {x, x >= e ? 0 : x + 1};
}

/// Bump allocator replay: a list of ("alloc", bytes) / ("free", index of the
/// allocation) events. Returns offsets of allocations, or nullopt on the
/// first error.
struct BumpModel {
  uint64_t cursor = 0;
  uint64_t capacity = 65536;
  std::vector<std::pair<uint64_t, uint64_t>> live; // offset, rounded size

  std::optional<uint64_t> alloc(uint64_t bytes) {
    uint64_t size = 0;
    while (size < bytes)
      size += 8;
    if (cursor + size > capacity)
      return std::nullopt;
    uint64_t off = cursor;
    cursor += size;
    live.emplace_back(off, size);
    return off;
  }
  bool free(uint64_t offset, uint64_t bytes) {
    uint64_t size = 0;
    while (size < bytes)
      size += 8;
    if (live.empty() || live.back() != std::make_pair(offset, size))
      return false;
    live.pop_back();
    cursor = offset;
    return true;
  }
};

/// Iterations owned by `tid`, computed by dealing out iteration blocks one
/// at a time.
inline std::vector<int64_t> static_chunk(int64_t lb, int64_t ub,
                                         uint32_t tid, uint32_t n) {
  int64_t span = ub - lb + 1;
  int64_t chunk = span / n + (span % n != 0);
  std::vector<int64_t> mine;
  int64_t owner_start = lb;
  for (uint32_t t = 0; t < n; ++t) {
    for (int64_t i = owner_start; i < owner_start + chunk && i <= ub; ++i)
      if (t == tid)
        mine.push_back(i);
    owner_start += chunk;
  }
  return mine;
}

//===----------------------------------------------------------------------===//
// Sequential interleavings of per-thread atomic programs
//===----------------------------------------------------------------------===//

enum class Op { ADD, MAX, XCHG, CAS, INC };

struct AtomicOp {
  Op op;
  uint32_t e;
  uint32_t d = 0;
};

inline uint32_t apply(const AtomicOp &a, uint32_t &x) {
  uint32_t old = x;
  switch (a.op) {
  case Op::ADD:
    x = x + a.e;
    break;
  case Op::MAX:
    x = std::max(x, a.e);
    break;
  case Op::XCHG:
    x = a.e;
    break;
  case Op::CAS:
    if (x == a.e)
      x = a.d;
    break;
  case Op::INC:
    x = inc(x, a.e).second;
    break;
  }
  return old;
}

/// Outcome: per-thread list of returned old values, then the final value.
using Outcome = std::pair<std::vector<std::vector<uint32_t>>, uint32_t>;

/// Every outcome reachable by some interleaving that keeps each thread's
/// program order. Depth-first over which thread goes next.
inline std::set<Outcome>
all_interleavings(const std::vector<std::vector<AtomicOp>> &programs,
                  uint32_t x0) {
  std::set<Outcome> out;
  std::vector<size_t> pc(programs.size(), 0);
  std::vector<std::vector<uint32_t>> returns(programs.size());
  uint32_t x = x0;
  auto dfs = [&](auto &&self) -> void {
    bool progressed = false;
    for (size_t t = 0; t < programs.size(); ++t) {
      if (pc[t] == programs[t].size())
        continue;
      progressed = true;
      uint32_t saved = x;
      returns[t].push_back(apply(programs[t][pc[t]], x));
      ++pc[t];
      self(self);
      --pc[t];
      returns[t].pop_back();
      x = saved;
    }
    if (!progressed)
      out.insert({returns, x});
  };
  dfs(dfs);
  return out;
}

} // namespace forge::oracle

#endif // FORGE_TESTS_ORACLES_H
