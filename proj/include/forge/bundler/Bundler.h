//===- forge/bundler/Bundler.h - Offload bundle container ------*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//
//
// Layout, all integers little-endian:
//
//   "OMPBNDL1"  u32 entry-count
//   entry-count x { u32 name-length, name, u64 payload-length, payload }
//
// The first entry is named "host" and holds the serialized host program.
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_BUNDLER_BUNDLER_H
#define FORGE_BUNDLER_BUNDLER_H

#include "forge/support/Diagnostics.h"

#include <string>
#include <string_view>
#include <vector>

namespace forge::bundler {

inline constexpr std::string_view kMagic = "OMPBNDL1";
inline constexpr std::string_view kHostEntry = "host";

struct Entry {
  std::string target;
  std::string payload;

  bool operator==(const Entry &) const = default;
};

struct Bundle {
  /// Host entry first.
  std::vector<Entry> entries;

  const Entry *find(std::string_view target) const;
  const std::string &host() const { return entries.front().payload; }

  bool operator==(const Bundle &) const = default;
};

Expected<std::string> bundle(std::string host,
                             std::vector<Entry> images);
Expected<std::string> write_bundle(const Bundle &b);
Expected<Bundle> unbundle(std::string_view bytes);

} // namespace forge::bundler

#endif // FORGE_BUNDLER_BUNDLER_H
