//===- bundler/Bundler.cpp - Offload bundle container --------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "forge/bundler/Bundler.h"

#include <set>

namespace forge::bundler {

namespace {

Diagnostic bundle_error(std::string message) {
  return make_diag(DiagKind::Bundle, std::move(message));
}

void put_le(std::string &out, uint64_t v, unsigned bytes) {
  for (unsigned i = 0; i < bytes; ++i)
    out.push_back(char(uint8_t(v >> (8 * i))));
}

class Reader {
public:
  explicit Reader(std::string_view data) : data_(data) {}

  bool read(uint64_t &v, unsigned bytes) {
    if (data_.size() - pos_ < bytes)
      return false;
    v = 0;
    for (unsigned i = 0; i < bytes; ++i)
      v |= uint64_t(uint8_t(data_[pos_ + i])) << (8 * i);
    pos_ += bytes;
    return true;
  }
  bool take(uint64_t n, std::string &out) {
    if (data_.size() - pos_ < n)
      return false;
    out.assign(data_.substr(pos_, n));
    pos_ += n;
    return true;
  }
  bool at_end() const { return pos_ == data_.size(); }

private:
  std::string_view data_;
  size_t pos_ = 0;
};

} // namespace

const Entry *Bundle::find(std::string_view target) const {
  for (const Entry &e : entries)
    if (e.target == target)
      return &e;
  return nullptr;
}

Expected<std::string> write_bundle(const Bundle &b) {
  if (b.entries.empty() || b.entries.front().target != kHostEntry)
    return bundle_error("MissingHost: the first entry must be 'host'");
  std::set<std::string_view> seen;
  for (const Entry &e : b.entries)
    if (!seen.insert(e.target).second)
      return bundle_error("DuplicateTarget: '" + e.target + "'");
  std::string out(kMagic);
  put_le(out, b.entries.size(), 4);
  for (const Entry &e : b.entries) {
    put_le(out, e.target.size(), 4);
    out += e.target;
    put_le(out, e.payload.size(), 8);
    out += e.payload;
  }
  return out;
}

Expected<std::string> bundle(std::string host, std::vector<Entry> images) {
  Bundle b;
  b.entries.push_back({std::string(kHostEntry), std::move(host)});
  for (Entry &e : images)
    b.entries.push_back(std::move(e));
  return write_bundle(b);
}

Expected<Bundle> unbundle(std::string_view bytes) {
  if (bytes.substr(0, kMagic.size()) != kMagic)
    return bundle_error("BadMagic: not an offload bundle");
  Reader r(bytes.substr(kMagic.size()));
  uint64_t count = 0;
  if (!r.read(count, 4))
    return bundle_error("Truncated: missing entry count");
  Bundle b;
  std::set<std::string> seen;
  for (uint64_t i = 0; i < count; ++i) {
    Entry e;
    uint64_t len = 0;
    if (!r.read(len, 4) || !r.take(len, e.target))
      return bundle_error("Truncated: entry " + std::to_string(i) + " name");
    if (!r.read(len, 8) || !r.take(len, e.payload))
      return bundle_error("Truncated: entry '" + e.target + "' payload");
    if (!seen.insert(e.target).second)
      return bundle_error("DuplicateTarget: '" + e.target + "'");
    b.entries.push_back(std::move(e));
  }
  if (!r.at_end())
    return bundle_error("TrailingBytes: data after the last entry");
  if (b.entries.empty() || b.entries.front().target != kHostEntry)
    return bundle_error("MissingHost: bundle has no host entry");
  return b;
}

} // namespace forge::bundler
