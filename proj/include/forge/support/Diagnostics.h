//===- forge/support/Diagnostics.h - Diagnostics and Expected --*- C++ -*-===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#ifndef FORGE_SUPPORT_DIAGNOSTICS_H
#define FORGE_SUPPORT_DIAGNOSTICS_H

#include <cassert>
#include <ostream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace forge {

struct SourceLoc {
  unsigned line = 0;
  unsigned column = 0;
};

/// Coarse classification used by the driver and by tests that need to tell
/// failure modes apart without matching message text.
enum class DiagKind {
  Parse,
  Semantic,
  Ambiguous,
  NotRepresentable,
  MissingIntrinsic,
  Link,
  Bundle,
  Launch,
  Io,
};

struct Diagnostic {
  DiagKind kind = DiagKind::Parse;
  SourceLoc loc;
  std::string message;
};

using DiagnosticList = std::vector<Diagnostic>;

/// Render as `file:line:col: error: message`, one diagnostic per line.
void print_diagnostics(std::ostream &os, const std::string &file,
                       const DiagnosticList &diags);

inline Diagnostic make_diag(DiagKind kind, std::string message,
                            SourceLoc loc = {}) {
  return Diagnostic{kind, loc, std::move(message)};
}

/// Either a value or a non-empty list of diagnostics.
template <typename T> class [[nodiscard]] Expected {
public:
  Expected(T value) : storage_(std::move(value)) {}
  Expected(Diagnostic diag) : storage_(DiagnosticList{std::move(diag)}) {}
  Expected(DiagnosticList diags) : storage_(std::move(diags)) {
    assert(!std::get<DiagnosticList>(storage_).empty());
  }

  explicit operator bool() const { return std::holds_alternative<T>(storage_); }
  bool ok() const { return static_cast<bool>(*this); }

  T &operator*() & { return std::get<T>(storage_); }
  const T &operator*() const & { return std::get<T>(storage_); }
  T &&operator*() && { return std::get<T>(std::move(storage_)); }
  T *operator->() { return &std::get<T>(storage_); }
  const T *operator->() const { return &std::get<T>(storage_); }

  const DiagnosticList &diags() const {
    return std::get<DiagnosticList>(storage_);
  }
  DiagnosticList take_diags() && {
    return std::get<DiagnosticList>(std::move(storage_));
  }

private:
  std::variant<T, DiagnosticList> storage_;
};

/// Value-less result: empty list means success.
class [[nodiscard]] Status {
public:
  Status() = default;
  Status(Diagnostic diag) : diags_{std::move(diag)} {}
  Status(DiagnosticList diags) : diags_(std::move(diags)) {}

  static Status success() { return {}; }
  explicit operator bool() const { return diags_.empty(); }
  bool ok() const { return diags_.empty(); }
  const DiagnosticList &diags() const { return diags_; }
  DiagnosticList take_diags() && { return std::move(diags_); }

private:
  DiagnosticList diags_;
};

} // namespace forge

#endif // FORGE_SUPPORT_DIAGNOSTICS_H
