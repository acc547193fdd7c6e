//===- tests/unit/IRTest.cpp - IR text, normalization and diff tests -----===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "support/TestSupport.h"

#include "forge/devicert/DeviceRuntime.h"

using namespace forge;
using namespace forge::ir;
using selectors::Arch;

namespace {

const char *kSample = R"(; forge ir module
target vgpu
alias @f = @f$ompvariant$arch_vgpu
global @counter u32 x 1 global zero
global @table i32 x 3 global init 1 -2 3
global @scratch u64 x 4 shared none

; a comment
kernel @k(ptr %0, u32 %1) -> i64 {
entry:
  %2 = load u32 %0
  %3 = icmp lt u32 %2, %1
  br %3, L1, L2
L1:
  %4 = atomic.cas.seq_cst u32 %0, %2, %1
  %5 = conv u32 %4 to i64
  jmp L2
L2:
  %6 = phi i64 [0, entry], [%5, L1]
  %7 = gep i32 @table, 2
  %8 = alloca u64 x 2
  store u64 -1, %8
  %9 = call u32 @f$ompvariant$arch_vgpu(ptr %0)
  intrinsic void vgpu.barrier()
  ret i64 %6
}

func @f$ompvariant$arch_vgpu(ptr %0) -> u32 {
entry:
  %1 = intrinsic u32 vgpu.atomic.inc(ptr %0, u32 5)
  ret u32 %1
}
)";

Module parse_text(std::string_view text) { return test::take(parse_module(text)); }

} // namespace

TEST_CASE("print and parse are inverse") {
  Module m = parse_text(kSample);
  CHECK(m.target == Arch::vgpu);
  CHECK(m.globals.size() == 3);
  CHECK(m.globals[1].values.size() == 3);
  CHECK(m.aliases.at("f") == "f$ompvariant$arch_vgpu");
  REQUIRE(m.functions.size() == 2);
  CHECK(m.functions[0].kernel);
  std::string printed = print_module(m);
  CHECK(print_module(parse_text(printed)) == printed);
  CHECK(printed.find("store u64 18446744073709551615, %8") !=
        std::string::npos);
  CHECK(m.functions[0].comment == "a comment");
}

TEST_CASE("runtime and corpus IR round trip") {
  for (Arch a : selectors::kAllArchs) {
    Module rt = test::take(devicert::runtime_ir(selectors::target_desc(a)));
    std::string text = print_module(rt);
    CHECK(print_module(parse_text(text)) == text);
  }
  for (const auto &p : test::corpus_files()) {
    Module m = test::device_ir(test::read_file(p), Arch::vgpu);
    std::string text = print_module(m);
    CHECK(print_module(parse_text(text)) == text);
  }
}

TEST_CASE("malformed IR is rejected") {
  CHECK_FALSE(parse_module("target nowhere\n"));
  CHECK_FALSE(parse_module("target vgpu\nfunc @f() -> u32 {\nentry:\n"));
  CHECK_FALSE(parse_module(
      "target vgpu\nfunc @f() -> u32 {\nentry:\n  %1 = frob u32 1\n}\n"));
  CHECK_FALSE(parse_module("target vgpu\nglobal @g u7 x 1 global zero\n"));
}

TEST_CASE("normalization") {
  Module m = parse_text(kSample);
  std::string n = normalize_ir(m);
  CHECK(n.find("$ompvariant$") == std::string::npos);
  CHECK(n.find(';') == std::string::npos);
  CHECK(n.find("alias") == std::string::npos);
  // Idempotent on its own output.
  CHECK(normalize_ir(parse_text(n)) == n);
  // Functions sorted by name.
  CHECK(n.find("func @f(") < n.find("kernel @k("));
}

TEST_CASE("renumbering and mangling do not matter") {
  const char *a = R"(target vgpu
func @g(u32 %0) -> u32 {
entry:
  %5 = add u32 %0, 1
  %9 = call u32 @h$ompvariant$arch_vgpu(u32 %5)
  ret u32 %9
}
)";
  const char *b = R"(target vgpu
func @g(u32 %0) -> u32 {
entry:
  %1 = add u32 %0, 1
  %2 = call u32 @h(u32 %1)
  ret u32 %2
}
)";
  DiffReport r = test::take(diff_ir(parse_text(a), parse_text(b)));
  CHECK(r.semantically_equal);
  CHECK(r.differences.empty());
}

TEST_CASE("one opcode difference is reported once") {
  const char *add = R"(target vgpu
kernel @k(ptr %0) -> i64 {
entry:
  %1 = atomic.add.seq_cst u32 %0, 1
  ret i64 0
}
)";
  std::string xchg = add;
  xchg.replace(xchg.find("add"), 3, "xchg");
  DiffReport r = test::take(diff_ir(parse_text(add), parse_text(xchg)));
  CHECK_FALSE(r.semantically_equal);
  REQUIRE(r.differences.size() == 1);
  CHECK(r.differences[0].location.find("@k") != std::string::npos);
  CHECK(r.differences[0].left.find("atomic.add") != std::string::npos);
  CHECK(r.differences[0].right.find("atomic.xchg") != std::string::npos);
}

TEST_CASE("diff_ir is an equivalence on normalized text") {
  std::vector<Module> ms;
  for (const auto &p : test::corpus_files())
    ms.push_back(test::device_ir(test::read_file(p), Arch::vgpu));
  ms.push_back(ms.front());
  for (size_t i = 0; i < ms.size(); ++i) {
    CHECK(test::take(diff_ir(ms[i], ms[i])).semantically_equal);
    for (size_t j = 0; j < ms.size(); ++j) {
      bool ij = test::take(diff_ir(ms[i], ms[j])).semantically_equal;
      bool ji = test::take(diff_ir(ms[j], ms[i])).semantically_equal;
      CHECK(ij == ji);
      CHECK(ij == (normalize_ir(ms[i]) == normalize_ir(ms[j])));
      for (size_t k = 0; k < ms.size(); ++k)
        if (ij && test::take(diff_ir(ms[j], ms[k])).semantically_equal)
          CHECK(test::take(diff_ir(ms[i], ms[k])).semantically_equal);
    }
  }
}

TEST_CASE("modules for different targets cannot be compared") {
  Module a = parse_text("target vgpu\n");
  Module b = parse_text("target amdgcn\n");
  CHECK_FALSE(diff_ir(a, b));
}
