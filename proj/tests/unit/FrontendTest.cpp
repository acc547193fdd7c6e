//===- tests/unit/FrontendTest.cpp - Parser and printer tests ------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "support/TestSupport.h"

#include "forge/devicert/DeviceRuntime.h"

#include <random>

using namespace forge;
using namespace forge::frontend;

namespace {

const char *kRuntimeExample = R"(#pragma omp begin declare target

// Function declaration
extern __kmpc_impl_threadfence();
// Function definition
void __kmpc_flush(kmp_Ident *loc) {
  __kmpc_impl_threadfence();
}
// Global variable
int global_var;
// Shared variable
int shared_var;
#pragma omp allocate(shared_var)          \
            allocator(omp_pteam_mem_alloc)
// Shared variable declaration
extern int other_shared_var;
#pragma omp allocate(other_shared_var)    \
            allocator(omp_pteam_mem_alloc)

#pragma omp end declare target
)";

bool has_message(const DiagnosticList &diags, std::string_view text) {
  for (const Diagnostic &d : diags)
    if (d.message.find(text) != std::string::npos)
      return true;
  return false;
}

std::string round_trip(std::string_view text) {
  return print_module(test::parse(text));
}

} // namespace

TEST_CASE("runtime example declarations") {
  SourceModule m = test::parse(kRuntimeExample);
  CHECK(m.function_count() == 2);
  CHECK(m.global_count() == 3);
  const GlobalDecl *shared = m.find_global("shared_var");
  REQUIRE(shared);
  CHECK(shared->allocator == Allocator::pteam);
  const GlobalDecl *other = m.find_global("other_shared_var");
  REQUIRE(other);
  CHECK(other->is_extern);
  CHECK(m.find_global("global_var")->allocator == Allocator::default_mem);
  CHECK(m.device_span.size() == m.declarations.size());
}

TEST_CASE("empty input") {
  SourceModule m = test::parse("");
  CHECK(m.declarations.empty());
  CHECK(m.target_regions.empty());
}

TEST_CASE("structural errors") {
  auto diags = [](std::string_view text) {
    Expected<SourceModule> m = parse_module(text);
    REQUIRE_FALSE(m);
    return m.diags();
  };
  CHECK(has_message(diags("#pragma omp begin declare target\nint x;\n"),
                    "unbalanced declare target"));
  CHECK(has_message(diags("#pragma omp end declare target\n"),
                    "unbalanced"));
  CHECK(has_message(diags("#pragma omp frobnicate\n"), "pragma"));
  CHECK(has_message(
      diags("int x;\n#pragma omp allocate(x) allocator(omp_pteam_mem_alloc)\n"),
      "declare target"));
  CHECK(has_message(diags(R"(#pragma omp begin declare target
uint32_t f(uint32_t a) { return a; }
#pragma omp begin declare variant match(device={arch(vgpu)})
uint64_t f(uint32_t a) { return a; }
#pragma omp end declare variant
#pragma omp end declare target
)"),
                    "signature"));
  Expected<SourceModule> m = parse_module("int x;\nint y = ;\n");
  REQUIRE_FALSE(m);
  CHECK(m.diags().front().loc.line == 2);
  CHECK(m.diags().front().loc.column > 0);
}

TEST_CASE("loader_uninitialized excludes an initializer") {
  Expected<SourceModule> m = parse_module(R"(#pragma omp begin declare target
uint32_t x [[loader_uninitialized]] = 3;
#pragma omp end declare target
)");
  CHECK_FALSE(m);
}

TEST_CASE("selector parsing") {
  selectors::ContextSelector a =
      test::take(parse_selector("device={arch(amdgcn)}"));
  REQUIRE(a.device_arch);
  CHECK(*a.device_arch == std::vector<std::string>{"amdgcn"});
  CHECK(a.extension == selectors::Extension::none);

  selectors::ContextSelector b = test::take(parse_selector(
      "device={arch(nvptx,nvptx64)}, implementation={extension(match_any)}"));
  CHECK(*b.device_arch == std::vector<std::string>{"nvptx", "nvptx64"});
  CHECK(b.extension == selectors::Extension::match_any);

  Expected<selectors::ContextSelector> empty = parse_selector("device={arch()}");
  REQUIRE_FALSE(empty);
  CHECK(has_message(empty.diags(), "empty arch list"));
  CHECK_FALSE(parse_selector("user={condition(1)}"));
  CHECK_FALSE(parse_selector(
      "device={arch(vgpu)}, implementation={extension(allow_templates)}"));
  CHECK_FALSE(parse_selector("implementation={extension(match_any)}"));
}

TEST_CASE("print round trip is a fixed point") {
  std::vector<std::string> inputs = {kRuntimeExample,
                                     std::string(devicert::runtime_source())};
  for (const auto &p : test::corpus_files())
    inputs.push_back(test::read_file(p));
  for (const std::string &text : inputs) {
    std::string once = round_trip(text);
    CHECK(round_trip(once) == once);
  }
}

TEST_CASE("random directive nesting is accepted exactly when balanced") {
  enum Marker { BeginTarget, EndTarget, BeginVariant, EndVariant };
  std::mt19937 rng(1234);
  for (int iter = 0; iter < 400; ++iter) {
    std::vector<Marker> seq;
    int len = int(rng() % 7);
    for (int i = 0; i < len; ++i)
      seq.push_back(Marker(rng() % 4));
    // Oracle: a stack of open region kinds.
    std::vector<Marker> stack;
    bool ok = true;
    for (Marker m : seq) {
      if (m == BeginTarget || m == BeginVariant) {
        stack.push_back(m);
        continue;
      }
      Marker open = m == EndTarget ? BeginTarget : BeginVariant;
      if (stack.empty() || stack.back() != open) {
        ok = false;
        break;
      }
      stack.pop_back();
    }
    ok = ok && stack.empty();

    std::string text;
    int counter = 0;
    for (Marker m : seq) {
      switch (m) {
      case BeginTarget:
        text += "#pragma omp begin declare target\n";
        break;
      case EndTarget:
        text += "#pragma omp end declare target\n";
        break;
      case BeginVariant:
        text += "#pragma omp begin declare variant match(device={arch(vgpu)})\n";
        break;
      case EndVariant:
        text += "#pragma omp end declare variant\n";
        break;
      }
      text += "// " + std::to_string(counter++) + "\n";
    }
    Expected<SourceModule> m = parse_module(text);
    INFO(text);
    CHECK(bool(m) == ok);
  }
}

TEST_CASE("target regions capture buffers and scalars in order") {
  SourceModule m = test::parse(R"(int32_t main() {
  uint32_t a[4];
  uint64_t b[2];
  uint32_t n = 4;
#pragma omp target teams num_teams(2) thread_limit(8)
  {
    a[0] = n;
    b[1] = a[0];
  }
  return 0;
}
)");
  REQUIRE(m.target_regions.size() == 1);
  const TargetRegion &r = m.target_regions[0];
  CHECK(r.id == 0);
  CHECK(r.num_teams == 2u);
  CHECK(r.thread_limit == 8u);
  REQUIRE(r.captured_args.size() == 3);
  CHECK(r.captured_args[0].name == "a");
  CHECK(r.captured_args[0].kind == CaptureKind::Buffer);
  CHECK(r.captured_args[0].element_count == 4);
  CHECK(r.captured_args[1].name == "n");
  CHECK(r.captured_args[1].kind == CaptureKind::Scalar);
  CHECK(r.captured_args[2].name == "b");
  CHECK(r.enclosing_function == "main");
}

TEST_CASE("variant regions record their base") {
  SourceModule m = test::parse(R"(#pragma omp begin declare target
uint32_t atomic_inc(uint32_t *X, uint32_t E) {
  error("target dependent implementation missing");
  return 0;
}
#pragma omp begin declare variant match(device={arch(amdgcn)})
uint32_t atomic_inc(uint32_t *X, uint32_t E) {
  return __builtin_amdgcn_atomic_inc32(X, E);
}
#pragma omp end declare variant
#pragma omp end declare target
)");
  size_t variants = 0;
  for (const Decl &d : m.declarations)
    if (auto *f = std::get_if<FunctionDecl>(&d); f && f->variant_of) {
      ++variants;
      CHECK(f->variant_of->base == "atomic_inc");
    }
  CHECK(variants == 1);
}
