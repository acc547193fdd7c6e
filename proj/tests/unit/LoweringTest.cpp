//===- tests/unit/LoweringTest.cpp - Specialization tests ----------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "support/AtomicShapes.h"
#include "support/TestSupport.h"

#include "forge/selectors/Selectors.h"

using namespace forge;
using namespace forge::frontend;
using forge::lowering::InitKind;
using forge::lowering::Placement;
using forge::lowering::Space;

namespace {

const AtomicConstruct *find_atomic(const StmtList &list) {
  for (const Stmt &s : list) {
    if (auto *a = std::get_if<AtomicConstruct>(&s.node))
      return a;
    if (auto *b = std::get_if<BlockStmt>(&s.node))
      if (const AtomicConstruct *a = find_atomic(b->body))
        return a;
  }
  return nullptr;
}

Expected<AtomicIntrinsic> lower(const test::AtomicShape &shape) {
  SourceModule m =
      test::parse(test::device_module(test::atomic_function("f", shape)));
  const FunctionDecl *f = m.find_function("f");
  REQUIRE(f);
  const AtomicConstruct *a = find_atomic(*f->body);
  REQUIRE(a);
  return lowering::lower_atomic(*a);
}

const char *kIncModule = R"(#pragma omp begin declare target
uint32_t atomic_inc(uint32_t *X, uint32_t E) {
  error("target dependent implementation missing");
  return 0;
}
#pragma omp begin declare variant match(device={arch(amdgcn)})
uint32_t atomic_inc(uint32_t *X, uint32_t E) {
  return __builtin_amdgcn_atomic_inc32(X, E);
}
#pragma omp end declare variant
#pragma omp begin declare variant match(device={arch(nvptx,nvptx64)}, \
                                        implementation={extension(match_any)})
uint32_t atomic_inc(uint32_t *X, uint32_t E) {
  return __nvvm_atom_inc_gen_ui(X, E);
}
#pragma omp end declare variant
uint32_t bump(uint32_t *X) { return atomic_inc(X, 7); }
#pragma omp end declare target
)";

std::string callee_of_bump(const lowering::SpecializedModule &spec) {
  const FunctionDecl *f = spec.module.find_function("bump");
  REQUIRE(f);
  const auto &ret = std::get<ReturnStmt>(f->body->front().node);
  return ret.value->text;
}

} // namespace

TEST_CASE("canonical atomic shapes lower") {
  for (const test::CanonicalShape &c : test::canonical_shapes()) {
    INFO(c.shape.block);
    AtomicIntrinsic a = test::take(lower(c.shape));
    CHECK(a.kind == c.kind);
    CHECK(a.ordering == MemoryOrder::seq_cst);
    CHECK(a.x.kind == ExprKind::Deref);
    CHECK(a.v.text == "V");
    CHECK(a.e.text == "E");
    CHECK(a.d.has_value() == (c.kind == AtomicKind::CAS));
  }
}

TEST_CASE("the increment shape is not representable") {
  Expected<AtomicIntrinsic> a = lower(test::inc_shape());
  REQUIRE_FALSE(a);
  CHECK(a.diags().front().kind == DiagKind::NotRepresentable);
}

TEST_CASE("mutated shapes are rejected") {
  CHECK(test::mutated_shapes().size() >= 10);
  for (const test::AtomicShape &s : test::mutated_shapes()) {
    INFO(s.clauses << " " << s.block);
    Expected<AtomicIntrinsic> a = lower(s);
    REQUIRE_FALSE(a);
    CHECK(a.diags().front().kind == DiagKind::NotRepresentable);
  }
}

TEST_CASE("specialize propagates NotRepresentable") {
  SourceModule m = test::parse(
      test::device_module(test::atomic_function("f", test::inc_shape())));
  Expected<lowering::SpecializedModule> s = lowering::specialize(
      m, selectors::target_desc(selectors::Arch::vgpu));
  REQUIRE_FALSE(s);
  CHECK(s.diags().front().kind == DiagKind::NotRepresentable);
}

TEST_CASE("specialize rewires variant call sites") {
  SourceModule m = test::parse(kIncModule);
  using selectors::Arch;
  auto spec = [&](Arch a) {
    return test::take(lowering::specialize(m, selectors::target_desc(a)));
  };
  lowering::SpecializedModule nv = spec(Arch::nvptx64);
  std::string nv_callee = callee_of_bump(nv);
  CHECK(nv_callee.find("$ompvariant$") != std::string::npos);
  CHECK(selectors::demangle_variant(nv_callee) == "atomic_inc");
  CHECK(nv.replacements.at("atomic_inc") == nv_callee);
  CHECK(callee_of_bump(spec(Arch::nvptx)) == nv_callee);

  lowering::SpecializedModule amd = spec(Arch::amdgcn);
  CHECK(callee_of_bump(amd) != nv_callee);
  CHECK(amd.replacements.count("atomic_inc"));

  // No variant for vgpu: the error-raising base stays and specialization
  // itself succeeds.
  lowering::SpecializedModule v = spec(Arch::vgpu);
  CHECK(callee_of_bump(v) == "atomic_inc");
  CHECK(v.replacements.empty());
  size_t variants = 0;
  for (const Decl &d : v.module.declarations)
    if (auto *f = std::get_if<FunctionDecl>(&d); f && f->variant_of)
      ++variants;
  CHECK(variants == 0);
}

TEST_CASE("specialize without variants is the identity rewiring") {
  SourceModule m = test::parse(R"(#pragma omp begin declare target
uint32_t g(uint32_t a) { return a + 1; }
uint32_t f(uint32_t a) { return g(a); }
#pragma omp end declare target
)");
  for (selectors::Arch a : selectors::kAllArchs) {
    lowering::SpecializedModule s =
        test::take(lowering::specialize(m, selectors::target_desc(a)));
    CHECK(s.replacements.empty());
    CHECK(print_module(s.module) == print_module(m));
  }
}

TEST_CASE("specialize is idempotent") {
  std::vector<std::string> inputs = {kIncModule};
  for (const auto &p : test::corpus_files())
    inputs.push_back(test::read_file(p));
  for (const std::string &text : inputs)
    for (selectors::Arch a : selectors::kAllArchs) {
      const selectors::TargetDesc &t = selectors::target_desc(a);
      lowering::SpecializedModule once =
          test::take(lowering::specialize(test::parse(text), t));
      lowering::SpecializedModule twice =
          test::take(lowering::specialize(once, t));
      CHECK(print_module(once.module) == print_module(twice.module));
      CHECK(once.placements == twice.placements);
      CHECK(once.replacements == twice.replacements);
    }
}

TEST_CASE("global placement") {
  SourceModule m = test::parse(R"(#pragma omp begin declare target
int global_var;
int shared_var;
#pragma omp allocate(shared_var) allocator(omp_pteam_mem_alloc)
int cgroup_var;
#pragma omp allocate(cgroup_var) allocator(omp_cgroup_mem_alloc)
uint64_t arena[16] [[loader_uninitialized]];
#pragma omp allocate(arena) allocator(omp_pteam_mem_alloc)
uint32_t table[2] = {4, 5};
#pragma omp end declare target
)");
  auto place = [&](const char *name) {
    return test::take(lowering::place_global(*m.find_global(name)));
  };
  CHECK(place("global_var") == Placement{Space::global, InitKind::zero});
  CHECK(place("shared_var") == Placement{Space::team_shared, InitKind::zero});
  CHECK(place("cgroup_var") == place("shared_var"));
  CHECK(place("arena") == Placement{Space::team_shared, InitKind::none});
  CHECK(place("table") ==
        Placement{Space::global, InitKind::explicit_constant});

  GlobalDecl bad = *m.find_global("global_var");
  bad.loader_uninitialized = true;
  bad.initializer = {1};
  CHECK_FALSE(lowering::place_global(bad));
}
