//===- tests/unit/VGpuTest.cpp - Simulated GPU tests ---------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "support/AtomicShapes.h"
#include "support/Linearizability.h"
#include "support/TestSupport.h"

using namespace forge;
using namespace forge::vgpu;
using selectors::Arch;
using test::bytes_of;
using test::values_of;

namespace {

const char *kCounter = R"(int32_t main() {
  uint32_t c[1];
#pragma omp target
  { atomic_add(c, 1); }
  return 0;
}
)";

} // namespace

TEST_CASE("memory") {
  Memory m;
  uint32_t a = m.create("a", 8);
  uint32_t b = m.create("b", 4, /*poison=*/true);
  CHECK(a != 0);
  m.store(Memory::pointer(a, 4), 4, 0xDEADBEEF);
  CHECK(m.load(Memory::pointer(a, 4), 4, true) == 0xDEADBEEF);
  CHECK(m.load(Memory::pointer(a, 0), 8, true) == 0xDEADBEEF00000000ull);
  CHECK(m.load(Memory::pointer(b, 0), 1, false) == kPoisonByte);
  CHECK_THROWS_AS(m.load(Memory::pointer(b, 0), 1, true), Trap);
  m.store(Memory::pointer(b, 0), 2, 7);
  CHECK(m.load(Memory::pointer(b, 0), 2, true) == 7);
  CHECK_THROWS_AS(m.load(Memory::pointer(b, 1), 2, true), Trap);
  CHECK_THROWS_AS(m.load(Memory::pointer(a, 5), 4, false), Trap);
  CHECK_THROWS_AS(m.load(0, 4, false), Trap);
  CHECK_THROWS_AS(m.store(Memory::pointer(99, 0), 4, 0), Trap);
  try {
    m.load(Memory::pointer(a, 8), 1, false);
  } catch (const Trap &t) {
    CHECK(t.kind == "OutOfBounds");
  }
  size_t n = m.size();
  m.create("c", 1);
  m.truncate(n);
  CHECK(m.size() == n);

  CHECK(truncate_to(ir::Ty::U32, 0x1FFFFFFFFull) == 0xFFFFFFFFu);
  CHECK(sign_extend(ir::Ty::I32, 0xFFFFFFFFu) == -1);
  CHECK(sign_extend(ir::Ty::I64, 5) == 5);
  CHECK(sign_extend(ir::Ty::I32, 0x80000000u) == INT32_MIN);
}

TEST_CASE("concurrent increments of one counter") {
  test::RegionKernel k(kCounter);
  for (uint64_t seed = 0; seed < 64; ++seed) {
    test::RegionRun r = k.launch({2, 4, seed}, {});
    REQUIRE_FALSE(r.result.trap);
    CHECK(values_of<uint32_t>(r.buffers.at("c"))[0] == 8);
  }
  test::RegionRun big = k.launch({16, 64, 3}, {});
  CHECK(values_of<uint32_t>(big.buffers.at("c"))[0] == 1024);
}

TEST_CASE("wrapping increment under contention") {
  test::RegionKernel k(R"(int32_t main() {
  uint32_t x[1];
  uint32_t old[4];
#pragma omp target
  { old[omp_thread_id()] = atomic_inc(x, 2); }
  return 0;
}
)");
  for (uint64_t seed = 0; seed < 30; ++seed) {
    test::RegionRun r = k.launch({1, 4, seed}, {});
    std::vector<uint32_t> old = values_of<uint32_t>(r.buffers.at("old"));
    std::sort(old.begin(), old.end());
    CHECK(old == std::vector<uint32_t>{0, 0, 1, 2});
    CHECK(values_of<uint32_t>(r.buffers.at("x"))[0] == 1);
  }
}

TEST_CASE("atomics are linearizable") {
  test::LinearizabilityReport r = test::check_linearizability(
      {{1, 2}, {1, 4}, {2, 2}, {2, 4}}, 3, 20);
  CHECK(r.runs == 4 * 3 * 20);
  CHECK(r.failures == 0);
  // The scheduler does produce different interleavings.
  CHECK(r.distinct > 12);
}

TEST_CASE("a lost update is not linearizable") {
  // Plain read-modify-write, for contrast with the runtime atomics.
  test::RegionKernel k(R"(int32_t main() {
  uint32_t c[1];
#pragma omp target
  {
    uint32_t v = c[0];
    v = v + 1;
    c[0] = v;
  }
  return 0;
}
)");
  bool lost = false;
  for (uint64_t seed = 0; seed < 64 && !lost; ++seed)
    lost = values_of<uint32_t>(k.launch({1, 8, seed}, {}).buffers.at("c"))[0] <
           8;
  CHECK(lost);
}

TEST_CASE("uninitialized reads") {
  const char *text = R"(#pragma omp begin declare target
uint32_t u[2] [[loader_uninitialized]];
#pragma omp allocate(u) allocator(omp_pteam_mem_alloc)
#pragma omp end declare target
int32_t main() {
  uint32_t out[1];
#pragma omp target
  { out[0] = u[1]; }
  return 0;
}
)";
  test::RegionKernel k(text);
  GridConfig grid;
  grid.check_uninit = true;
  test::RegionRun checked = k.launch(grid, {});
  REQUIRE(checked.result.trap);
  CHECK(checked.result.trap->kind == "UninitializedRead");
  test::RegionRun plain = k.launch({}, {});
  CHECK_FALSE(plain.result.trap);
  CHECK(values_of<uint32_t>(plain.buffers.at("out"))[0] == 0xAAAAAAAAu);
}

TEST_CASE("barriers") {
  test::RegionKernel full(R"(int32_t main() {
  uint32_t a[8];
  uint32_t b[8];
#pragma omp target
  {
    uint32_t t = omp_thread_id();
    uint32_t n = omp_num_threads();
    a[t] = t + 1;
    __kmpc_barrier(0);
    b[t] = a[(t + 1) % n];
  }
  return 0;
}
)");
  for (uint64_t seed = 0; seed < 20; ++seed) {
    test::RegionRun r = full.launch({1, 8, seed}, {});
    REQUIRE_FALSE(r.result.trap);
    CHECK(values_of<uint32_t>(r.buffers.at("b")) ==
          std::vector<uint32_t>{2, 3, 4, 5, 6, 7, 8, 1});
    size_t arrivals = 0;
    for (const TraceEvent &e : r.result.trace)
      arrivals += e.kind == "barrier";
    CHECK(arrivals == 8);
  }

  test::RegionKernel partial(R"(int32_t main() {
  uint32_t a[1];
#pragma omp target
  {
    if (omp_thread_id() != 0)
      __kmpc_barrier(0);
  }
  return 0;
}
)");
  test::RegionRun r = partial.launch({2, 4, 5}, {});
  REQUIRE(r.result.trap);
  CHECK(r.result.trap->kind == "Deadlock");
}

TEST_CASE("fixed seeds are deterministic") {
  test::RegionKernel k(test::kAtomicProgram);
  std::map<std::string, LaunchArg> args = {
      {"code", LaunchArg::make_buffer(bytes_of(std::vector<uint32_t>(64, 4)))},
      {"e", LaunchArg::make_buffer(bytes_of(std::vector<uint32_t>(64, 3)))},
      {"k", LaunchArg::make_buffer(bytes_of(std::vector<uint32_t>{4}))}};
  for (uint64_t seed : {0, 7, 123}) {
    test::RegionRun a = k.launch({2, 8, seed}, args);
    test::RegionRun b = k.launch({2, 8, seed}, args);
    CHECK(a.result == b.result);
    CHECK(format_trace(a.result.trace) == format_trace(b.result.trace));
  }
}

TEST_CASE("instruction counts do not depend on the schedule") {
  test::RegionKernel k(kCounter);
  uint64_t first = k.launch({2, 4, 0}, {}).result.instruction_count;
  CHECK(first > 0);
  for (uint64_t seed = 1; seed < 16; ++seed)
    CHECK(k.launch({2, 4, seed}, {}).result.instruction_count == first);
}

TEST_CASE("atomic constructs cost what the intrinsic costs") {
  const selectors::TargetDesc &t = selectors::target_desc(Arch::vgpu);
  for (const test::CanonicalShape &s : test::canonical_shapes()) {
    CAPTURE(s.function);
    test::RegionKernel omp(test::twin_program(s, t, false));
    test::RegionKernel intr(test::twin_program(s, t, true));
    CHECK(intr.image().find_function("f$ompvariant$arch_vgpu"));
    test::RegionRun a = omp.launch({2, 4, 1}, {});
    test::RegionRun b = intr.launch({2, 4, 1}, {});
    CHECK(a.result.instruction_count == b.result.instruction_count);
    CHECK(a.buffers == b.buffers);
  }
}

TEST_CASE("traps") {
  test::RegionRun oob = test::run_region(R"(int32_t main() {
  uint32_t a[4];
  uint32_t i[1];
#pragma omp target
  { a[i[0]] = 1; }
  return 0;
}
)",
                                         {},
                                         {{"i", LaunchArg::make_buffer(bytes_of(
                                                    std::vector<uint32_t>{4}))}});
  REQUIRE(oob.result.trap);
  CHECK(oob.result.trap->kind == "OutOfBounds");

  test::RegionRun div = test::run_region(R"(int32_t main() {
  uint32_t a[1];
#pragma omp target
  { a[0] = 5 / a[0]; }
  return 0;
}
)",
                                         {}, {});
  REQUIRE(div.result.trap);
  CHECK(div.result.trap->kind == "DivideByZero");

  test::RegionRun user = test::run_region(R"(int32_t main() {
  uint32_t a[1];
#pragma omp target teams num_teams(1) thread_limit(4)
  {
    if (omp_thread_id() == 2)
      trap("Custom");
  }
  return 0;
}
)",
                                          {1, 4, 0}, {});
  REQUIRE(user.result.trap);
  CHECK(user.result.trap->kind == "Custom");
  CHECK(user.result.trap->thread == 2);
}

TEST_CASE("launch validation") {
  ir::Module image = test::device_ir(kCounter, Arch::vgpu);
  std::vector<LaunchArg> args = {LaunchArg::make_buffer({0, 0, 0, 0})};
  CHECK(launch(image, "__omp_offload_0", {1, 1, 0}, args));
  CHECK_FALSE(launch(image, "__omp_offload_0", {0, 1, 0}, args));
  CHECK_FALSE(launch(image, "__omp_offload_0", {1, kMaxGridDim + 1, 0}, args));
  CHECK(launch(image, "__omp_offload_0", {1, kMaxGridDim, 0}, args));
  CHECK_FALSE(launch(image, "__omp_offload_9", {}, args));
  CHECK_FALSE(launch(image, "atomic_add", {}, args));
  CHECK_FALSE(launch(image, "__omp_offload_0", {}, {}));
  CHECK_FALSE(launch(image, "__omp_offload_0", {}, {LaunchArg::make_scalar(1)}));

  CHECK_FALSE(Device::load(test::device_ir(kCounter, Arch::amdgcn)));
}

TEST_CASE("device globals persist across launches") {
  const char *text = R"(#pragma omp begin declare target
uint32_t hits[1] = {0};
#pragma omp end declare target
int32_t main() {
  uint32_t out[1];
#pragma omp target
  { out[0] = atomic_add(hits, 1); }
  return 0;
}
)";
  ir::Module image = test::device_ir(text, Arch::vgpu);
  std::unique_ptr<Device> dev = test::take(Device::load(image));
  std::vector<LaunchArg> args = {LaunchArg::make_buffer({0, 0, 0, 0})};
  for (uint32_t i = 0; i < 3; ++i) {
    ExecResult r = test::take(dev->launch("__omp_offload_0", {1, 2, i}, args));
    CHECK(values_of<uint32_t>(r.global_memory) ==
          std::vector<uint32_t>{2 * (i + 1)});
  }
}

TEST_CASE("trace format") {
  std::vector<TraceEvent> t = {{0, 1, 2, "fence", "seq_cst"},
                               {1, 0, 0, "atomic", "add 5+0 1 2"}};
  CHECK(format_trace(t) == "0 1 2 fence seq_cst\n1 0 0 atomic add 5+0 1 2\n");
  test::RegionRun r = test::run_region(kCounter, {1, 2, 0}, {});
  REQUIRE(r.result.trace.size() == 2);
  CHECK(r.result.trace[0].kind == "atomic");
  CHECK(r.result.trace[0].detail.rfind("add ", 0) == 0);
  CHECK(r.result.trace[1].seq == 1);
}
