//===- tests/unit/DevicertTest.cpp - Device runtime tests ----------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "support/Oracles.h"
#include "support/TestSupport.h"

#include "forge/devicert/DeviceRuntime.h"

#include <random>

using namespace forge;
using selectors::Arch;
using test::bytes_of;
using test::values_of;
using vgpu::LaunchArg;

namespace {

const char *kReplay = R"(int32_t main() {
  uint32_t kind[64];
  uint64_t a[64];
  uint64_t b[64];
  uint64_t out[64];
  uint32_t n[1];
#pragma omp target
  {
    uint64_t offs[64];
    for (uint32_t i = 0; i < n[0]; i = i + 1) {
      if (kind[i] == 0) {
        offs[i] = __kmpc_alloc_shared(a[i]);
        out[i] = offs[i];
      } else {
        __kmpc_free_shared(offs[a[i]], b[i]);
        out[i] = 1;
      }
    }
  }
  return 0;
}
)";

struct Event {
  bool alloc;
  uint64_t a; // bytes, or index of the allocation to free
  uint64_t b; // bytes passed to free
};

struct Replay {
  std::vector<uint64_t> out;
  std::optional<std::string> trap;
};

Replay run_device(const std::vector<Event> &events) {
  std::vector<uint32_t> kind(64, 0);
  std::vector<uint64_t> a(64, 0), b(64, 0);
  for (size_t i = 0; i < events.size(); ++i) {
    kind[i] = events[i].alloc ? 0 : 1;
    a[i] = events[i].a;
    b[i] = events[i].b;
  }
  test::RegionRun r = test::run_region(
      kReplay, {},
      {{"kind", LaunchArg::make_buffer(bytes_of(kind))},
       {"a", LaunchArg::make_buffer(bytes_of(a))},
       {"b", LaunchArg::make_buffer(bytes_of(b))},
       {"n", LaunchArg::make_buffer(
                 bytes_of(std::vector<uint32_t>{uint32_t(events.size())}))}});
  Replay out;
  out.out = values_of<uint64_t>(r.buffers.at("out"));
  out.out.resize(events.size());
  if (r.result.trap)
    out.trap = r.result.trap->kind;
  return out;
}

Replay run_oracle(const std::vector<Event> &events) {
  oracle::BumpModel model;
  Replay out;
  out.out.assign(events.size(), 0);
  std::vector<uint64_t> offs(events.size(), 0);
  for (size_t i = 0; i < events.size(); ++i) {
    const Event &e = events[i];
    if (e.alloc) {
      std::optional<uint64_t> off = model.alloc(e.a);
      if (!off) {
        out.trap = "SharedOverflow";
        break;
      }
      offs[i] = out.out[i] = *off;
    } else {
      if (!model.free(offs[e.a], e.b)) {
        out.trap = "NonLIFOFree";
        break;
      }
      out.out[i] = 1;
    }
  }
  return out;
}

void check_replay(const std::vector<Event> &events) {
  Replay device = run_device(events);
  Replay expected = run_oracle(events);
  CHECK(device.trap == expected.trap);
  CHECK(device.out == expected.out);
}

} // namespace

TEST_CASE("shared allocation examples") {
  check_replay({{true, 16, 0}, {true, 8, 0}});
  CHECK(run_device({{true, 16, 0}, {true, 8, 0}}).out ==
        std::vector<uint64_t>{0, 16});
  CHECK(run_device({{true, 1, 0}, {true, 8, 0}}).out ==
        std::vector<uint64_t>{0, 8});
  CHECK(run_device({{true, 65537, 0}}).trap == "SharedOverflow");
  CHECK(run_device({{true, 65536, 0}}).out == std::vector<uint64_t>{0});
  CHECK(run_device({{true, 8, 0}, {true, 8, 0}, {false, 0, 8}}).trap ==
        "NonLIFOFree");
  CHECK(run_device({{true, 8, 0}, {true, 8, 0}, {false, 1, 8}, {false, 0, 8},
                    {true, 24, 0}})
            .out == std::vector<uint64_t>{0, 8, 1, 1, 0});
}

TEST_CASE("shared allocation matches the bump model") {
  std::mt19937_64 rng(20260101);
  for (int round = 0; round < 60; ++round) {
    std::vector<Event> events;
    std::vector<size_t> live; // event indices of live allocations
    std::vector<uint64_t> sizes(64, 0);
    size_t n = 1 + rng() % 40;
    for (size_t i = 0; i < n; ++i) {
      unsigned pick = rng() % 10;
      if (live.empty() || pick < 5) {
        uint64_t bytes = pick == 0 ? 1 + rng() % 70000 : 1 + rng() % 4000;
        sizes[i] = bytes;
        events.push_back({true, bytes, 0});
        live.push_back(i);
      } else if (pick < 9) {
        events.push_back({false, live.back(), sizes[live.back()]});
        live.pop_back();
      } else {
        // Any live allocation, so usually out of order.
        size_t k = rng() % live.size();
        events.push_back({false, live[k], sizes[live[k]]});
        live.erase(live.begin() + k);
      }
    }
    CAPTURE(round);
    check_replay(events);
  }
}

TEST_CASE("only thread 0 may allocate") {
  test::RegionRun r = test::run_region(R"(int32_t main() {
  uint64_t out[2];
#pragma omp target teams num_teams(1) thread_limit(2)
  {
    out[omp_thread_id()] = __kmpc_alloc_shared(8);
  }
  return 0;
}
)",
                                       {1, 2, 3}, {});
  REQUIRE(r.result.trap);
  CHECK(r.result.trap->kind == "InvalidCaller");
  CHECK(r.result.trap->thread == 1);
}

TEST_CASE("static worksharing") {
  const char *text = R"(int32_t main() {
  int64_t in[4];
  int64_t out[3];
#pragma omp target
  {
    int64_t bounds[2];
    out[0] = __kmpc_for_static_init(in[0], in[1], in[2], in[3], bounds);
    out[1] = bounds[0];
    out[2] = bounds[1];
  }
  return 0;
}
)";
  test::RegionKernel kernel(text);
  auto chunk = [&](int64_t lb, int64_t ub, int64_t tid, int64_t n) {
    test::RegionRun r = kernel.launch(
        {}, {{"in", LaunchArg::make_buffer(
                        bytes_of(std::vector<int64_t>{lb, ub, tid, n}))}});
    if (r.result.trap)
      FAIL(r.result.trap->kind << ": " << r.result.trap->detail);
    return values_of<int64_t>(r.buffers.at("out"));
  };
  CHECK(chunk(0, 99, 1, 4) == std::vector<int64_t>{1, 25, 49});
  CHECK(chunk(0, 9, 3, 4) == std::vector<int64_t>{1, 9, 9});
  CHECK(chunk(0, 9, 3, 5) == std::vector<int64_t>{1, 6, 7});
  CHECK(chunk(0, 2, 3, 4)[0] == 0);

  std::mt19937_64 rng(99);
  for (int round = 0; round < 40; ++round) {
    uint32_t n = 1 + rng() % 32;
    int64_t lb = int64_t(rng() % 2001) - 1000;
    int64_t ub = lb + int64_t(rng() % 1000);
    std::vector<int> owners(size_t(ub - lb + 1), 0);
    for (uint32_t t = 0; t < n; ++t) {
      std::vector<int64_t> got = chunk(lb, ub, t, n);
      std::vector<int64_t> mine = oracle::static_chunk(lb, ub, t, n);
      CAPTURE(lb);
      CAPTURE(ub);
      CAPTURE(t);
      CAPTURE(n);
      if (mine.empty()) {
        CHECK(got[0] == 0);
        continue;
      }
      REQUIRE(got[0] == 1);
      CHECK(got[1] == mine.front());
      CHECK(got[2] == mine.back());
      for (int64_t i = got[1]; i <= got[2]; ++i)
        ++owners[size_t(i - lb)];
    }
    for (int c : owners)
      CHECK(c == 1);
  }
}

TEST_CASE("atomic_inc agrees with the wrapping increment") {
  const char *text = R"(int32_t main() {
  uint32_t x[1];
  uint32_t e[1];
  uint32_t old[1];
#pragma omp target
  { old[0] = atomic_inc(x, e[0]); }
  return 0;
}
)";
  test::RegionKernel kernel(text);
  auto run = [&](uint32_t x, uint32_t e) {
    auto one = [](uint32_t v) {
      return LaunchArg::make_buffer(bytes_of(std::vector<uint32_t>{v}));
    };
    test::RegionRun r = kernel.launch({}, {{"x", one(x)}, {"e", one(e)}});
    return std::make_pair(values_of<uint32_t>(r.buffers.at("old"))[0],
                          values_of<uint32_t>(r.buffers.at("x"))[0]);
  };
  CHECK(run(5, 5) == std::make_pair(5u, 0u));
  CHECK(run(3, 5) == std::make_pair(3u, 4u));
  const uint32_t max = 0xFFFFFFFFu;
  std::vector<uint32_t> xs = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13,
                              max - 1, max};
  std::vector<uint32_t> es = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13,
                              max - 1, max};
  int checks = 0;
  for (uint32_t e : es)
    for (uint32_t x : xs) {
      CAPTURE(x);
      CAPTURE(e);
      CHECK(run(x, e) == oracle::inc(x, e));
      ++checks;
    }
  // Every x0 in [0, e] returns to x0 after e + 1 increments.
  for (uint32_t e = 0; e <= 12; ++e)
    for (uint32_t x0 = 0; x0 <= e; ++x0) {
      uint32_t x = x0;
      for (uint32_t k = 0; k <= e; ++k)
        x = run(x, e).second;
      CHECK(x == x0);
      ++checks;
    }
  CHECK(checks >= 256 + 91);
}

TEST_CASE("compare-based atomics") {
  const char *text = R"(int32_t main() {
  uint32_t x[3] = {7, 9, 4};
  uint32_t v[4];
#pragma omp target
  {
    v[0] = atomic_max(x, 3);
    v[1] = atomic_cas(x + 1, 9, 2);
    v[2] = atomic_cas(x + 2, 5, 1);
    v[3] = atomic_min(x + 2, 1);
  }
  return 0;
}
)";
  test::RegionRun r = test::run_region(
      text, {},
      {{"x", LaunchArg::make_buffer(bytes_of(std::vector<uint32_t>{7, 9, 4}))}});
  CHECK(values_of<uint32_t>(r.buffers.at("x")) ==
        std::vector<uint32_t>{7, 2, 1});
  CHECK(values_of<uint32_t>(r.buffers.at("v")) ==
        std::vector<uint32_t>{7, 9, 4, 4});
}

TEST_CASE("one fence per flush") {
  const char *text = R"(int32_t main() {
  uint32_t x[1];
#pragma omp target teams num_teams(1) thread_limit(3)
  {
    __kmpc_flush(0);
    x[0] = 1;
    __kmpc_flush(0);
  }
  return 0;
}
)";
  for (Arch a : {Arch::vgpu, Arch::amdgcn, Arch::nvptx64}) {
    ir::Module m = test::device_ir(text, a);
    CHECK(test::count_ops(m, ir::Opcode::Intrinsic,
                          selectors::target_desc(a).intrinsic_table.at(
                              selectors::IntrinsicKind::ThreadFence)) == 1);
  }
  test::RegionRun r = test::run_region(text, {1, 3, 5}, {});
  size_t fences = 0;
  for (const vgpu::TraceEvent &e : r.result.trace)
    fences += e.kind == "fence";
  CHECK(fences == 6);
}

TEST_CASE("thread queries and atomic totals") {
  const char *text = R"(int32_t main() {
  uint32_t ids[24];
  uint32_t total[1];
#pragma omp target teams num_teams(3) thread_limit(8)
  {
    uint32_t g = omp_team_id() * omp_num_threads() + omp_thread_id();
    ids[g] = omp_num_teams() * 1000 + omp_team_id() * 100 + omp_thread_id();
    atomic_add(total, g + 1);
  }
  return 0;
}
)";
  for (uint64_t seed : {0, 1, 17}) {
    test::RegionRun r = test::run_region(text, {3, 8, seed}, {});
    REQUIRE_FALSE(r.result.trap);
    std::vector<uint32_t> ids = values_of<uint32_t>(r.buffers.at("ids"));
    for (uint32_t t = 0; t < 3; ++t)
      for (uint32_t i = 0; i < 8; ++i)
        CHECK(ids[t * 8 + i] == 3000 + t * 100 + i);
    CHECK(values_of<uint32_t>(r.buffers.at("total"))[0] == 300);
  }
}

TEST_CASE("runtime images") {
  for (Arch a : {Arch::amdgcn, Arch::nvptx, Arch::nvptx64, Arch::vgpu,
                 Arch::host}) {
    ir::Module m = test::take(devicert::runtime_ir(selectors::target_desc(a)));
    CHECK(m.target == a);
    CHECK(m.find_function("__kmpc_alloc_shared"));
    CHECK(m.find_function("atomic_add"));
    // Host threads run one at a time; its atomics are plain accesses.
    CHECK(test::count_ops(m, ir::Opcode::Atomic) == (a == Arch::host ? 0 : 5));
    CHECK(test::take(ir::parse_module(ir::print_module(m))).functions.size() ==
          m.functions.size());
  }
  CHECK(devicert::runtime_signatures().count("atomic_inc"));
  CHECK(devicert::runtime_signatures().count("__kmpc_for_static_init"));
}
