//===- tests/unit/HostTest.cpp - Host runtime tests ----------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "support/TestSupport.h"

#include "forge/bundler/Bundler.h"
#include "forge/host/Host.h"

using namespace forge;
using namespace forge::host;
using selectors::Arch;

namespace {

bundler::Bundle compile(std::string_view text, std::vector<Arch> targets) {
  driver::CompileOutput out = test::take(driver::compile_source(text, targets));
  return test::take(bundler::unbundle(out.bundle));
}

RunResult run(std::string_view text, RunOptions opts = {},
              std::vector<Arch> targets = {Arch::vgpu}) {
  return test::take(run_bundle(compile(text, targets), opts));
}

std::string histogram_expected() {
  uint32_t bins[8] = {};
  uint32_t x = 12345;
  for (int i = 0; i < 128; ++i) {
    x = x * 1103515245u + 12345u;
    ++bins[(x >> 16) % 8];
  }
  std::string out;
  for (int i = 0; i < 8; ++i)
    out += "bin " + std::to_string(i) + " " + std::to_string(bins[i]) + "\n";
  return out;
}

std::string axpy_expected() {
  int32_t y[48];
  for (int i = 0; i < 48; ++i)
    y[i] = -3 * (i - 20) + (100 - 2 * i);
  int32_t sum = 0;
  for (int i = 0; i < 48; ++i)
    sum += (i + 1) * y[i];
  return "y[0] " + std::to_string(y[0]) + " y[47] " + std::to_string(y[47]) +
         " checksum " + std::to_string(sum) + "\n";
}

std::string extrema_expected() {
  uint32_t mx = 0, mn = UINT32_MAX;
  for (uint32_t i = 0; i < 96; ++i) {
    mx = std::max(mx, (i * 7919) % 1000);
    mn = std::min(mn, (i * 7919) % 1000);
  }
  return "max " + std::to_string(mx) + " min " + std::to_string(mn) + "\n";
}

const char *kCounter = R"(int32_t main() {
  uint32_t c[1] = {0};
#pragma omp target teams num_teams(2) thread_limit(4)
  { atomic_add(c, 1); }
  print("counter", c[0]);
  return 0;
}
)";

} // namespace

TEST_CASE("corpus programs print the expected output") {
  std::map<std::string, std::string> expected = {
      {"axpy.mc", axpy_expected()},
      {"collatz.mc", "steps 0 36 131 35\n"},
      {"counter.mc", "counter 8\n"},
      {"extrema.mc", extrema_expected()},
      {"histogram.mc", histogram_expected()},
      {"inc_ring.mc", "ring 1 0 1\n"},
      {"shared_alloc.mc", "offsets 0 16 56 0 16 57\n"},
      {"static_schedule.mc", "owner 0 0 1 2 3\nchunks 25 25 25 25\n"},
      {"team_sum.mc", "teams 36 72 108 144\n"},
      {"vector_add.mc", "sum 8128 c[63] 253\n"},
  };
  for (const auto &path : test::corpus_files()) {
    std::string name = path.filename().string();
    CAPTURE(name);
    REQUIRE(expected.count(name));
    bundler::Bundle b = compile(test::read_file(path), {Arch::vgpu, Arch::amdgcn});
    for (uint64_t seed : {0, 9}) {
      RunOptions opts;
      opts.sched_seed = seed;
      RunResult device = test::take(run_bundle(b, opts));
      CHECK(device.exit_status == 0);
      CHECK(device.output == expected[name]);
      for (int s : device.launch_statuses)
        CHECK(s == kLaunched);
    }
    RunOptions forced;
    forced.force_fail = true;
    RunResult fallback = test::take(run_bundle(b, forced));
    CHECK(fallback.output == expected[name]);
    for (int s : fallback.launch_statuses)
      CHECK(s == kNoImage);
    RunOptions amd;
    amd.device = Arch::amdgcn;
    CHECK(test::take(run_bundle(b, amd)).output == expected[name]);
  }
}

TEST_CASE("tgt_target statuses") {
  bundler::Bundle b = compile(kCounter, {Arch::vgpu, Arch::amdgcn});
  codegen::HostProgram host =
      test::take(codegen::deserialize_host_program(b.host()));
  const codegen::TargetCall &call = host.target_calls.at(0);
  auto status = [&](RunOptions opts, std::vector<uint8_t> &bytes) {
    OffloadRuntime rt(b, opts);
    std::vector<vgpu::LaunchArg> args = {vgpu::LaunchArg::make_buffer(bytes)};
    int s = test::take(rt.tgt_target(call, 2, 4, args));
    bytes = args[0].bytes;
    return s;
  };
  std::vector<uint8_t> bytes(4, 0);
  CHECK(status({}, bytes) == kLaunched);
  CHECK(test::values_of<uint32_t>(bytes)[0] == 8);

  RunOptions forced;
  forced.force_fail = true;
  std::vector<uint8_t> untouched(4, 0);
  CHECK(status(forced, untouched) == kNoImage);
  CHECK(untouched == std::vector<uint8_t>(4, 0));

  RunOptions amd;
  amd.device = Arch::amdgcn;
  CHECK(status(amd, untouched) == kNoImage);
  CHECK(untouched == std::vector<uint8_t>(4, 0));

  RunOptions nv;
  nv.device = Arch::nvptx64;
  CHECK(status(nv, untouched) == kNoImage);

  RunOptions on_host;
  on_host.device = Arch::host;
  CHECK(status(on_host, untouched) == kNoImage);
}

TEST_CASE("fallback runs every logical thread once") {
  RunOptions forced;
  forced.force_fail = true;
  RunResult r = run(kCounter, forced);
  CHECK(r.output == "counter 8\n");
  REQUIRE(r.buffers.size() == 1);
  CHECK(r.buffers[0].name == "c");
  CHECK(test::values_of<uint32_t>(r.buffers[0].bytes)[0] == 8);
  CHECK(r.device_instructions == 0);

  RunOptions grid;
  grid.teams = 3;
  grid.threads = 5;
  CHECK(run(kCounter, grid).output == "counter 15\n");
  grid.force_fail = true;
  CHECK(run(kCounter, grid).output == "counter 15\n");
}

TEST_CASE("device and fallback leave the same buffers") {
  for (const auto &path : test::corpus_files()) {
    CAPTURE(path.filename().string());
    bundler::Bundle b = compile(test::read_file(path), {Arch::vgpu});
    RunResult device = test::take(run_bundle(b, {}));
    RunOptions forced;
    forced.force_fail = true;
    RunResult fallback = test::take(run_bundle(b, forced));
    CHECK(device.buffers == fallback.buffers);
    CHECK(device.output == fallback.output);
  }
}

TEST_CASE("device traps stop the program") {
  const char *text = R"(int32_t main() {
  uint32_t a[4];
  print("before");
#pragma omp target teams num_teams(1) thread_limit(2)
  { a[omp_thread_id() + 3] = 1; }
  print("after");
  return 0;
}
)";
  RunResult r = run(text);
  CHECK(r.exit_status == 2);
  CHECK(r.output == "before\n");
  REQUIRE(r.trap);
  CHECK(r.trap->kind == "OutOfBounds");
  CHECK(r.launch_statuses == std::vector<int>{kDeviceTrap});
}

TEST_CASE("bundles without a host entry are rejected") {
  std::string bytes;
  bytes += bundler::kMagic;
  bytes += std::string("\x01\x00\x00\x00", 4);
  bytes += std::string("\x04\x00\x00\x00", 4) + "vgpu";
  bytes += std::string("\x00\x00\x00\x00\x00\x00\x00\x00", 8);
  CHECK_FALSE(run_bundle(bytes, {}));
  CHECK_FALSE(run_bundle(std::string_view("garbage"), {}));
}

TEST_CASE("host programs without regions") {
  RunResult r = run(R"(int32_t main() {
  uint64_t big = 18446744073709551615;
  int32_t neg = -5;
  print("values", big, neg, 3 / 2);
  return 0;
}
)");
  CHECK(r.output == "values 18446744073709551615 -5 1\n");
  CHECK(r.launch_statuses.empty());
  CHECK(r.buffers.empty());
}

TEST_CASE("default grid comes from the region clauses") {
  const char *text = R"(int32_t main() {
  uint32_t n[2];
#pragma omp target teams num_teams(3) thread_limit(7)
  {
    n[0] = omp_num_teams();
    n[1] = omp_num_threads();
  }
  print("grid", n[0], n[1]);
  return 0;
}
)";
  CHECK(run(text).output == "grid 3 7\n");
  RunOptions forced;
  forced.force_fail = true;
  CHECK(run(text, forced).output == "grid 3 7\n");
}
