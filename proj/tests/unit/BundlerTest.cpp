//===- tests/unit/BundlerTest.cpp - Bundle format tests ------------------===//
//
// SPDX-License-Identifier: Apache-2.0 WITH LLVM-exception
//
//===----------------------------------------------------------------------===//

#include "doctest.h"
#include "support/TestSupport.h"

#include "forge/bundler/Bundler.h"

#include <random>

using namespace forge;
using namespace forge::bundler;

namespace {

std::string le32(uint32_t v) {
  std::string s(4, '\0');
  for (int i = 0; i < 4; ++i)
    s[i] = char(v >> (8 * i));
  return s;
}

std::string le64(uint64_t v) {
  std::string s(8, '\0');
  for (int i = 0; i < 8; ++i)
    s[i] = char(v >> (8 * i));
  return s;
}

bool error_starts(const Expected<Bundle> &b, std::string_view prefix) {
  return !b && b.diags().front().message.rfind(prefix, 0) == 0;
}

} // namespace

TEST_CASE("layout") {
  std::string bytes = test::take(bundle("H", {{"vgpu", "ab"}}));
  std::string expected = std::string(kMagic) + le32(2) + le32(4) + "host" +
                         le64(1) + "H" + le32(4) + "vgpu" + le64(2) + "ab";
  CHECK(bytes == expected);
  Bundle b = test::take(unbundle(bytes));
  REQUIRE(b.entries.size() == 2);
  CHECK(b.host() == "H");
  REQUIRE(b.find("vgpu"));
  CHECK(b.find("vgpu")->payload == "ab");
  CHECK_FALSE(b.find("amdgcn"));
}

TEST_CASE("host only") {
  std::string bytes = test::take(bundle("", {}));
  CHECK(bytes == std::string(kMagic) + le32(1) + le32(4) + "host" + le64(0));
  Bundle b = test::take(unbundle(bytes));
  CHECK(b.entries.size() == 1);
  CHECK(b.host().empty());
}

TEST_CASE("errors") {
  CHECK_FALSE(bundle("h", {{"vgpu", "a"}, {"vgpu", "b"}}));
  CHECK_FALSE(bundle("h", {{"host", "a"}}));
  std::string good = test::take(bundle("h", {{"vgpu", "abc"}}));

  CHECK(error_starts(unbundle("OMPBNDL2" + good.substr(8)), "BadMagic"));
  CHECK(error_starts(unbundle(""), "BadMagic"));
  for (size_t n = 8; n < good.size(); ++n)
    CHECK(error_starts(unbundle(good.substr(0, n)), "Truncated"));
  CHECK(error_starts(unbundle(good + "x"), "TrailingBytes"));

  std::string no_host =
      std::string(kMagic) + le32(1) + le32(4) + "vgpu" + le64(0);
  CHECK(error_starts(unbundle(no_host), "MissingHost"));
  std::string dup = std::string(kMagic) + le32(3) + le32(4) + "host" +
                    le64(0) + le32(4) + "vgpu" + le64(0) + le32(4) + "vgpu" +
                    le64(0);
  CHECK(error_starts(unbundle(dup), "DuplicateTarget"));
  std::string huge =
      std::string(kMagic) + le32(1) + le32(4) + "host" + le64(~0ull);
  CHECK(error_starts(unbundle(huge), "Truncated"));
}

TEST_CASE("random bundles round trip") {
  std::mt19937_64 rng(314159);
  const std::vector<std::string> names = {"amdgcn", "nvptx", "nvptx64",
                                          "vgpu"};
  for (int round = 0; round < 40; ++round) {
    auto payload = [&] {
      size_t n = rng() % 4 == 0 ? rng() % (1u << 20) : rng() % 300;
      std::string s(n, '\0');
      for (char &c : s)
        c = char(rng());
      return s;
    };
    std::vector<Entry> images;
    for (const std::string &name : names)
      if (rng() % 2)
        images.push_back({name, payload()});
    std::shuffle(images.begin(), images.end(), rng);
    std::string host = payload();
    std::string bytes = test::take(bundle(host, images));
    Bundle b = test::take(unbundle(bytes));
    REQUIRE(b.entries.size() == images.size() + 1);
    CHECK(b.entries[0].target == kHostEntry);
    CHECK(b.host() == host);
    for (size_t i = 0; i < images.size(); ++i)
      CHECK(b.entries[i + 1] == images[i]);
    CHECK(test::take(write_bundle(b)) == bytes);
  }
}
