#include "hddr/rng.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

using namespace hddr;

// Known-answer vectors published with the reference Philox implementation.
TEST_CASE("philox4x32-10 known answers") {
  CHECK(philox4x32_10({0, 0, 0, 0}, {0, 0}) ==
        PhiloxCounter{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32_10({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        PhiloxCounter{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32_10({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        PhiloxCounter{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("stream draws are the documented Philox blocks") {
  const std::uint64_t key = 0x0123456789abcdefULL;
  const std::uint64_t id = 0x00000002'00000007ULL;
  PhiloxStream s(key, id);
  for (std::uint32_t block = 0; block < 3; ++block) {
    const PhiloxCounter c =
        philox4x32_10({block, 0, 0x00000007, 0x00000002}, {0x89abcdef, 0x01234567});
    CHECK(s() == ((std::uint64_t{c[1]} << 32) | c[0]));
    CHECK(s() == ((std::uint64_t{c[3]} << 32) | c[2]));
  }
}

TEST_CASE("derive_seed is a single keyed block") {
  const PhiloxCounter c = philox4x32_10({5, 0, 1, 0x5eed}, {42, 0});
  CHECK(derive_seed(42, 5, 1) == ((std::uint64_t{c[1]} << 32) | c[0]));

  std::set<std::uint64_t> seen;
  for (std::uint64_t rep = 0; rep < 200; ++rep) {
    for (std::uint32_t purpose = 0; purpose < 3; ++purpose) seen.insert(derive_seed(7, rep, purpose));
  }
  CHECK(seen.size() == 600);
  CHECK(derive_seed(7, 3, 0) != derive_seed(8, 3, 0));
}

TEST_CASE("streams are reproducible and independent of each other") {
  PhiloxStream a(99, 0), b(99, 0), c(99, 1);
  std::vector<double> va, vb, vc;
  for (int i = 0; i < 100; ++i) {
    va.push_back(a.normal());
    vb.push_back(b.normal());
    vc.push_back(c.normal());
  }
  CHECK(va == vb);
  CHECK(va != vc);
}

TEST_CASE("uniform draws lie strictly inside (0, 1) with the right moments") {
  PhiloxStream s(2024, 3);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, lo = 1.0, hi = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = s.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
    sum2 += u * u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  const double mean = sum / n;
  // Four standard errors.
  CHECK(std::abs(mean - 0.5) < 4.0 * std::sqrt(1.0 / 12.0 / n));
  CHECK(std::abs(sum2 / n - mean * mean - 1.0 / 12.0) < 0.002);
}

TEST_CASE("normal draws have standard moments") {
  PhiloxStream s(11, 0);
  const int n = 200000;
  double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
  int tail = 0;
  for (int i = 0; i < n; ++i) {
    const double z = s.normal();
    sum += z;
    sum2 += z * z;
    sum4 += z * z * z * z;
    if (std::abs(z) > 1.959963984540054) ++tail;
  }
  CHECK(std::abs(sum / n) < 4.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 4.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(sum4 / n - 3.0) < 4.0 * std::sqrt(96.0 / n));
  CHECK(std::abs(tail / double(n) - 0.05) < 4.0 * std::sqrt(0.05 * 0.95 / n));
}

TEST_CASE("below is unbiased over a small range") {
  PhiloxStream s(5, 5);
  const int bound = 7, n = 70000;
  std::vector<int> counts(bound, 0);
  for (int i = 0; i < n; ++i) {
    const auto k = s.below(bound);
    REQUIRE(k < static_cast<std::uint64_t>(bound));
    ++counts[k];
  }
  double chi2 = 0.0;
  const double expected = double(n) / bound;
  for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 0.999 quantile of chi-square with 6 degrees of freedom.
  CHECK(chi2 < 22.458);
  CHECK(s.below(1) == 0);
}
