#include "doctest.h"
#include "hbbm/rng.hpp"
#include "hbbm/stats.hpp"

#include <set>

using namespace hbbm;

TEST_CASE("Philox4x32-10 reproduces the published known-answer vectors") {
  using C = Philox4x32::Counter;
  using K = Philox4x32::Key;
  CHECK(Philox4x32::generate(C{0, 0, 0, 0}, K{0, 0}) ==
        C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32::generate(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                             K{0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32::generate(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                             K{0xa4093822u, 0x299f31d0u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("streams are pure functions of key and counter") {
  const Stream s = Stream::from_seed(42);
  CHECK(s.bits(Purpose::kStep, 7) == Stream::from_seed(42).bits(Purpose::kStep, 7));
  CHECK(s.bits(Purpose::kStep, 7) != s.bits(Purpose::kStep, 8));
  CHECK(s.bits(Purpose::kStep, 7) != s.bits(Purpose::kClock, 7));
  CHECK(s.bits(Purpose::kStep, 0) != Stream::from_seed(43).bits(Purpose::kStep, 0));
}

TEST_CASE("split and derive give distinct keys") {
  std::set<std::uint64_t> keys;
  Stream s = Stream::from_seed(1);
  for (int depth = 0; depth < 200; ++depth) {
    const auto [l, r] = s.split();
    keys.insert(l.key());
    keys.insert(r.key());
    keys.insert(s.derive(static_cast<std::uint64_t>(depth)).key());
    s = l;
  }
  CHECK(keys.size() == 600);
}

TEST_CASE("unit conversions respect their interval ends") {
  CHECK(to_unit(0) == 0.0);
  CHECK(to_unit(~0ull) < 1.0);
  CHECK(to_unit_open_low(0) > 0.0);
  CHECK(to_unit_open_low(~0ull) == 1.0);
  CHECK(to_unit_open(0) > 0.0);
  CHECK(to_unit_open(~0ull) < 1.0);
  CHECK(to_unit_open(0) == doctest::Approx(1.0 - to_unit_open(~0ull)).epsilon(1e-15));
}

TEST_CASE("normals have unit variance and no correlation between the pair") {
  CounterRng rng = CounterRng::from_seed(3);
  RunningStats a;
  RunningStats b;
  RunningStats prod;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const auto [g1, g2] = rng.normals();
    a.add(g1);
    b.add(g2);
    prod.add(g1 * g2);
  }
  CHECK(std::abs(a.mean()) < 4.0 / std::sqrt(n));
  CHECK(std::abs(b.mean()) < 4.0 / std::sqrt(n));
  CHECK(a.variance() == doctest::Approx(1.0).epsilon(0.015));
  CHECK(b.variance() == doctest::Approx(1.0).epsilon(0.015));
  CHECK(std::abs(prod.mean()) < 4.0 / std::sqrt(n));
}

TEST_CASE("exponential and Cauchy draws match their laws") {
  CounterRng rng = CounterRng::from_seed(5);
  std::vector<double> e;
  std::vector<double> c;
  for (int i = 0; i < 50000; ++i) {
    e.push_back(rng.exponential(2.0));
    c.push_back(rng.cauchy());
  }
  const double d_exp = ks_statistic(e, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-2.0 * x); });
  const double d_cau = ks_statistic(c, [](double x) { return 0.5 + std::atan(x) / std::numbers::pi; });
  CHECK(ks_pvalue(d_exp, e.size()) > 0.001);
  CHECK(ks_pvalue(d_cau, c.size()) > 0.001);
}

TEST_CASE("CounterRng advances one block per draw") {
  CounterRng rng(Stream(9), Purpose::kSample, 10);
  CHECK(rng.position() == 10);
  (void)rng.uniform();
  (void)rng.normals();
  CHECK(rng.position() == 12);
  CHECK(rng.next_u64() == Stream(9).bits(Purpose::kSample, 12)[0]);
}
