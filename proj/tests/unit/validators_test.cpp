#include "doctest.h"
#include "hbbm/analysis.hpp"
#include "replicate.hpp"

#include <cmath>
#include <numbers>

using namespace hbbm;

namespace {

SimConfig config(double beta, double dt, std::uint64_t seed) {
  SimConfig c;
  c.beta = beta;
  c.dt = dt;
  c.seed = seed;
  return c;
}

bool same(const ValidationReport& a, const ValidationReport& b) {
  return a.lhs == b.lhs && a.lhs_se == b.lhs_se && a.rhs == b.rhs && a.rhs_se == b.rhs_se &&
         a.z == b.z && a.extras == b.extras;
}

}  // namespace

TEST_CASE("many-to-one with f = 1 is close to the exact mean") {
  ManyToOneRun run;
  run.config = config(0.5, 0.05, 3);
  run.t = 2.0;
  run.runs = 4000;
  const auto r = validate_many_to_one(run);
  CHECK(r.rhs == 1.0);
  CHECK(r.rhs_se == 0.0);
  CHECK(std::abs(r.z) < 4.0);
  CHECK(r.extras.at("lhs_unscaled") == doctest::Approx(std::exp(1.0)).epsilon(0.05));
  CHECK(r.z == doctest::Approx((r.lhs - r.rhs) / r.lhs_se));
}

TEST_CASE("many-to-two trivial intervals") {
  ManyToTwoRun run;
  run.config = config(0.5, 0.05, 4);
  run.t = 1.0;
  run.runs = 500;
  SUBCASE("empty set") {
    run.interval.reset();
    const auto r = validate_many_to_two(run);
    CHECK(r.lhs == 0.0);
    CHECK(r.rhs == 0.0);
    CHECK(r.z == 0.0);
  }
  SUBCASE("whole line has the exact Yule second moment") {
    run.interval = LineInterval{};
    const auto r = validate_many_to_two(run);
    CHECK(r.rhs == doctest::Approx(2.0 - std::exp(-0.5)));
    CHECK(r.rhs_se == 0.0);
  }
}

TEST_CASE("harmonic martingale trivial intervals") {
  HarmonicRun run;
  run.config = config(0.5, 0.05, 5);
  run.t = 1.5;
  run.runs = 3000;
  SUBCASE("whole line") {
    run.interval = LineInterval{};
    const auto r = validate_harmonic_martingale(run);
    CHECK(r.rhs == 1.0);
    CHECK(std::abs(r.z) < 4.0);
  }
  SUBCASE("half line") {
    run.interval = LineInterval{0.0, std::numeric_limits<double>::infinity()};
    const auto r = validate_harmonic_martingale(run);
    CHECK(r.rhs == doctest::Approx(0.5));
    CHECK(std::abs(r.z) < 4.0);
  }
}

TEST_CASE("exit bound") {
  ExitBoundRun run;
  run.ys = {0.1, 0.3, 1.0, 3.0, 10.0};
  run.widths = {0.01, 0.03, 0.1, 0.3, 1.0};
  run.samples = 20000;
  const auto r = validate_exit_bound(run);
  CHECK(r.extras.at("sup_ratio_exact") <= 1.0 / std::numbers::pi + 0.02);
  CHECK(r.extras.at("sup_ratio_exact") > 0.3);
  CHECK(r.extras.at("saturation_probability") >= 0.999);
  CHECK(std::abs(r.z) < 4.0);
  CHECK(r.extras.at("scaling_exact") == doctest::Approx(2.0 / std::numbers::pi * std::atan(0.5)));
  run.ys = {-1.0};
  CHECK_THROWS_AS(validate_exit_bound(run), ConfigError);
}

TEST_CASE("exit law") {
  ExitLawRun run;
  run.config = config(1.0, 0.01, 6);
  run.samples = 10000;
  SUBCASE("t = 0 is pure residual sampling") {
    run.t = 0.0;
    const auto r = validate_exit_law(run);
    CHECK(r.lhs < 1.63 / std::sqrt(10000.0));
    CHECK(std::abs(r.extras.at("median")) < 0.05);
  }
  SUBCASE("t = 1") {
    run.t = 1.0;
    const auto r = validate_exit_law(run);
    CHECK(r.lhs < 0.02);
    CHECK(r.z == doctest::Approx(100.0 * r.lhs));
  }
  SUBCASE("too few samples") {
    run.samples = 9999;
    CHECK_THROWS_AS(validate_exit_law(run), ConfigError);
  }
}

TEST_CASE("growth rate") {
  GrowthRun run;
  run.config = config(1.0, 0.05, 8);
  SUBCASE("one generation brackets") {
    run.K = 1.0;
    run.generations = 1;
    run.config.horizon = 1.0;
    run.runs = 1000;
    const auto r = validate_growth_rate(run);
    CHECK(r.rhs == doctest::Approx(std::exp(-1.0)));
    CHECK(r.lhs <= 1.0);
    CHECK(r.lhs >= std::exp(-1.0));
    // Jensen: mean of 1/N is at least exp(-mean log N).
    CHECK(r.lhs >= r.extras.at("exp_minus_mean_log_n"));
    CHECK(r.extras.at("acceptance_rate") > 0.0);
    CHECK(r.extras.at("acceptance_rate") <= 1.0);
  }
  SUBCASE("horizon must cover the generations") {
    run.K = 1.0;
    run.generations = 3;
    run.config.horizon = 2.0;
    CHECK_THROWS_AS(validate_growth_rate(run), ConfigError);
  }
  SUBCASE("all runs rejected") {
    run.K = 0.05;
    run.generations = 60;
    run.config.horizon = 3.0;
    run.runs = 10;
    run.max_attempts = 20;
    CHECK_THROWS_AS(validate_growth_rate(run), ConditioningError);
  }
}

TEST_CASE("validators do not depend on the thread count") {
  ManyToOneRun m1;
  m1.config = config(0.5, 0.05, 9);
  m1.t = 1.0;
  m1.f = TestFunction::envelope;
  m1.K = 0.5;
  m1.runs = 300;
  m1.single_runs = 300;
  m1.threads = 1;
  const auto a = validate_many_to_one(m1);
  m1.threads = 3;
  CHECK(same(a, validate_many_to_one(m1)));

  ManyToTwoRun m2;
  m2.config = config(0.5, 0.05, 10);
  m2.t = 1.0;
  m2.interval = LineInterval{-1.0, 1.0};
  m2.runs = 200;
  m2.pair_samples = 500;
  m2.single_runs = 200;
  m2.threads = 1;
  const auto b = validate_many_to_two(m2);
  m2.threads = 3;
  CHECK(same(b, validate_many_to_two(m2)));

  GrowthRun g;
  g.config = config(1.0, 0.05, 11);
  g.config.horizon = 2.0;
  g.generations = 2;
  g.runs = 20;
  g.threads = 1;
  const auto c = validate_growth_rate(g);
  g.threads = 3;
  CHECK(same(c, validate_growth_rate(g)));
}

TEST_CASE("parallel replicate map matches the serial reference") {
  auto body = [](std::size_t r) {
    SimConfig c = config(0.8, 0.05, replicate_seed(12, r));
    c.horizon = 2.0;
    const auto snap = run(c, 1);
    double s = 0.0;
    for (const auto& p : snap.particles) s += p.state().x;
    return s;
  };
  const auto par = detail::map_replicates<double>(64, 4, body);
  const auto ser = detail::map_replicates_serial<double>(64, body);
  CHECK(par == ser);
  CHECK_THROWS_AS(detail::map_replicates<double>(8, 4,
                                                  [](std::size_t r) -> double {
                                                    if (r == 5) throw std::runtime_error("boom");
                                                    return 0.0;
                                                  }),
                  std::runtime_error);
}

// Identity sweep over branching rates at 10^4 replicates per side.
TEST_CASE("property: validator z-scores stay within 3 across beta") {
  for (const double beta : {0.25, 0.5, 1.0}) {
    CAPTURE(beta);
    const auto seed = static_cast<std::uint64_t>(1000 * beta);
    for (const auto f : {TestFunction::one, TestFunction::interval, TestFunction::envelope}) {
      CAPTURE(to_string(f));
      ManyToOneRun run;
      run.config = config(beta, 0.02, seed + 1);
      run.t = 3.0;
      run.f = f;
      run.K = 1.0;
      run.runs = 10000;
      run.single_runs = 100000;
      CHECK(std::abs(validate_many_to_one(run).z) <= 3.0);
    }
    for (const auto interval : {LineInterval{}, LineInterval{-1.0, 1.0}}) {
      ManyToTwoRun run;
      run.config = config(beta, 0.02, seed + 2);
      run.t = 3.0;
      run.interval = interval;
      run.runs = 10000;
      CHECK(std::abs(validate_many_to_two(run).z) <= 3.0);
    }
    HarmonicRun h;
    h.config = config(beta, 0.02, seed + 3);
    h.t = 3.0;
    h.runs = 10000;
    CHECK(std::abs(validate_harmonic_martingale(h).z) <= 3.0);
  }
}
