#include "doctest.h"
#include "hbbm/diffusion.hpp"
#include "hbbm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace hbbm;

namespace {

double normal_cdf(double x, double mean, double var) {
  return 0.5 * std::erfc(-(x - mean) / std::sqrt(2.0 * var));
}

double cauchy_cdf(double x) { return 0.5 + std::atan(x) / std::numbers::pi; }

double median(std::vector<double> v) {
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
  return v[v.size() / 2];
}

}  // namespace

TEST_CASE("log y drifts by -dt/2 per step and y is a martingale") {
  CounterRng rng = CounterRng::from_seed(21);
  const DiffusionParams params{0.0, 0.01};
  RunningStats increments;
  RunningStats y;
  for (int i = 0; i < 1000000; ++i) {
    const State s = step({}, params.dt, params, rng);
    increments.add(s.log_y);
    y.add(std::exp(s.log_y));
  }
  CHECK(std::abs(increments.mean() + 0.005) < 3.0 * increments.stderr_mean());
  CHECK(std::abs(y.mean() - 1.0) < 3.0 * y.stderr_mean());
}

TEST_CASE("horizontal variance matches the quadrature and the continuum") {
  // log y_k ~ N(-kh/2, kh), so E[h exp(log y_k + log y_{k+1})] = h e^{kh}:
  // the discrete variance is h * sum_{k<n} e^{kh}. The continuum value is
  // E int_0^t y^2 ds = e^t - 1.
  const double h = 0.01;
  const int n = 10;
  double discrete = 0.0;
  for (int k = 0; k < n; ++k) discrete += h * std::exp(k * h);
  const double continuum = std::exp(0.1) - 1.0;
  CHECK(continuum == doctest::Approx(0.10517).epsilon(1e-4));
  CHECK(std::abs(discrete - continuum) / continuum < 0.01);

  CounterRng rng = CounterRng::from_seed(22);
  const DiffusionParams params{0.0, h};
  RunningStats x2;
  for (int path = 0; path < 400000; ++path) {
    State s;
    for (int k = 0; k < n; ++k) s = step(s, h, params, rng);
    x2.add(s.x * s.x);
  }
  CHECK(std::abs(x2.mean() - discrete) < 3.0 * x2.stderr_mean());
}

TEST_CASE("sample_exit is Cauchy(x, y)") {
  CounterRng rng = CounterRng::from_seed(23);
  std::vector<double> from_origin;
  std::vector<double> shifted;
  for (int i = 0; i < 100000; ++i) {
    from_origin.push_back(sample_exit(0.0, 1.0, rng));
    shifted.push_back(sample_exit(3.0, 2.0, rng));
  }
  CHECK(std::abs(median(from_origin)) < 0.02);
  const double inside = static_cast<double>(std::count_if(
                            from_origin.begin(), from_origin.end(),
                            [](double e) { return std::abs(e) <= 1.0; })) / 1e5;
  CHECK(std::abs(inside - 0.5) < 0.01);
  CHECK(std::abs(median(shifted) - 3.0) < 0.04);
  const double below = static_cast<double>(std::count_if(shifted.begin(), shifted.end(),
                                                         [](double e) { return e <= 5.0; })) / 1e5;
  CHECK(std::abs(below - 0.75) < 0.01);

  CHECK_THROWS_AS(sample_exit(0.0, 0.0, rng), DomainError);
  CHECK_THROWS_AS(sample_exit(0.0, -1.0, rng), DomainError);
}

TEST_CASE("exit quartiles agree with a fine-step Euclidean Brownian exit") {
  // Independent route: Euclidean Brownian motion from (0, 1) with step
  // variance (eps * y)^2, run until y is negligible or crosses zero.
  CounterRng rng = CounterRng::from_seed(24);
  const double eps = 0.05;
  const int paths = 20000;
  int inside = 0;
  for (int p = 0; p < paths; ++p) {
    double x = 0.0;
    double y = 1.0;
    while (y > 1e-3) {
      const auto [g1, g2] = rng.normals();
      x += eps * y * g1;
      y += eps * y * g2;
    }
    if (std::abs(x) <= 1.0) ++inside;
  }
  const double oracle = static_cast<double>(inside) / paths;
  const double se = std::sqrt(0.25 / paths);
  CHECK(std::abs(oracle - 0.5) < 4.0 * se);
  CHECK(exit_probability(0.0, 1.0, -1.0, 1.0) == doctest::Approx(0.5));
  CHECK(exit_cdf(3.0, 2.0, 5.0) == doctest::Approx(0.75));
  CHECK(exit_probability(0.0, 1.0, 1.0, -1.0) == 0.0);
}

TEST_CASE("simulate_path grid and determinism") {
  const DiffusionParams params{0.0, 0.01};
  SUBCASE("zero horizon") {
    CounterRng rng = CounterRng::from_seed(1);
    const auto path = simulate_path({0.5, -1.0}, 0.0, params, rng);
    REQUIRE(path.size() == 1);
    CHECK(path.x[0] == 0.5);
    CHECK(path.log_y[0] == -1.0);
  }
  SUBCASE("identical seeds give identical bits") {
    CounterRng a = CounterRng::from_seed(7);
    CounterRng b = CounterRng::from_seed(7);
    const auto p = simulate_path({}, 3.0, params, a);
    const auto q = simulate_path({}, 3.0, params, b);
    CHECK(p.times == q.times);
    CHECK(p.x == q.x);
    CHECK(p.log_y == q.log_y);
  }
  SUBCASE("grid has ceil(T/dt)+1 increasing points ending at T") {
    CounterRng rng = CounterRng::from_seed(8);
    const auto p = simulate_path({}, 1.005, params, rng);
    CHECK(p.size() == 102);
    CHECK(p.times.back() == 1.005);
    CHECK(std::is_sorted(p.times.begin(), p.times.end()));
    CHECK(std::adjacent_find(p.times.begin(), p.times.end()) == p.times.end());
    CHECK(simulate_path({}, 1.0, params, rng).size() == 101);
  }
  SUBCASE("bad parameters") {
    CounterRng rng = CounterRng::from_seed(8);
    CHECK_THROWS(simulate_path({}, 1.0, DiffusionParams{0.0, 0.0}, rng));
    CHECK_THROWS(simulate_path({}, -1.0, params, rng));
  }
}

TEST_CASE("mean of log y(5) is -5/2") {
  const DiffusionParams params{0.0, 0.01};
  CounterRng rng = CounterRng::from_seed(25);
  RunningStats end;
  for (int i = 0; i < 10000; ++i) end.add(simulate_path({}, 5.0, params, rng).log_y.back());
  CHECK(std::abs(end.mean() + 2.5) < 3.0 * end.stderr_mean());
  CHECK(end.variance() == doctest::Approx(5.0).epsilon(0.05));
}

TEST_CASE("vertical marginal is exactly Gaussian at any step size") {
  for (const double lambda : {0.0, 0.3}) {
    for (const double t : {1.0, 5.0}) {
      const DiffusionParams params{lambda, 0.3};  // does not divide t
      CounterRng rng = CounterRng::from_seed(26);
      std::vector<double> ends;
      for (int i = 0; i < 20000; ++i) ends.push_back(simulate_path({}, t, params, rng).log_y.back());
      const double mean = -(0.5 + lambda) * t;
      const double d = ks_statistic(ends, [&](double v) { return normal_cdf(v, mean, t); });
      CAPTURE(lambda);
      CAPTURE(t);
      CHECK(ks_pvalue(d, ends.size()) > 0.001);
    }
  }
}

namespace {

// Exits after running to time t with step dt = m * fine, using the fine
// normals aggregated in blocks of m so that every dt sees the same noise.
std::vector<double> coupled_exits(int m, double fine, double t, int paths, std::uint64_t seed) {
  const int fine_steps = static_cast<int>(std::lround(t / fine));
  const double h = m * fine;
  std::vector<double> exits;
  exits.reserve(static_cast<std::size_t>(paths));
  for (int p = 0; p < paths; ++p) {
    const Stream stream = Stream::from_seed(seed).derive(static_cast<std::uint64_t>(p));
    State s;
    for (int k = 0; k < fine_steps; k += m) {
      double g1 = 0.0;
      double g2 = 0.0;
      for (int j = 0; j < m; ++j) {
        const auto [a, b] = stream.normals(Purpose::kStep, static_cast<std::uint64_t>(k + j));
        g1 += a;
        g2 += b;
      }
      const double scale = 1.0 / std::sqrt(static_cast<double>(m));
      s = advance(s, h, -0.5, g1 * scale, g2 * scale);
    }
    exits.push_back(exit_from_state(s, stream.cauchy(Purpose::kExit, 0)));
  }
  return exits;
}

}  // namespace

TEST_CASE("exit law bias shrinks as the step is refined") {
  const int paths = 100000;
  std::vector<double> ks;
  for (const int m : {4, 2, 1}) {
    ks.push_back(ks_statistic(coupled_exits(m, 0.01, 2.0, paths, 27), cauchy_cdf));
  }
  CAPTURE(ks[0]);
  CAPTURE(ks[1]);
  CAPTURE(ks[2]);
  CHECK(ks[0] > ks[1]);
  CHECK(ks[1] > ks[2]);
  CHECK(ks[2] < 0.015);
}
