#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace hbbm {

// Welford accumulator. merge() combines partial results in a caller-chosen
// order, so reductions stay reproducible.
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }
  void merge(const RunningStats& other) noexcept;

  [[nodiscard]] std::size_t count() const noexcept { return n_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  [[nodiscard]] double stddev() const noexcept { return std::sqrt(variance()); }
  [[nodiscard]] double stderr_mean() const noexcept {
    return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r_squared = 0.0;
};

// Ordinary least squares y = intercept + slope * x. Needs at least two
// distinct x values.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

// Sup distance between the empirical CDF of `samples` and `cdf`.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);

// Asymptotic Kolmogorov p-value for statistic d over n samples.
double ks_pvalue(double d, std::size_t n);

struct ChiSquareResult {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 1.0;
};

// Pearson goodness of fit. `probabilities[k]` is the model mass of category k;
// the last category absorbs any remaining mass. Adjacent tail categories are
// pooled until each expected count is at least `min_expected`.
ChiSquareResult chi_square_gof(std::span<const std::size_t> observed,
                               std::span<const double> probabilities,
                               double min_expected = 5.0);

double chi_square_survival(double statistic, double dof);

// (lhs - rhs) / sqrt(lhs_se^2 + rhs_se^2); 0 when both sides agree exactly.
double z_score(double lhs, double lhs_se, double rhs, double rhs_se) noexcept;

// Delete-one jackknife of a statistic over replicates. `estimate(skip)`
// evaluates the statistic with replicate `skip` removed, or on all replicates
// when skip == replicates.
struct Jackknife {
  double estimate = 0.0;
  double std_error = 0.0;
};
Jackknife jackknife(std::size_t replicates, const std::function<double(std::size_t)>& estimate);

}  // namespace hbbm
