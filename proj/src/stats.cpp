#include "hbbm/stats.hpp"

#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <limits>
#include <stdexcept>

namespace hbbm {

void RunningStats::merge(const RunningStats& other) noexcept {
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double n = static_cast<double>(n_ + other.n_);
  const double delta = other.mean_ - mean_;
  mean_ += delta * static_cast<double>(other.n_) / n;
  m2_ += other.m2_ + delta * delta * static_cast<double>(n_) * static_cast<double>(other.n_) / n;
  n_ += other.n_;
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("fit_line: need at least two points");
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_line: x values are all equal");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    rss += r * r;
  }
  fit.slope_stderr = n > 2 ? std::sqrt(rss / static_cast<double>(n - 2) / sxx) : 0.0;
  fit.r_squared = syy > 0.0 ? 1.0 - rss / syy : 1.0;
  return fit;
}

double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf) {
  if (samples.empty()) throw std::invalid_argument("ks_statistic: no samples");
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double f = cdf(samples[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_pvalue(double d, std::size_t n) {
  const double sn = std::sqrt(static_cast<double>(n));
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = sign * std::exp(-2.0 * j * j * lambda * lambda);
    sum += term;
    if (std::abs(term) < 1e-12) break;
    sign = -sign;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

double chi_square_survival(double statistic, double dof) {
  if (statistic <= 0.0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_gof(std::span<const std::size_t> observed,
                               std::span<const double> probabilities, double min_expected) {
  if (observed.size() != probabilities.size() || observed.empty()) {
    throw std::invalid_argument("chi_square_gof: size mismatch");
  }
  double total = 0.0;
  for (const auto o : observed) total += static_cast<double>(o);
  // Pool from the tail until every cell has enough expected mass.
  std::vector<double> obs;
  std::vector<double> expect;
  double pend_obs = 0.0;
  double pend_exp = 0.0;
  double used = 0.0;
  for (std::size_t k = 0; k < observed.size(); ++k) {
    const double p = k + 1 == observed.size() ? std::max(0.0, 1.0 - used) : probabilities[k];
    used += p;
    pend_obs += static_cast<double>(observed[k]);
    pend_exp += p * total;
    if (pend_exp >= min_expected) {
      obs.push_back(pend_obs);
      expect.push_back(pend_exp);
      pend_obs = pend_exp = 0.0;
    }
  }
  if (pend_exp > 0.0 || pend_obs > 0.0) {
    if (expect.empty()) {
      obs.push_back(pend_obs);
      expect.push_back(pend_exp);
    } else {
      obs.back() += pend_obs;
      expect.back() += pend_exp;
    }
  }
  ChiSquareResult r;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    if (expect[k] > 0.0) r.statistic += (obs[k] - expect[k]) * (obs[k] - expect[k]) / expect[k];
  }
  r.dof = obs.size() > 1 ? obs.size() - 1 : 0;
  r.p_value = r.dof > 0 ? chi_square_survival(r.statistic, static_cast<double>(r.dof)) : 1.0;
  return r;
}

double z_score(double lhs, double lhs_se, double rhs, double rhs_se) noexcept {
  const double se = std::hypot(lhs_se, rhs_se);
  const double diff = lhs - rhs;
  if (diff == 0.0) return 0.0;
  if (!(se > 0.0)) return diff > 0 ? std::numeric_limits<double>::infinity()
                                   : -std::numeric_limits<double>::infinity();
  return diff / se;
}

Jackknife jackknife(std::size_t replicates, const std::function<double(std::size_t)>& estimate) {
  Jackknife out;
  out.estimate = estimate(replicates);
  if (replicates < 2) return out;
  std::vector<double> leave_one(replicates);
  double mean = 0.0;
  for (std::size_t i = 0; i < replicates; ++i) {
    leave_one[i] = estimate(i);
    mean += leave_one[i];
  }
  mean /= static_cast<double>(replicates);
  double ss = 0.0;
  for (const double v : leave_one) ss += (v - mean) * (v - mean);
  const double n = static_cast<double>(replicates);
  out.std_error = std::sqrt((n - 1.0) / n * ss);
  return out;
}

}  // namespace hbbm
