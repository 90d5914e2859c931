// Small numeric helpers shared across the library: stable log-sum-exp,
// log-binomials, and Poisson pmf/support utilities.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace mclink {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

/// Accumulates log-domain terms and yields log(sum(exp(term))).
/// Two-pass free version below is preferred when the terms are already stored.
class LogSumAccumulator {
 public:
  void add(double log_term) {
    if (log_term == neg_inf) return;
    if (log_term > max_) {
      if (max_ != neg_inf) sum_ = sum_ * std::exp(max_ - log_term) + 1.0;
      else sum_ = 1.0;
      max_ = log_term;
    } else {
      sum_ += std::exp(log_term - max_);
    }
  }
  double value() const { return max_ == neg_inf ? neg_inf : max_ + std::log(sum_); }

 private:
  double max_ = neg_inf;
  double sum_ = 0.0;
};

inline double log_sum_exp(std::span<const double> terms) {
  double m = neg_inf;
  for (double t : terms) m = std::max(m, t);
  if (m == neg_inf) return neg_inf;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - m);
  return m + std::log(s);
}

inline double ln_factorial(long long n) { return std::lgamma(static_cast<double>(n) + 1.0); }

inline double ln_choose(long long n, long long k) {
  if (k < 0 || k > n) return neg_inf;
  return ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
}

/// log Poisson pmf; mean 0 degenerates to a point mass at zero.
inline double poisson_log_pmf(long long k, double mean) {
  if (k < 0) return neg_inf;
  if (mean <= 0.0) return k == 0 ? 0.0 : neg_inf;
  return static_cast<double>(k) * std::log(mean) - mean - ln_factorial(k);
}

/// Index window [lo, hi] holding all Poisson mass except at most `tail_eps`
/// per side, with the upper edge additionally clamped to
/// mean + max(10, 12*sqrt(mean)).
struct IndexWindow {
  long long lo = 0;
  long long hi = 0;
};

inline IndexWindow poisson_support(double mean, double tail_eps) {
  if (tail_eps <= 0.0) throw std::domain_error("poisson_support: tail_eps must be > 0");
  if (mean <= 0.0) return {0, 0};
  const long long hard_cap =
      static_cast<long long>(std::ceil(mean + std::max(10.0, 12.0 * std::sqrt(mean))));
  // Walk the pmf once; cheap relative to the sums these windows bound.
  double p = std::exp(-mean);
  double cdf = p;
  long long lo = 0;
  while (lo < hard_cap && cdf < tail_eps) {
    ++lo;
    p *= mean / static_cast<double>(lo);
    cdf += p;
  }
  long long hi = lo;
  double tail = 1.0 - cdf;
  while (hi < hard_cap && tail > tail_eps) {
    ++hi;
    p *= mean / static_cast<double>(hi);
    tail -= p;
  }
  return {lo, std::max(hi, lo)};
}

/// Poisson pmf values for k in [0, hi], computed by the multiplicative
/// recurrence in linear domain (switches to exp(log pmf) if exp(-mean)
/// underflows).
inline std::vector<double> poisson_pmf_table(double mean, long long hi) {
  std::vector<double> pmf(static_cast<std::size_t>(hi) + 1, 0.0);
  if (mean <= 0.0) {
    pmf[0] = 1.0;
    return pmf;
  }
  if (mean < 700.0) {
    double p = std::exp(-mean);
    pmf[0] = p;
    for (long long k = 1; k <= hi; ++k) {
      p *= mean / static_cast<double>(k);
      pmf[static_cast<std::size_t>(k)] = p;
    }
  } else {
    for (long long k = 0; k <= hi; ++k)
      pmf[static_cast<std::size_t>(k)] = std::exp(poisson_log_pmf(k, mean));
  }
  return pmf;
}

}  // namespace mclink
