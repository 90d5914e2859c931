// Brute-force reference implementations for validation: exhaustive ML
// sequence search, exhaustive pairwise-error enumeration over observation
// space, and adaptive quadrature of the Gamma-weighted moments. These trade
// any notion of efficiency for directness and run only at desk scale.
#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "mclink/channel.hpp"
#include "mclink/detectors.hpp"
#include "mclink/gamma_model.hpp"
#include "mclink/math.hpp"
#include "mclink/prior.hpp"

namespace mclink::oracle {

inline constexpr int kMaxExhaustiveK = 12;

/// Knobs shared by the brute-force references.
struct OracleConfig {
  int max_k = kMaxExhaustiveK;    // exhaustive-search width cap
  long long max_count = 0;        // 0: derive per dimension from the mean
  double quad_rel_tol = 1e-11;

  void validate() const {
    if (max_k < 1 || max_k > kMaxExhaustiveK || max_count < 0 || !(quad_rel_tol > 0))
      throw std::domain_error("OracleConfig: invalid");
  }
};

/// Default per-dimension enumeration cap: ceil(mean + 12*sqrt(mean)),
/// consistent with the truncation policy of the analysis module.
inline long long default_max_count(double mean) {
  return static_cast<long long>(std::ceil(mean + 12.0 * std::sqrt(std::max(mean, 0.0)))) + 1;
}

/// ML sequence decision by scoring every one of the 2^K binary sequences;
/// ties resolve to the lexicographically smallest sequence (s[0] most
/// significant). Validates the structured multiple-symbol search.
inline SymbolSequence exhaustive_ms_detect(const CsiPrior& prior,
                                           std::span<const long long> counts) {
  const int K = static_cast<int>(counts.size());
  if (K < 1 || K > kMaxExhaustiveK)
    throw std::domain_error("exhaustive_ms_detect: K out of range");
  SymbolSequence best_bits;
  double best = neg_inf;
  SymbolSequence bits(counts.size());
  for (std::uint32_t m = 0; m < (1u << K); ++m) {
    for (int k = 0; k < K; ++k)
      bits[static_cast<std::size_t>(k)] = (m >> (K - 1 - k)) & 1u;
    const auto st = block_stats(counts, bits);
    const double v = ms_log_metric(prior, {st.n1, st.sum_ones, st.sum_zeros, K});
    if (v > best) {
      best = v;
      best_bits = bits;
    }
  }
  return best_bits;
}

/// All 2^K metric values, in lexicographic sequence order. Exposed so tests
/// can detect metric ties.
inline std::vector<double> exhaustive_ms_metrics(const CsiPrior& prior,
                                                 std::span<const long long> counts) {
  const int K = static_cast<int>(counts.size());
  if (K < 1 || K > kMaxExhaustiveK)
    throw std::domain_error("exhaustive_ms_metrics: K out of range");
  std::vector<double> vals;
  vals.reserve(std::size_t{1} << K);
  SymbolSequence bits(counts.size());
  for (std::uint32_t m = 0; m < (1u << K); ++m) {
    for (int k = 0; k < K; ++k)
      bits[static_cast<std::size_t>(k)] = (m >> (K - 1 - k)) & 1u;
    const auto st = block_stats(counts, bits);
    vals.push_back(ms_log_metric(prior, {st.n1, st.sum_ones, st.sum_zeros, K}));
  }
  return vals;
}

struct PepEnumeration {
  double probability = 0.0;
  double tail_bound = 0.0;  // joint mass possibly outside the enumerated box
};

/// Pairwise error probability by direct enumeration of every observation
/// vector in {0..max_count}^K: sums the joint Poisson pmf where the
/// competing hypothesis metric strictly exceeds the transmitted one.
inline PepEnumeration exhaustive_pep(const Csi& csi, std::span<const std::uint8_t> s,
                                     std::span<const std::uint8_t> s_hat,
                                     const CsiPrior& prior, long long max_count) {
  csi.validate();
  const int K = static_cast<int>(s.size());
  if (s.size() != s_hat.size() || K < 1)
    throw std::invalid_argument("exhaustive_pep: bad sequences");
  if (max_count < 1) throw std::domain_error("exhaustive_pep: max_count must be >= 1");

  std::vector<double> log_pmf_sig((static_cast<std::size_t>(max_count) + 1));
  std::vector<double> log_pmf_noi((static_cast<std::size_t>(max_count) + 1));
  const double lam_sig = csi.mean_signal + csi.mean_noise;
  for (long long r = 0; r <= max_count; ++r) {
    log_pmf_sig[static_cast<std::size_t>(r)] = poisson_log_pmf(r, lam_sig);
    log_pmf_noi[static_cast<std::size_t>(r)] = poisson_log_pmf(r, csi.mean_noise);
  }

  double prob = 0.0;
  std::vector<long long> r(static_cast<std::size_t>(K), 0);
  while (true) {
    double lp = 0.0;
    for (int k = 0; k < K; ++k) {
      const auto rk = static_cast<std::size_t>(r[static_cast<std::size_t>(k)]);
      lp += s[static_cast<std::size_t>(k)] ? log_pmf_sig[rk] : log_pmf_noi[rk];
    }
    const auto st = block_stats(r, s);
    const auto sh = block_stats(r, s_hat);
    const double m_s = ms_log_metric(prior, {st.n1, st.sum_ones, st.sum_zeros, K});
    const double m_h = ms_log_metric(prior, {sh.n1, sh.sum_ones, sh.sum_zeros, K});
    if (m_s < m_h) prob += std::exp(lp);

    int k = K - 1;
    while (k >= 0 && r[static_cast<std::size_t>(k)] == max_count) {
      r[static_cast<std::size_t>(k)] = 0;
      --k;
    }
    if (k < 0) break;
    ++r[static_cast<std::size_t>(k)];
  }

  // Union bound on the mass outside the box.
  double tail = 0.0;
  for (int k = 0; k < K; ++k) {
    const double lam = s[static_cast<std::size_t>(k)] ? lam_sig : csi.mean_noise;
    double cdf = 0.0;
    for (long long j = 0; j <= max_count; ++j) cdf += std::exp(poisson_log_pmf(j, lam));
    tail += std::max(0.0, 1.0 - cdf);
  }
  return {prob, tail};
}

/// Overload deriving the enumeration cap from the largest per-symbol mean.
inline PepEnumeration exhaustive_pep(const Csi& csi, std::span<const std::uint8_t> s,
                                     std::span<const std::uint8_t> s_hat, const CsiPrior& prior,
                                     const OracleConfig& cfg = {}) {
  cfg.validate();
  const long long cap = cfg.max_count > 0
                            ? cfg.max_count
                            : default_max_count(csi.mean_signal + csi.mean_noise);
  return exhaustive_pep(csi, s, s_hat, prior, cap);
}

namespace detail {

// Classic recursive adaptive Simpson on [a, b].
template <typename F>
double adaptive_simpson_rec(F&& f, double a, double b, double fa, double fm, double fb,
                            double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0) throw std::runtime_error("adaptive quadrature: depth exhausted");
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         adaptive_simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double adaptive_simpson(F&& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, 60);
}

}  // namespace detail

namespace detail {

// Coarse trapezoid pass used only to scale the adaptive tolerance.
template <typename F>
double trapezoid(F&& f, double a, double b, int n) {
  double s = 0.5 * (f(a) + f(b));
  for (int i = 1; i < n; ++i) s += f(a + (b - a) * i / n);
  return s * (b - a) / n;
}

}  // namespace detail

/// ln E{x^a e^{-bx}} under Gamma(shape, rate) by adaptive quadrature of the
/// scaled integrand around its mode; independent of the closed form it
/// validates. Relative accuracy ~1e-10.
inline double quad_log_weighted_moment(const GammaParams& g, double a, double b) {
  g.validate();
  if (!(a >= 0) || !(b + g.rate > 0))
    throw std::domain_error("quad_log_weighted_moment: invalid (a, b)");
  const double c = a + g.shape;       // effective shape of the integrand
  const double d = b + g.rate;        // effective rate
  const double log_norm = g.shape * std::log(g.rate) - std::lgamma(g.shape);

  // integrand exp(L(x)), L(x) = (c-1) ln x - d x, maximized at x* = (c-1)/d.
  // For c < 2 the integrand has an unbounded derivative at zero, so that
  // range goes through the substitution branch below instead.
  if (c >= 2.0) {
    const double xstar = (c - 1.0) / d;
    const double lstar = (c - 1.0) * std::log(xstar) - d * xstar;
    const double sigma = std::sqrt(c - 1.0) / d;
    const double lo = std::max(0.0, xstar - 14.0 * sigma);
    const double hi = xstar + 16.0 * sigma + 20.0 / d;
    auto f = [&](double x) {
      if (x <= 0.0) return 0.0;
      return std::exp((c - 1.0) * std::log(x) - d * x - lstar);
    };
    const double scale = std::max(detail::trapezoid(f, lo, hi, 2048), 1e-300);
    const double integral = detail::adaptive_simpson(f, lo, hi, scale * 1e-11);
    return log_norm + lstar + std::log(integral);
  }
  // c < 2: integrable singularity (or unbounded derivative) at zero.
  // Substituting x = y^p with p = 4/c turns the integrand into
  // p*y^3*exp(-d*y^p), smooth at zero.
  const double p_sub = 4.0 / c;
  const double hi_y = std::pow((c + 40.0) / d, 1.0 / p_sub);
  auto f = [&](double y) {
    if (y <= 0.0) return 0.0;
    return p_sub * y * y * y * std::exp(-d * std::pow(y, p_sub));
  };
  const double scale = std::max(detail::trapezoid(f, 0.0, hi_y, 2048), 1e-300);
  const double integral = detail::adaptive_simpson(f, 0.0, hi_y, scale * 1e-11);
  return log_norm + std::log(integral);
}

inline double quad_weighted_moment(const GammaParams& g, double a, double b) {
  return std::exp(quad_log_weighted_moment(g, a, b));
}

/// Product of the separated signal/noise expectations
/// E{cs^{a_s} e^{-b_s cs}} * E{cn^{a_n} e^{-b_n cn}}, each by quadrature;
/// validates one term of the closed-form detection metric.
inline double quad_metric_expectation(const GammaParams& gamma_s, const GammaParams& gamma_n,
                                      double a_s, double a_n, double b_s, double b_n) {
  return std::exp(quad_log_weighted_moment(gamma_s, a_s, b_s) +
                  quad_log_weighted_moment(gamma_n, a_n, b_n));
}

}  // namespace mclink::oracle
