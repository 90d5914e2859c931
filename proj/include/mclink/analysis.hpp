// Analytical BER machinery: exact conditional/average symbol-by-symbol BER,
// the union-bound upper bound on multiple-symbol BER via the four-partition
// Poisson decomposition, and the genie-aided decision-feedback lower bound.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mclink/channel.hpp"
#include "mclink/detectors.hpp"
#include "mclink/math.hpp"
#include "mclink/parallel.hpp"
#include "mclink/prior.hpp"

namespace mclink {

/// Regularized upper incomplete Gamma ratio Q(a, y) for integer a >= 1,
/// equal to the probability that a Poisson(y) variate is < a. Q(0, .) = 0.
inline double regularized_q(long long a, double y) {
  if (a < 0) throw std::domain_error("regularized_q: a must be >= 0");
  if (!(y >= 0)) throw std::domain_error("regularized_q: y must be >= 0");
  if (a == 0) return 0.0;
  if (y == 0.0) return 1.0;
  if (y < 700.0) {
    double p = std::exp(-y);
    double cdf = p;
    for (long long j = 1; j < a; ++j) {
      p *= y / static_cast<double>(j);
      cdf += p;
    }
    return std::min(cdf, 1.0);
  }
  LogSumAccumulator acc;
  for (long long j = 0; j < a; ++j) acc.add(poisson_log_pmf(j, y));
  return std::min(std::exp(acc.value()), 1.0);
}

/// Conditional BER of an integer-threshold detector (decide "1" iff
/// r >= xi) under equiprobable bits:
/// 1/2 + 1/2*[Q(xi, cs+cn) - Q(xi, cn)].
inline double ss_ber_conditional(const Csi& csi, long long xi) {
  csi.validate();
  if (xi < 0) throw std::domain_error("ss_ber_conditional: xi must be >= 0");
  return 0.5 + 0.5 * (regularized_q(xi, csi.mean_signal + csi.mean_noise) -
                      regularized_q(xi, csi.mean_noise));
}

/// One BER value with a 95% Monte Carlo confidence half-width.
struct BerPoint {
  double snr_db = 0.0;
  std::string detector;
  double ber = 0.0;
  double half_width = 0.0;
  long long n_trials = 0;
};

/// Monte Carlo average of a conditional BER over CSI draws from the prior.
/// Returns the exact conditional value (zero half-width) when every draw
/// produced the same conditional BER, e.g. for a point-mass prior.
inline BerPoint average_ber(const std::function<double(const Csi&)>& conditional,
                            const CsiPrior& prior, long long n_mc, std::mt19937_64& rng) {
  if (n_mc < 1) throw std::domain_error("average_ber: n_mc must be >= 1");
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(n_mc));
  for (long long i = 0; i < n_mc; ++i) vals.push_back(conditional(prior.draw(rng)));
  BerPoint pt;
  pt.n_trials = n_mc;
  bool all_equal = true;
  for (double v : vals)
    if (v != vals.front()) {
      all_equal = false;
      break;
    }
  if (all_equal) {
    pt.ber = vals.front();
    pt.half_width = 0.0;
    return pt;
  }
  double mean = 0.0;
  for (double v : vals) mean += v;
  mean /= static_cast<double>(n_mc);
  double ss = 0.0;
  for (double v : vals) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n_mc - 1));
  pt.ber = mean;
  pt.half_width = 1.96 * sd / std::sqrt(static_cast<double>(n_mc));
  return pt;
}

/// Tabulated multiple-symbol log metrics for one (prior, window) pair.
/// The metric depends only on the prior, never on a CSI realization, so one
/// cache serves every CSI draw of a bound average. Prefill once (itself
/// parallelizable); afterwards log_metric() is safe for concurrent readers,
/// and out-of-range queries fall back to a direct computation.
class MetricCache {
 public:
  MetricCache(const CsiPrior& prior, int window) : prior_(prior), window_(window) {
    if (window < 1) throw std::domain_error("MetricCache: window must be >= 1");
  }

  int window() const { return window_; }
  const CsiPrior& prior() const { return prior_; }

  void prefill(long long n1_max_sum, long long n0_max_sum, int threads = 1) {
    n1_dim_ = n1_max_sum + 1;
    n0_dim_ = n0_max_sum + 1;
    const long long amax = n1_max_sum + n0_max_sum;
    lnfact_.resize(static_cast<std::size_t>(amax) + 1);
    for (long long a = 0; a <= amax; ++a)
      lnfact_[static_cast<std::size_t>(a)] = std::lgamma(static_cast<double>(a) + 1.0);
    sig_mom_.assign(static_cast<std::size_t>(window_) + 1, {});
    for (int b = 0; b <= window_; ++b) {
      auto& col = sig_mom_[static_cast<std::size_t>(b)];
      col.resize(static_cast<std::size_t>(n1_dim_));
      for (long long a = 0; a < n1_dim_; ++a)
        col[static_cast<std::size_t>(a)] = prior_.log_moment_signal(a, b);
    }
    noi_mom_.resize(static_cast<std::size_t>(amax) + 1);
    for (long long a = 0; a <= amax; ++a)
      noi_mom_[static_cast<std::size_t>(a)] = prior_.log_moment_noise(a, window_);

    table_.assign(static_cast<std::size_t>((window_ + 1) * n1_dim_ * n0_dim_), 0.0);
    // Rows are disjoint slots, so the fill parallelizes without affecting
    // the stored values.
    parallel_for((window_ + 1) * n1_dim_, threads, [&](long long flat) {
      const int n1 = static_cast<int>(flat / n1_dim_);
      const long long N1 = flat % n1_dim_;
      std::vector<double> terms;
      for (long long N0 = 0; N0 < n0_dim_; ++N0)
        table_[index(n1, N1, N0)] = compute_tabulated(n1, N1, N0, terms);
    });
    filled_ = true;
  }

  double log_metric(int n1, long long N1, long long N0) const {
    if (filled_ && N1 < n1_dim_ && N0 < n0_dim_ && n1 <= window_)
      return table_[index(n1, N1, N0)];
    return ms_log_metric(prior_, {n1, N1, N0, window_});
  }

 private:
  std::size_t index(int n1, long long N1, long long N0) const {
    return static_cast<std::size_t>((static_cast<long long>(n1) * n1_dim_ + N1) * n0_dim_ + N0);
  }

  double compute_tabulated(int n1, long long N1, long long N0, std::vector<double>& terms) const {
    terms.clear();
    const auto& sig = sig_mom_[static_cast<std::size_t>(n1)];
    const double lf_n1 = lnfact_[static_cast<std::size_t>(N1)];
    double m = neg_inf;
    for (long long i = 0; i <= N1; ++i) {
      const double t = lf_n1 - lnfact_[static_cast<std::size_t>(i)] -
                       lnfact_[static_cast<std::size_t>(N1 - i)] +
                       sig[static_cast<std::size_t>(N1 - i)] +
                       noi_mom_[static_cast<std::size_t>(N0 + i)];
      terms.push_back(t);
      if (t > m) m = t;
    }
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (double t : terms) s += std::exp(t - m);
    return m + std::log(s);
  }

  const CsiPrior prior_;
  int window_;
  bool filled_ = false;
  long long n1_dim_ = 0;
  long long n0_dim_ = 0;
  std::vector<double> table_;
  std::vector<double> lnfact_;
  std::vector<std::vector<double>> sig_mom_;
  std::vector<double> noi_mom_;
};

/// Poisson means of the four-partition decomposition of an observation
/// block under a transmitted/competing hypothesis pair.
struct PartitionMeans {
  double lambda1 = 0.0;  // both hypotheses "1" (overlap positions)
  double lambda2 = 0.0;  // transmitted "1", competing "0"
  double lambda3 = 0.0;  // transmitted "0", competing "1"
  double lambda4 = 0.0;  // both "0"
  int overlap = 0;       // upsilon

  static PartitionMeans make(const Csi& csi, int K, int n1, int nh1, int upsilon) {
    if (upsilon < 0 || upsilon > std::min(n1, nh1) || std::max(n1, nh1) > K ||
        K + upsilon - n1 - nh1 < 0 || n1 < 0 || nh1 < 0)
      throw std::domain_error("PartitionMeans: invalid (n1, nh1, upsilon)");
    const double both = csi.mean_signal + csi.mean_noise;
    PartitionMeans pm;
    pm.lambda1 = upsilon * both;
    pm.lambda2 = (n1 - upsilon) * both;
    pm.lambda3 = (nh1 - upsilon) * csi.mean_noise;
    pm.lambda4 = (K + upsilon - n1 - nh1) * csi.mean_noise;
    pm.overlap = upsilon;
    return pm;
  }
};

namespace detail {

struct PmfWindow {
  IndexWindow win;
  std::vector<double> pmf;  // indexed 0..win.hi; zero outside [win.lo, win.hi]

  static PmfWindow make(double mean, double eps) {
    PmfWindow p;
    p.win = poisson_support(mean, eps);
    p.pmf = poisson_pmf_table(mean, p.win.hi);
    for (long long k = 0; k < p.win.lo; ++k) p.pmf[static_cast<std::size_t>(k)] = 0.0;
    return p;
  }
};

}  // namespace detail

/// Probability that the metric of the competing hypothesis (nh1 ones,
/// overlap upsilon with the transmitted n1 ones) strictly exceeds the
/// transmitted hypothesis metric, conditioned on the CSI. Evaluated as a
/// truncated sum over the independent four-partition Poisson counts,
/// reorganized over (N, Nh1, overlap-count) with the transmitted-sum
/// dimension collapsed through prefix sums; truncation keeps all but
/// trunc_eps tail mass per Poisson factor.
inline double pairwise_error_prob(const Csi& csi, int K, int n1, int nh1, int upsilon,
                                  const CsiPrior& prior, double trunc_eps,
                                  const MetricCache* cache = nullptr) {
  csi.validate();
  if (!(trunc_eps > 0)) throw std::domain_error("pairwise_error_prob: trunc_eps must be > 0");
  const auto pm = PartitionMeans::make(csi, K, n1, nh1, upsilon);
  if (n1 == nh1 && upsilon == n1) return 0.0;  // a sequence against itself
  if (cache && cache->window() != K)
    throw std::invalid_argument("pairwise_error_prob: cache window mismatch");

  std::optional<MetricCache> local;
  const MetricCache* mc = cache;
  if (!mc) {
    local.emplace(prior, K);
    mc = &*local;
  }

  using detail::PmfWindow;
  const PmfWindow w1 = PmfWindow::make(pm.lambda1, trunc_eps);
  const PmfWindow w2 = PmfWindow::make(pm.lambda2, trunc_eps);
  const PmfWindow w3 = PmfWindow::make(pm.lambda3, trunc_eps);
  const PmfWindow w4 = PmfWindow::make(pm.lambda4, trunc_eps);
  const double lambda_total = pm.lambda1 + pm.lambda2 + pm.lambda3 + pm.lambda4;
  const IndexWindow wN = poisson_support(lambda_total, trunc_eps);

  const long long n_lo = std::max(wN.lo, w1.win.lo + w2.win.lo + w3.win.lo + w4.win.lo);
  const long long n_hi = std::min(wN.hi, w1.win.hi + w2.win.hi + w3.win.hi + w4.win.hi);
  const long long v_lo = w2.win.lo + w4.win.lo;  // V = N - Nh1 = m2 + m4
  const long long v_hi = std::min(w2.win.hi + w4.win.hi, n_hi);
  const long long nh_lo_g = w1.win.lo + w3.win.lo;  // Nh1 = m1 + m3
  const long long nh_hi_g = std::min(w1.win.hi + w3.win.hi, n_hi);
  if (n_lo > n_hi || v_lo > v_hi || nh_lo_g > nh_hi_g) return 0.0;

  // P[V][u] = sum_{u' <= u} pmf2(u')*pmf4(V-u'): prefix over the
  // transmitted "ones beyond overlap" count for each remainder V.
  std::vector<std::vector<double>> prefix(static_cast<std::size_t>(v_hi - v_lo) + 1);
  for (long long V = v_lo; V <= v_hi; ++V) {
    const long long umax = std::min(V, w2.win.hi);
    auto& row = prefix[static_cast<std::size_t>(V - v_lo)];
    row.resize(static_cast<std::size_t>(umax) + 1);
    double acc = 0.0;
    for (long long u = 0; u <= umax; ++u) {
      const long long m4 = V - u;
      if (m4 >= w4.win.lo && m4 <= w4.win.hi)
        acc += w2.pmf[static_cast<std::size_t>(u)] * w4.pmf[static_cast<std::size_t>(m4)];
      row[static_cast<std::size_t>(u)] = acc;
    }
  }

  // C13[Nh1][i] = cumulative-in-i of pmf1(i)*pmf3(Nh1-i), for collapsing the
  // saturated segment of the inner sum in one lookup.
  std::vector<std::vector<double>> c13(static_cast<std::size_t>(nh_hi_g - nh_lo_g) + 1);
  std::vector<long long> c13_off(c13.size());
  for (long long Nh1 = nh_lo_g; Nh1 <= nh_hi_g; ++Nh1) {
    const long long i_lo = std::max(w1.win.lo, Nh1 - w3.win.hi);
    const long long i_hi = std::min(w1.win.hi, Nh1 - w3.win.lo);
    auto& row = c13[static_cast<std::size_t>(Nh1 - nh_lo_g)];
    c13_off[static_cast<std::size_t>(Nh1 - nh_lo_g)] = i_lo;
    if (i_lo > i_hi) continue;
    row.resize(static_cast<std::size_t>(i_hi - i_lo) + 1);
    double acc = 0.0;
    for (long long i = i_lo; i <= i_hi; ++i) {
      acc += w1.pmf[static_cast<std::size_t>(i)] * w3.pmf[static_cast<std::size_t>(Nh1 - i)];
      row[static_cast<std::size_t>(i - i_lo)] = acc;
    }
  }

  double pep = 0.0;
  // On each fixed-N plane both metrics increase with their ones-side sum, so
  // the error region lies below a staircase boundary found with two pointers.
  for (long long N = n_lo; N <= n_hi; ++N) {
    const long long nh_lo = std::max(nh_lo_g, N - v_hi);
    const long long nh_hi = std::min({nh_hi_g, N - v_lo, N});
    if (nh_lo > nh_hi) continue;
    long long t = -1;  // largest N1 with metric(n1-side) < metric(nh1-side)
    for (long long Nh1 = nh_lo; Nh1 <= nh_hi; ++Nh1) {
      const double h = mc->log_metric(nh1, Nh1, N - Nh1);
      while (t + 1 <= N && mc->log_metric(n1, t + 1, N - (t + 1)) < h) ++t;
      if (t < 0) continue;
      const auto& row = prefix[static_cast<std::size_t>(N - Nh1 - v_lo)];
      const long long len = static_cast<long long>(row.size());
      const auto& cum = c13[static_cast<std::size_t>(Nh1 - nh_lo_g)];
      if (cum.empty()) continue;
      const long long c_off = c13_off[static_cast<std::size_t>(Nh1 - nh_lo_g)];
      const long long i_lo = c_off;
      const long long i_hi = std::min(c_off + static_cast<long long>(cum.size()) - 1, t);
      if (i_lo > i_hi) continue;
      double inner = 0.0;
      // i <= t-(len-1): the prefix saturates at row[len-1].
      const long long i_sat = std::min(i_hi, t - (len - 1));
      if (i_sat >= i_lo) {
        const double mass = cum[static_cast<std::size_t>(i_sat - c_off)] -
                            (i_lo > c_off ? cum[static_cast<std::size_t>(i_lo - 1 - c_off)] : 0.0);
        inner += row[static_cast<std::size_t>(len - 1)] * mass;
      }
      for (long long i = std::max(i_lo, i_sat + 1); i <= i_hi; ++i) {
        inner += w1.pmf[static_cast<std::size_t>(i)] * w3.pmf[static_cast<std::size_t>(Nh1 - i)] *
                 row[static_cast<std::size_t>(t - i)];
      }
      pep += inner;
    }
  }
  return std::min(pep, 1.0);
}

struct UnionBoundResult {
  double raw = 0.0;      // may exceed 1
  double clipped = 0.0;  // min(raw, 1)
};

/// Union-bound BER upper bound for the multiple-symbol detector: averages
/// Hamming-weighted pairwise error probabilities over one representative
/// transmitted sequence per ones-count, with competing sequences grouped by
/// (ones-count, overlap) multiplicity.
inline UnionBoundResult ms_union_bound(const Csi& csi, int K, const CsiPrior& prior,
                                       double trunc_eps, const MetricCache* cache = nullptr) {
  if (K < 1 || K > 12) throw std::domain_error("ms_union_bound: K must be in [1, 12]");
  double acc = 0.0;
  for (int n1 = 0; n1 <= K; ++n1) {
    const double pr_s = std::exp(ln_choose(K, n1) - K * std::log(2.0));
    for (int nh1 = 0; nh1 <= K; ++nh1) {
      const int ov_lo = std::max(0, n1 + nh1 - K);
      const int ov_hi = std::min(n1, nh1);
      for (int ov = ov_lo; ov <= ov_hi; ++ov) {
        if (nh1 == n1 && ov == n1) continue;  // identical sequence
        const double mult = std::exp(ln_choose(n1, ov) + ln_choose(K - n1, nh1 - ov));
        const double hamming = static_cast<double>((n1 - ov) + (nh1 - ov));
        const double pep = pairwise_error_prob(csi, K, n1, nh1, ov, prior, trunc_eps, cache);
        acc += pr_s * mult * hamming * pep;
      }
    }
  }
  UnionBoundResult res;
  res.raw = acc / static_cast<double>(K);
  res.clipped = std::min(res.raw, 1.0);
  return res;
}

/// Mean convention for the history-zeros count sum of the genie-aided
/// decision-feedback analysis: `history` uses (K-1-n)*cn zeros from the K-1
/// previous symbols (matches the genie-fed simulation); `window` uses
/// (K-n)*cn as printed in some treatments.
enum class GenieZerosMean { history, window };

/// Adaptive DF threshold at full window, evaluated through a metric cache so
/// repeated searches stay cheap.
inline int df_threshold_from_cache(const MetricCache& mc, int n_prev_ones, long long N1,
                                   long long N0, int xi_max) {
  for (int xi = 0; xi <= xi_max; ++xi) {
    const double l1 = mc.log_metric(n_prev_ones + 1, N1 + xi, N0);
    const double l0 = mc.log_metric(n_prev_ones, N1, N0 + xi);
    if (l1 > l0) return xi;
  }
  throw std::runtime_error("df_threshold_from_cache: no threshold <= xi_max");
}

/// Cached adaptive DF thresholds xi(n_prev_ones, N1, N0) at full window K.
/// Thresholds depend only on the prior, so one prefilled cache serves every
/// CSI draw; reads are lock-free after prefill. The referenced MetricCache
/// must outlive this object.
class DfThresholdCache {
 public:
  DfThresholdCache(const MetricCache& metrics, int xi_max)
      : metrics_(&metrics), xi_max_(xi_max) {}

  int window() const { return metrics_->window(); }

  void prefill(long long n1_sum_max, long long n0_sum_max, int threads = 1) {
    n1_dim_ = n1_sum_max + 1;
    n0_dim_ = n0_sum_max + 1;
    const int window = metrics_->window();
    table_.assign(static_cast<std::size_t>(window * n1_dim_ * n0_dim_), -1);
    parallel_for(window * n1_dim_, threads, [&](long long flat) {
      const int n = static_cast<int>(flat / n1_dim_);
      const long long N1 = flat % n1_dim_;
      for (long long N0 = 0; N0 < n0_dim_; ++N0)
        table_[index(n, N1, N0)] = df_threshold_from_cache(*metrics_, n, N1, N0, xi_max_);
    });
    filled_ = true;
  }

  int threshold(int n, long long N1, long long N0) const {
    if (filled_ && n < window() && N1 < n1_dim_ && N0 < n0_dim_)
      return table_[index(n, N1, N0)];
    return df_threshold_from_cache(*metrics_, n, N1, N0, xi_max_);
  }

 private:
  std::size_t index(int n, long long N1, long long N0) const {
    return static_cast<std::size_t>((static_cast<long long>(n) * n1_dim_ + N1) * n0_dim_ + N0);
  }

  const MetricCache* metrics_;
  int xi_max_;
  bool filled_ = false;
  long long n1_dim_ = 0;
  long long n0_dim_ = 0;
  std::vector<int> table_;
};

/// BER of the genie-aided decision-feedback detector conditioned on the
/// CSI: sums the threshold-detector error probability over the binomial
/// ones-count of the K-1 true previous symbols and truncated Poisson ranges
/// of the history sums.
inline double genie_df_ber(const Csi& csi, int K, const CsiPrior& prior, double trunc_eps,
                           GenieZerosMean zeros_mean = GenieZerosMean::history,
                           const DfThresholdCache* cache = nullptr) {
  csi.validate();
  if (K < 1) throw std::domain_error("genie_df_ber: K must be >= 1");
  if (!(trunc_eps > 0)) throw std::domain_error("genie_df_ber: trunc_eps must be > 0");
  if (cache && cache->window() != K)
    throw std::invalid_argument("genie_df_ber: cache window mismatch");

  std::optional<MetricCache> local_mc;
  std::optional<DfThresholdCache> local_tc;
  const DfThresholdCache* tc = cache;
  if (!tc) {
    local_mc.emplace(prior, K);
    local_tc.emplace(*local_mc, default_xi_cap(prior));
    tc = &*local_tc;
  }

  const double both = csi.mean_signal + csi.mean_noise;

  // Q(xi, lambda) for all thresholds seen, via one cumulative pmf pass.
  auto q_table = [](double lambda, long long xi_hi) {
    std::vector<double> q(static_cast<std::size_t>(xi_hi) + 2, 0.0);
    const auto pmf = poisson_pmf_table(lambda, xi_hi);
    double cdf = 0.0;
    for (long long a = 1; a <= xi_hi + 1; ++a) {
      cdf += pmf[static_cast<std::size_t>(a - 1)];
      q[static_cast<std::size_t>(a)] = std::min(cdf, 1.0);
    }
    return q;
  };

  double ber = 0.0;
  for (int n = 0; n <= K - 1; ++n) {
    const double w_n = std::exp(ln_choose(K - 1, n) - (K - 1) * std::log(2.0));
    const double lam_ones = n * both;
    const int zeros = zeros_mean == GenieZerosMean::history ? (K - 1 - n) : (K - n);
    const double lam_zeros = zeros * csi.mean_noise;
    const auto win1 = poisson_support(lam_ones, trunc_eps);
    const auto win0 = poisson_support(lam_zeros, trunc_eps);
    const auto pmf1 = poisson_pmf_table(lam_ones, win1.hi);
    const auto pmf0 = poisson_pmf_table(lam_zeros, win0.hi);

    // Thresholds first, so the Q tables can be sized once.
    long long xi_hi = 0;
    std::vector<int> xi_row(static_cast<std::size_t>((win1.hi - win1.lo + 1) *
                                                     (win0.hi - win0.lo + 1)));
    std::size_t idx = 0;
    for (long long N1 = win1.lo; N1 <= win1.hi; ++N1)
      for (long long N0 = win0.lo; N0 <= win0.hi; ++N0) {
        const int xi = tc->threshold(n, N1, N0);
        xi_row[idx++] = xi;
        xi_hi = std::max<long long>(xi_hi, xi);
      }
    const auto q_sig = q_table(both, xi_hi);
    const auto q_noi = q_table(csi.mean_noise, xi_hi);

    idx = 0;
    double cond = 0.0;
    for (long long N1 = win1.lo; N1 <= win1.hi; ++N1)
      for (long long N0 = win0.lo; N0 <= win0.hi; ++N0) {
        const int xi = xi_row[idx++];
        const double pe = 0.5 + 0.5 * (q_sig[static_cast<std::size_t>(xi)] -
                                       q_noi[static_cast<std::size_t>(xi)]);
        cond += pmf1[static_cast<std::size_t>(N1)] * pmf0[static_cast<std::size_t>(N0)] * pe;
      }
    ber += w_n * cond;
  }
  return ber;
}

}  // namespace mclink
