// The five detection rules for ON-OFF keying over the Poisson observation
// channel: coherent ML threshold, optimal non-coherent multiple-symbol
// detection, the symbol-by-symbol threshold specialization, decision
// feedback, and blind detection from order statistics.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "mclink/channel.hpp"
#include "mclink/math.hpp"
#include "mclink/prior.hpp"

namespace mclink {

/// Arguments of the multiple-symbol detection metric: ones count of the
/// hypothesis, observation sums over hypothesized ones/zeros, window length.
struct MsMetricInputs {
  int n1 = 0;
  long long sum_ones = 0;   // N1
  long long sum_zeros = 0;  // N0
  int window = 1;           // K

  void validate() const {
    if (n1 < 0 || n1 > window || sum_ones < 0 || sum_zeros < 0 || window < 1)
      throw std::domain_error("MsMetricInputs: invalid");
  }
};

/// Log of the multiple-symbol metric
///   sum_{i=0}^{N1} C(N1,i) E{cs^{N1-i} e^{-n1*cs}} E{cn^{N0+i} e^{-K*cn}},
/// evaluated as a log-sum-exp. Monotone-comparable across hypotheses for a
/// fixed observation block.
inline double ms_log_metric(const CsiPrior& prior, const MsMetricInputs& m) {
  m.validate();
  LogSumAccumulator acc;
  for (long long i = 0; i <= m.sum_ones; ++i) {
    acc.add(ln_choose(m.sum_ones, i) + prior.log_moment_signal(m.sum_ones - i, m.n1) +
            prior.log_moment_noise(m.sum_zeros + i, m.window));
  }
  return acc.value();
}

/// Coherent ML decision threshold cs/ln(1 + cs/cn); decide "1" iff
/// r >= threshold. Requires a strictly positive noise mean.
inline double coherent_threshold(const Csi& csi) {
  csi.validate();
  if (!(csi.mean_noise > 0))
    throw std::domain_error("coherent_threshold: mean_noise must be > 0");
  if (!(csi.mean_signal > 0))
    throw std::domain_error("coherent_threshold: mean_signal must be > 0");
  return csi.mean_signal / std::log1p(csi.mean_signal / csi.mean_noise);
}

inline SymbolSequence coherent_detect(const Csi& csi, std::span<const long long> counts) {
  const double xi = coherent_threshold(csi);
  SymbolSequence bits(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    bits[k] = static_cast<double>(counts[k]) >= xi ? 1 : 0;
  return bits;
}

namespace detail {

// Indices sorted by descending count; equal counts keep the lower index
// first so decisions are deterministic.
inline std::vector<std::size_t> descending_order(std::span<const long long> counts) {
  std::vector<std::size_t> idx(counts.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  return idx;
}

}  // namespace detail

/// Optimal non-coherent multiple-symbol detector: assigns "1" to the
/// positions of the zeta largest counts, where zeta maximizes the MS metric
/// over the K+1 candidate ones-counts (ties keep the smaller zeta).
inline SymbolSequence ms_detect(const CsiPrior& prior, std::span<const long long> counts) {
  if (counts.empty()) throw std::invalid_argument("ms_detect: empty block");
  const int K = static_cast<int>(counts.size());
  const auto order = detail::descending_order(counts);
  long long total = 0;
  for (long long c : counts) total += c;

  int best_n1 = 0;
  double best = neg_inf;
  long long prefix = 0;
  for (int n1 = 0; n1 <= K; ++n1) {
    if (n1 > 0) prefix += counts[order[static_cast<std::size_t>(n1 - 1)]];
    const double v = ms_log_metric(prior, {n1, prefix, total - prefix, K});
    if (v > best) {
      best = v;
      best_n1 = n1;
    }
  }
  SymbolSequence bits(counts.size(), 0);
  for (int j = 0; j < best_n1; ++j) bits[order[static_cast<std::size_t>(j)]] = 1;
  return bits;
}

/// Search cap for integer threshold searches; generous relative to the
/// prior means so it only trips on pathological priors.
inline int default_xi_cap(const CsiPrior& prior) {
  return static_cast<int>(std::ceil(20.0 * (prior.mean_signal() + prior.mean_noise())));
}

/// Optimal non-coherent symbol-by-symbol threshold: the smallest integer xi
/// whose "1"-hypothesis metric strictly exceeds the "0"-hypothesis metric.
/// Constant per prior; decide "1" iff r >= xi.
inline int ss_threshold(const CsiPrior& prior, int xi_max) {
  if (xi_max < 1) throw std::domain_error("ss_threshold: xi_max must be >= 1");
  for (int xi = 0; xi <= xi_max; ++xi) {
    const double lambda1 = ms_log_metric(prior, {1, xi, 0, 1});
    const double lambda0 = ms_log_metric(prior, {0, 0, xi, 1});
    if (lambda1 > lambda0) return xi;
  }
  throw std::runtime_error("ss_threshold: no threshold <= xi_max; prior pathological or cap too small");
}

inline int ss_threshold(const CsiPrior& prior) { return ss_threshold(prior, default_xi_cap(prior)); }

inline SymbolSequence ss_detect(int xi, std::span<const long long> counts) {
  SymbolSequence bits(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) bits[k] = counts[k] >= xi ? 1 : 0;
  return bits;
}

/// Sliding decision-feedback window: the last (capacity) decided bits and
/// their observations, oldest entries evicted first.
class DfState {
 public:
  explicit DfState(int capacity) : capacity_(capacity) {
    if (capacity < 0) throw std::domain_error("DfState: capacity must be >= 0");
  }

  void push(std::uint8_t bit, long long count) {
    entries_.push_back({bit, count});
    if (bit) {
      ++ones_;
      sum_ones_ += count;
    } else {
      sum_zeros_ += count;
    }
    if (static_cast<int>(entries_.size()) > capacity_) {
      const auto& old = entries_.front();
      if (old.bit) {
        --ones_;
        sum_ones_ -= old.count;
      } else {
        sum_zeros_ -= old.count;
      }
      entries_.pop_front();
    }
  }

  int size() const { return static_cast<int>(entries_.size()); }
  int capacity() const { return capacity_; }
  int ones() const { return ones_; }
  long long sum_ones() const { return sum_ones_; }
  long long sum_zeros() const { return sum_zeros_; }

 private:
  struct Entry {
    std::uint8_t bit;
    long long count;
  };
  std::deque<Entry> entries_;
  int capacity_;
  int ones_ = 0;
  long long sum_ones_ = 0;
  long long sum_zeros_ = 0;
};

/// Adaptive decision-feedback threshold for a window of `window` symbols
/// whose previous window-1 symbols contributed (n_prev_ones, sum_prev_ones,
/// sum_prev_zeros): the smallest integer xi for which prepending xi to the
/// history makes the "1" metric strictly exceed the "0" metric.
inline int df_threshold_stats(const CsiPrior& prior, int window, int n_prev_ones,
                              long long sum_prev_ones, long long sum_prev_zeros, int xi_max) {
  if (window < 1 || n_prev_ones < 0 || n_prev_ones > window - 1)
    throw std::domain_error("df_threshold_stats: invalid window history");
  for (int xi = 0; xi <= xi_max; ++xi) {
    const double lambda1 = ms_log_metric(
        prior, {n_prev_ones + 1, sum_prev_ones + xi, sum_prev_zeros, window});
    const double lambda0 = ms_log_metric(
        prior, {n_prev_ones, sum_prev_ones, sum_prev_zeros + xi, window});
    if (lambda1 > lambda0) return xi;
  }
  throw std::runtime_error("df_threshold_stats: no threshold <= xi_max");
}

inline int df_threshold(const CsiPrior& prior, const DfState& state, int xi_max) {
  return df_threshold_stats(prior, state.size() + 1, state.ones(), state.sum_ones(),
                            state.sum_zeros(), xi_max);
}

inline int df_threshold(const CsiPrior& prior, const DfState& state) {
  return df_threshold(prior, state, default_xi_cap(prior));
}

namespace detail {

// One DF decision by direct metric comparison (decide 1 iff the "1"
// hypothesis metric is at least the "0" metric). Equivalent to the
// threshold form except on exact metric ties.
inline std::uint8_t df_decide(const CsiPrior& prior, const DfState& state, long long count) {
  const int window = state.size() + 1;
  const double lambda1 = ms_log_metric(
      prior, {state.ones() + 1, state.sum_ones() + count, state.sum_zeros(), window});
  const double lambda0 = ms_log_metric(
      prior, {state.ones(), state.sum_ones(), state.sum_zeros() + count, window});
  return lambda1 >= lambda0 ? 1 : 0;
}

}  // namespace detail

/// Decision-feedback detection over a stream: symbol k is detected with
/// window size min(k+1, K), feeding back the detector's own decisions.
inline SymbolSequence df_detect_stream(const CsiPrior& prior, std::span<const long long> counts,
                                       int K) {
  if (K < 1) throw std::domain_error("df_detect_stream: K must be >= 1");
  DfState state(K - 1);
  SymbolSequence bits;
  bits.reserve(counts.size());
  for (long long c : counts) {
    const std::uint8_t b = detail::df_decide(prior, state, c);
    bits.push_back(b);
    state.push(b, c);
  }
  return bits;
}

/// Genie-aided variant: the window is fed the true past bits instead of the
/// detector's decisions. Used for bound validation.
inline SymbolSequence df_detect_stream_genie(const CsiPrior& prior,
                                             std::span<const long long> counts,
                                             std::span<const std::uint8_t> true_bits, int K) {
  if (counts.size() != true_bits.size())
    throw std::invalid_argument("df_detect_stream_genie: size mismatch");
  if (K < 1) throw std::domain_error("df_detect_stream_genie: K must be >= 1");
  DfState state(K - 1);
  SymbolSequence bits;
  bits.reserve(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) {
    bits.push_back(detail::df_decide(prior, state, counts[k]));
    state.push(true_bits[k], counts[k]);
  }
  return bits;
}

struct BlindResult {
  SymbolSequence bits;
  Csi estimate;
  double threshold = 0.0;
};

/// Blind detection without CSI statistics: estimates the noise mean from
/// the floor(K/2) smallest counts, the signal mean from the ceil(K/2)
/// largest counts, then applies the ML threshold form. A zero noise
/// estimate is floored at 1e-3; a non-positive signal estimate yields
/// all-zero decisions.
inline BlindResult blind_detect(std::span<const long long> counts) {
  const int K = static_cast<int>(counts.size());
  if (K < 2) throw std::domain_error("blind_detect: need K >= 2");
  const auto order = detail::descending_order(counts);
  const int n_top = (K + 1) / 2;  // ceil(K/2)

  double noise = 0.0;
  for (int j = n_top; j < K; ++j) noise += static_cast<double>(counts[order[static_cast<std::size_t>(j)]]);
  noise /= static_cast<double>(K - n_top);

  double signal = 0.0;
  for (int j = 0; j < n_top; ++j)
    signal += static_cast<double>(counts[order[static_cast<std::size_t>(j)]]) - noise;
  signal /= static_cast<double>(n_top);

  BlindResult res;
  res.estimate = {std::max(signal, 0.0), noise};
  if (signal <= 0.0) {
    res.bits.assign(counts.size(), 0);
    res.threshold = std::numeric_limits<double>::infinity();
    return res;
  }
  if (noise == 0.0) noise = 1e-3;
  res.threshold = signal / std::log1p(signal / noise);
  res.bits.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    res.bits[k] = static_cast<double>(counts[k]) >= res.threshold ? 1 : 0;
  return res;
}

}  // namespace mclink
