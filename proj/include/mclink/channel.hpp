// Stochastic diffusive channel model: expected observation counts for a
// point release observed by a transparent spherical receiver under flow and
// first-order enzymatic degradation, randomized channel-state generation,
// and Poisson observation sampling.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mclink/rng.hpp"

namespace mclink {

/// Physical parameters of the diffusive link. SI units throughout.
struct ChannelParams {
  double receiver_volume;  // m^3
  double distance;         // m
  double diffusion;        // m^2/s
  double enzyme_conc;      // molecules/m^3
  double reaction_rate;    // m^3/(molecule*s)
  double flow_parallel;    // m/s, along transmitter->receiver
  double flow_perp;        // m/s
  double n_tx;             // molecules released per "1"

  /// Nominal parameter set: 50 nm receiver, 500 nm link, 1e5 enzyme
  /// molecules per um^3, 1 mm/s flow components, 1e4 released molecules.
  static ChannelParams defaults() {
    ChannelParams p;
    p.receiver_volume = 4.0 / 3.0 * std::numbers::pi * 50e-9 * 50e-9 * 50e-9;
    p.distance = 500e-9;
    p.diffusion = 4.365e-10;
    p.enzyme_conc = 1e5 / 1e-18;  // 1e5 per um^3
    p.reaction_rate = 2e-19;
    p.flow_parallel = 1e-3;
    p.flow_perp = 1e-3;
    p.n_tx = 1e4;
    return p;
  }

  void validate() const {
    if (!(receiver_volume > 0) || !(distance > 0) || !(diffusion > 0) ||
        !(enzyme_conc > 0) || !(reaction_rate > 0))
      throw std::domain_error("ChannelParams: geometric/kinetic fields must be > 0");
    if (!(n_tx >= 1)) throw std::domain_error("ChannelParams: n_tx must be >= 1");
    if (!std::isfinite(flow_parallel) || !std::isfinite(flow_perp))
      throw std::domain_error("ChannelParams: flow components must be finite");
  }
};

/// Relative standard deviations of the randomized channel parameters.
struct ScenarioSigmas {
  double diffusion = 0.0;
  double flow_parallel = 0.0;
  double flow_perp = 0.0;
  double enzyme = 0.0;

  void validate() const {
    if (diffusion < 0 || flow_parallel < 0 || flow_perp < 0 || enzyme < 0)
      throw std::domain_error("ScenarioSigmas: sigmas must be >= 0");
  }

  static ScenarioSigmas scenario(int id) {
    switch (id) {
      case 1: return {0.1, 0.5, 0.5, 0.1};
      case 2: return {0.2, 1.0, 1.5, 0.1};
      case 3: return {0.1, 1.5, 0.5, 0.2};
      default: throw std::domain_error("scenario id must be 1, 2, or 3");
    }
  }
};

/// One channel-state realization: expected signal count per "1" symbol and
/// expected interfering count per symbol.
struct Csi {
  double mean_signal = 0.0;
  double mean_noise = 0.0;

  void validate() const {
    if (!(mean_signal >= 0) || !std::isfinite(mean_signal) ||
        !(mean_noise >= 0) || !std::isfinite(mean_noise))
      throw std::domain_error("Csi: means must be finite and >= 0");
  }
};

using SymbolSequence = std::vector<std::uint8_t>;

/// Integer observation counts for one detection window.
struct ObservationBlock {
  std::vector<long long> counts;
};

/// Sufficient statistics of an observation block against a hypothesis
/// sequence: ones count, sum over hypothesized ones, sum over zeros.
struct BlockStats {
  int n1 = 0;
  long long sum_ones = 0;
  long long sum_zeros = 0;
};

inline BlockStats block_stats(std::span<const long long> counts,
                              std::span<const std::uint8_t> bits) {
  if (counts.size() != bits.size())
    throw std::invalid_argument("block_stats: size mismatch");
  BlockStats st;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    if (bits[k]) {
      ++st.n1;
      st.sum_ones += counts[k];
    } else {
      st.sum_zeros += counts[k];
    }
  }
  return st;
}

/// Expected number of molecules observed at time t after an impulsive
/// release: n_tx*V/(4*pi*D*t)^{3/2} * exp(-k*ce*t - ((d-v_par*t)^2 +
/// (v_perp*t)^2)/(4*D*t)).
inline double expected_signal(const ChannelParams& p, double t) {
  if (!(t > 0)) throw std::domain_error("expected_signal: t must be > 0");
  const double four_dt = 4.0 * p.diffusion * t;
  const double dx = p.distance - p.flow_parallel * t;
  const double dy = p.flow_perp * t;
  const double expo = -p.reaction_rate * p.enzyme_conc * t - (dx * dx + dy * dy) / four_dt;
  const double amp = p.n_tx * p.receiver_volume / std::pow(std::numbers::pi * four_dt, 1.5);
  return amp * std::exp(expo);
}

namespace detail {

inline constexpr double kPeakScanLo = 1e-8;   // s
inline constexpr double kPeakScanHi = 10.0;   // s
inline constexpr int kPeakScanPoints = 512;
inline constexpr double kPeakRelTol = 1e-6;

template <typename F>
double golden_section_max(F&& f, double lo, double hi, double rel_tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c), fd = f(d);
  while ((b - a) > rel_tol * (std::abs(a) + std::abs(b)) * 0.5) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// Coarse log-spaced scan to bracket the peak, then golden-section refine.
template <typename F>
double argmax_time(F&& f) {
  const double ratio = std::log(kPeakScanHi / kPeakScanLo);
  double best_v = -1.0;
  int best_i = 0;
  for (int i = 0; i < kPeakScanPoints; ++i) {
    const double t = kPeakScanLo * std::exp(ratio * i / (kPeakScanPoints - 1));
    const double v = f(t);
    if (v > best_v) {
      best_v = v;
      best_i = i;
    }
  }
  const double lo = kPeakScanLo * std::exp(ratio * std::max(0, best_i - 1) / (kPeakScanPoints - 1));
  const double hi =
      kPeakScanLo * std::exp(ratio * std::min(kPeakScanPoints - 1, best_i + 1) / (kPeakScanPoints - 1));
  return golden_section_max(f, lo, hi, kPeakRelTol);
}

}  // namespace detail

/// Time at which expected_signal attains its maximum.
inline double peak_time(const ChannelParams& p) {
  p.validate();
  return detail::argmax_time([&](double t) { return expected_signal(p, t); });
}

/// Maximum of expected_signal over t > 0.
inline double peak_signal(const ChannelParams& p) {
  return expected_signal(p, peak_time(p));
}

/// One draw of the randomized peak signal: perturbs D, v_par, v_perp, c_e as
/// z = z_def*(1 + sigma_z*N(0,1)), redrawing when D <= 0 or c_e < 0, then
/// maximizes the expected count over time.
inline double sample_peak_signal(const ChannelParams& p, const ScenarioSigmas& s,
                                 std::mt19937_64& rng) {
  p.validate();
  s.validate();
  std::normal_distribution<double> gauss(0.0, 1.0);
  constexpr int kMaxRetries = 10000;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    ChannelParams q = p;
    q.diffusion = p.diffusion * (1.0 + s.diffusion * gauss(rng));
    q.flow_parallel = p.flow_parallel * (1.0 + s.flow_parallel * gauss(rng));
    q.flow_perp = p.flow_perp * (1.0 + s.flow_perp * gauss(rng));
    q.enzyme_conc = p.enzyme_conc * (1.0 + s.enzyme * gauss(rng));
    if (q.diffusion <= 0.0 || q.enzyme_conc < 0.0) continue;  // omit the realization
    auto f = [&](double t) {
      const double four_dt = 4.0 * q.diffusion * t;
      const double dx = q.distance - q.flow_parallel * t;
      const double dy = q.flow_perp * t;
      return q.n_tx * q.receiver_volume / std::pow(std::numbers::pi * four_dt, 1.5) *
             std::exp(-q.reaction_rate * q.enzyme_conc * t - (dx * dx + dy * dy) / four_dt);
    };
    return f(detail::argmax_time(f));
  }
  throw std::runtime_error("sample_peak_signal: retry cap exceeded; sigmas pathological");
}

/// Draws a channel state: mean_signal is a randomized peak value, mean_noise
/// is an independent draw from the same distribution scaled by 1/snr.
inline Csi sample_csi(const ChannelParams& p, const ScenarioSigmas& s, double snr,
                      std::mt19937_64& rng) {
  if (!(snr > 0)) throw std::domain_error("sample_csi: snr must be > 0");
  Csi csi;
  csi.mean_signal = sample_peak_signal(p, s, rng);
  csi.mean_noise = sample_peak_signal(p, s, rng) / snr;
  return csi;
}

/// Independent Poisson counts with mean mean_signal*s[k] + mean_noise.
inline ObservationBlock draw_observations(const Csi& csi, std::span<const std::uint8_t> bits,
                                          std::mt19937_64& rng) {
  csi.validate();
  if (bits.empty()) throw std::invalid_argument("draw_observations: empty sequence");
  ObservationBlock block;
  block.counts.reserve(bits.size());
  for (std::uint8_t b : bits)
    block.counts.push_back(poisson_draw(csi.mean_signal * (b ? 1.0 : 0.0) + csi.mean_noise, rng));
  return block;
}

/// Channel taps sampled at the peak time plus multiples of the symbol
/// interval; tap 1 carries the desired signal, taps l >= 2 create
/// inter-symbol interference.
inline std::vector<double> isi_taps(const ChannelParams& p, double t_symb, int n_taps) {
  if (!(t_symb > 0)) throw std::domain_error("isi_taps: t_symb must be > 0");
  if (n_taps < 1) throw std::domain_error("isi_taps: n_taps must be >= 1");
  const double t_max = peak_time(p);
  std::vector<double> taps(static_cast<std::size_t>(n_taps));
  for (int l = 0; l < n_taps; ++l) taps[static_cast<std::size_t>(l)] = expected_signal(p, t_max + l * t_symb);
  return taps;
}

/// Expected interference from past symbols under equiprobable bits:
/// (1/2) * sum of taps beyond the first.
inline double expected_isi(std::span<const double> taps) {
  if (taps.empty()) throw std::invalid_argument("expected_isi: need at least one tap");
  double s = 0.0;
  for (std::size_t l = 1; l < taps.size(); ++l) s += taps[l];
  return 0.5 * s;
}

/// Poisson counts with per-symbol mean sum_l bits[k-l]*taps[l] + noise_mean;
/// symbols before the block start are treated as zero.
inline ObservationBlock draw_observations_with_isi(std::span<const double> taps,
                                                   double noise_mean,
                                                   std::span<const std::uint8_t> bits,
                                                   std::mt19937_64& rng) {
  if (taps.empty()) throw std::invalid_argument("draw_observations_with_isi: empty taps");
  for (double t : taps)
    if (!(t >= 0)) throw std::domain_error("draw_observations_with_isi: taps must be >= 0");
  if (!(noise_mean >= 0)) throw std::domain_error("draw_observations_with_isi: noise mean >= 0");
  ObservationBlock block;
  block.counts.reserve(bits.size());
  for (std::size_t k = 0; k < bits.size(); ++k) {
    double mean = noise_mean;
    for (std::size_t l = 0; l < taps.size() && l <= k; ++l)
      if (bits[k - l]) mean += taps[l];
    block.counts.push_back(poisson_draw(mean, rng));
  }
  return block;
}

}  // namespace mclink
