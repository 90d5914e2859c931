// Monte Carlo sweep engine: seeded CSI generation, per-trial detection with
// every configured detector, deterministic parallel accumulation, and BER
// reporting with confidence intervals.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "mclink/analysis.hpp"
#include "mclink/channel.hpp"
#include "mclink/detectors.hpp"
#include "mclink/gamma_model.hpp"
#include "mclink/prior.hpp"
#include "mclink/rng.hpp"
#include "mclink/sim/config.hpp"
#include "mclink/parallel.hpp"
#include "mclink/sim/report.hpp"

namespace mclink::sim {

// RNG stream tags; every derived stream is (seed, tag + snr index, unit).
inline constexpr std::uint64_t kStreamPrior = 1000;
inline constexpr std::uint64_t kStreamTrial = 2000;
inline constexpr std::uint64_t kStreamBoundCsi = 3000;
inline constexpr std::uint64_t kStreamBoundSim = 4000;

/// Everything the detectors need at one SNR point.
struct PriorBundle {
  std::optional<CsiPrior> prior;
  int ss_xi = 0;
  double nominal_peak = 0.0;
  std::vector<double> tap_ratio;   // taps normalized by the first; empty when ISI off
  double isi_ratio = 0.0;          // 0.5 * sum of tap_ratio beyond the first
  std::optional<GammaFit> fit_diag;
};

/// Builds the detector-side CSI prior for one SNR point. The signal model
/// comes from randomized peak draws; the noise model is the same family
/// scaled by 1/snr, shifted by the expected interference when ISI is on.
inline PriorBundle build_prior(const SweepConfig& cfg, double snr, std::uint64_t seed,
                               std::size_t snr_idx) {
  PriorBundle b;
  b.nominal_peak = peak_signal(cfg.channel);
  if (cfg.isi.enabled) {
    const double t_max = peak_time(cfg.channel);
    const auto taps = isi_taps(cfg.channel, cfg.isi.t_symb_multiple * t_max, cfg.isi.n_taps);
    b.tap_ratio.reserve(taps.size());
    for (double t : taps) b.tap_ratio.push_back(t / taps[0]);
    b.isi_ratio = expected_isi(b.tap_ratio);
  }

  auto rng = make_rng(seed, kStreamPrior + snr_idx);
  switch (cfg.prior_source) {
    case PriorSource::point_mass: {
      const double noise = b.nominal_peak / snr + b.isi_ratio * b.nominal_peak;
      b.prior = CsiPrior::point_mass({b.nominal_peak, noise});
      break;
    }
    case PriorSource::fitted_gamma: {
      std::vector<double> sig(static_cast<std::size_t>(cfg.prior_samples));
      for (auto& x : sig) x = sample_peak_signal(cfg.channel, cfg.sigmas, rng);
      const auto hist = build_histogram(sig, cfg.fit_bins);
      const auto fit = fit_gamma(hist, [](double) { return 1.0; }, cfg.fit_delta, cfg.fit_grid);
      b.fit_diag = fit;
      GammaParams noise{fit.params.shape, fit.params.rate * snr};
      if (cfg.isi.enabled) {
        // Interference shifts the noise; refit its Gamma model by moments
        // of external-noise-plus-interference samples.
        std::vector<double> noi(sig.size());
        for (auto& x : noi)
          x = sample_peak_signal(cfg.channel, cfg.sigmas, rng) / snr +
              b.isi_ratio * sample_peak_signal(cfg.channel, cfg.sigmas, rng);
        const auto [m, v] = empirical_moments(noi);
        noise = moments_to_gamma(m, v);
      }
      b.prior = CsiPrior::gamma(fit.params, noise);
      break;
    }
    case PriorSource::empirical_samples: {
      std::vector<double> sig(static_cast<std::size_t>(cfg.prior_samples));
      for (auto& x : sig) x = sample_peak_signal(cfg.channel, cfg.sigmas, rng);
      std::vector<double> noi(sig.size());
      for (auto& x : noi) {
        x = sample_peak_signal(cfg.channel, cfg.sigmas, rng) / snr;
        if (cfg.isi.enabled)
          x += b.isi_ratio * sample_peak_signal(cfg.channel, cfg.sigmas, rng);
      }
      b.prior = CsiPrior::samples(std::move(sig), std::move(noi));
      break;
    }
  }
  b.ss_xi = ss_threshold(*b.prior);
  return b;
}

namespace detail {

struct TallyCell {
  long long errors = 0;
  long long decisions = 0;
};

inline void tally(TallyCell& cell, std::span<const std::uint8_t> decided,
                  std::span<const std::uint8_t> truth, std::size_t from, std::size_t to) {
  for (std::size_t k = from; k < to; ++k) {
    ++cell.decisions;
    if (decided[k] != truth[k]) ++cell.errors;
  }
}

}  // namespace detail

/// Runs the configured sweep. Identical (config, seed) produce byte-identical
/// reports at any thread count: each trial draws from its own derived RNG
/// stream and results reduce in trial order.
inline BerReport run_sweep(const AppConfig& app, std::uint64_t seed, int threads) {
  const SweepConfig& cfg = app.sweep;
  cfg.validate();

  BerReport rep;
  rep.command = "sweep";
  rep.seed = seed;
  rep.config_echo = app.raw;

  const int K = cfg.window;
  const int B = cfg.block;
  const int n_windows = B / K;
  const std::size_t n_det = cfg.detectors.size();

  for (std::size_t snr_idx = 0; snr_idx < cfg.snr_db.size(); ++snr_idx) {
    const double snr = std::pow(10.0, cfg.snr_db[snr_idx] / 10.0);
    const PriorBundle bundle = build_prior(cfg, snr, seed, snr_idx);
    const CsiPrior& prior = *bundle.prior;

    std::vector<std::vector<detail::TallyCell>> per_unit(
        static_cast<std::size_t>(cfg.trials), std::vector<detail::TallyCell>(n_det));

    mclink::parallel_for(cfg.trials, threads, [&](long long unit) {
      auto rng = make_rng(seed, kStreamTrial + snr_idx, static_cast<std::uint64_t>(unit));
      auto& cells = per_unit[static_cast<std::size_t>(unit)];
      const Csi csi = sample_csi(cfg.channel, cfg.sigmas, snr, rng);

      std::vector<double> taps;
      Csi effective = csi;
      if (cfg.isi.enabled) {
        taps.resize(bundle.tap_ratio.size());
        for (std::size_t l = 0; l < taps.size(); ++l)
          taps[l] = bundle.tap_ratio[l] * csi.mean_signal;
        effective.mean_noise = csi.mean_noise + bundle.isi_ratio * csi.mean_signal;
      }

      for (int rep_block = 0; rep_block < cfg.blocks_per_csi; ++rep_block) {
        SymbolSequence bits(static_cast<std::size_t>(B));
        for (auto& bit : bits) bit = static_cast<std::uint8_t>(rng() & 1u);
        const ObservationBlock block =
            cfg.isi.enabled ? draw_observations_with_isi(taps, csi.mean_noise, bits, rng)
                            : draw_observations(csi, bits, rng);
        const std::span<const long long> counts(block.counts);

        for (std::size_t d = 0; d < n_det; ++d) {
          switch (cfg.detectors[d]) {
            case DetectorKind::coherent: {
              const auto dec = coherent_detect(effective, counts);
              detail::tally(cells[d], dec, bits, 0, static_cast<std::size_t>(B));
              break;
            }
            case DetectorKind::ss: {
              const auto dec = ss_detect(bundle.ss_xi, counts);
              detail::tally(cells[d], dec, bits, 0, static_cast<std::size_t>(B));
              break;
            }
            case DetectorKind::df: {
              const auto dec = df_detect_stream(prior, counts, K);
              detail::tally(cells[d], dec, bits, static_cast<std::size_t>(K - 1),
                            static_cast<std::size_t>(B));
              break;
            }
            case DetectorKind::ms: {
              for (int w = 0; w < n_windows; ++w) {
                const auto lo = static_cast<std::size_t>(w * K);
                const auto dec = ms_detect(prior, counts.subspan(lo, static_cast<std::size_t>(K)));
                for (int k = 0; k < K; ++k) {
                  ++cells[d].decisions;
                  if (dec[static_cast<std::size_t>(k)] != bits[lo + static_cast<std::size_t>(k)])
                    ++cells[d].errors;
                }
              }
              break;
            }
            case DetectorKind::blind: {
              for (int w = 0; w < n_windows; ++w) {
                const auto lo = static_cast<std::size_t>(w * K);
                const auto res = blind_detect(counts.subspan(lo, static_cast<std::size_t>(K)));
                for (int k = 0; k < K; ++k) {
                  ++cells[d].decisions;
                  if (res.bits[static_cast<std::size_t>(k)] != bits[lo + static_cast<std::size_t>(k)])
                    ++cells[d].errors;
                }
              }
              break;
            }
          }
        }
      }
    });

    for (std::size_t d = 0; d < n_det; ++d) {
      long long errors = 0, decisions = 0;
      for (const auto& cells : per_unit) {
        errors += cells[d].errors;
        decisions += cells[d].decisions;
      }
      ReportRow row;
      row.snr_db = cfg.snr_db[snr_idx];
      row.detector = detector_name(cfg.detectors[d]);
      row.trials = cfg.trials;
      row.decisions = decisions;
      row.ber = decisions > 0 ? static_cast<double>(errors) / static_cast<double>(decisions) : 0.0;
      row.ci95 =
          decisions > 0
              ? 1.96 * std::sqrt(row.ber * (1.0 - row.ber) / static_cast<double>(decisions))
              : 0.0;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

}  // namespace mclink::sim
