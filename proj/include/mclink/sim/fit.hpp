// fit-csi command: draws or ingests CSI samples, builds a histogram, fits
// the Gamma model, and reports parameters for the signal and (rate-scaled)
// noise models with fit diagnostics.
#pragma once

#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mclink/channel.hpp"
#include "mclink/gamma_model.hpp"
#include "mclink/rng.hpp"
#include "mclink/sim/config.hpp"
#include "mclink/version.hpp"

namespace mclink::sim {

struct FitResult {
  GammaParams signal;
  GammaParams noise;
  double objective = 0.0;
  double center_objective = 0.0;
  double sample_mean = 0.0;
  double sample_variance = 0.0;
  EmpiricalPdf histogram;
};

inline FitResult run_fit(const AppConfig& app, std::uint64_t seed) {
  const FitConfig& fcfg = app.fit;
  fcfg.validate();

  EmpiricalPdf hist;
  double mean = 0.0, variance = 0.0;
  switch (fcfg.source) {
    case FitConfig::Source::channel: {
      auto rng = make_rng(seed, 77);
      std::vector<double> xs(static_cast<std::size_t>(fcfg.samples));
      for (auto& x : xs) x = sample_peak_signal(app.sweep.channel, app.sweep.sigmas, rng);
      const auto [m, v] = empirical_moments(xs);
      if (!(v > m * m * 1e-16))
        throw std::runtime_error("fit: degenerate samples (point mass); "
                                 "a deterministic channel is not Gamma-fittable");
      mean = m;
      variance = v;
      hist = build_histogram(xs, fcfg.bins);
      break;
    }
    case FitConfig::Source::samples_file: {
      std::ifstream in(fcfg.input);
      if (!in) throw std::runtime_error("fit: cannot open " + fcfg.input);
      std::vector<double> xs;
      double v = 0.0;
      while (in >> v) xs.push_back(v);
      if (static_cast<long long>(xs.size()) < 1000)
        throw std::runtime_error("fit: need >= 1000 samples in " + fcfg.input);
      const auto [m, var] = empirical_moments(xs);
      if (!(var > m * m * 1e-16)) throw std::runtime_error("fit: degenerate samples (point mass)");
      mean = m;
      variance = var;
      hist = build_histogram(xs, fcfg.bins);
      break;
    }
    case FitConfig::Source::histogram_file: {
      std::ifstream in(fcfg.input);
      if (!in) throw std::runtime_error("fit: cannot open " + fcfg.input);
      hist = load_empirical_pdf(in);
      const auto [m, var] = hist.moments();
      mean = m;
      variance = var;
      break;
    }
  }

  const auto fit = fit_gamma(hist, [](double) { return 1.0; }, fcfg.delta, fcfg.grid);
  FitResult res;
  res.signal = fit.params;
  res.noise = {fit.params.shape, fit.params.rate * fcfg.snr};
  res.objective = fit.objective;
  res.center_objective = fit.center_objective;
  res.sample_mean = mean;
  res.sample_variance = variance;
  res.histogram = std::move(hist);
  return res;
}

inline void write_fit_json(const FitResult& res, std::uint64_t seed, const IniFile& echo,
                           std::ostream& os) {
  nlohmann::ordered_json j;
  j["tool"] = "mclink";
  j["version"] = kVersion;
  j["command"] = "fit-csi";
  j["seed"] = seed;
  j["signal"] = {{"shape", res.signal.shape}, {"rate", res.signal.rate}};
  j["noise"] = {{"shape", res.noise.shape}, {"rate", res.noise.rate}};
  j["diagnostics"] = {{"objective", res.objective},
                      {"center_objective", res.center_objective},
                      {"sample_mean", res.sample_mean},
                      {"sample_variance", res.sample_variance},
                      {"bins", res.histogram.bins()}};
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [sec, entries] : echo.sections) {
    nlohmann::ordered_json s = nlohmann::ordered_json::object();
    for (const auto& [k, v] : entries) s[k] = v;
    cfg[sec.empty() ? "(top)" : sec] = s;
  }
  j["config"] = cfg;
  os << j.dump(2) << '\n';
}

inline void write_histogram_csv(const EmpiricalPdf& hist, std::ostream& os) {
  os << "edge_lo,edge_hi,density\n";
  char buf[96];
  for (std::size_t i = 0; i < hist.bins(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.10g,%.10g,%.10g", hist.bin_edges[i],
                  hist.bin_edges[i + 1], hist.densities[i]);
    os << buf << '\n';
  }
}

}  // namespace mclink::sim
