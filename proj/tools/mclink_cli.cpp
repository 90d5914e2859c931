// mclink command-line tool: link-level simulation and BER analysis for
// non-coherent detection over Poisson observation channels.
//
// Subcommands:
//   sweep      Monte Carlo BER sweep over an SNR grid
//   bound      analytical SS BER, union bound, genie-aided DF bound + sims
//   fit-csi    Gamma fit of the channel-state distribution
//   peak-time  peak observation time and value of the nominal channel
//   validate   oracle/invariant suite with machine-readable verdicts
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "mclink/channel.hpp"
#include "mclink/sim/bound.hpp"
#include "mclink/sim/config.hpp"
#include "mclink/sim/fit.hpp"
#include "mclink/sim/report.hpp"
#include "mclink/sim/sweep.hpp"
#include "mclink/sim/validate.hpp"
#include "mclink/version.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  int threads = 0;  // 0 = hardware concurrency
  std::string format = "csv";
};

mclink::sim::AppConfig load_app_config(const GlobalOpts& g) {
  if (g.config_path.empty()) return mclink::sim::load_config(mclink::sim::IniFile{});
  return mclink::sim::load_config_file(g.config_path);
}

int effective_threads(const GlobalOpts& g) {
  if (g.threads > 0) return g.threads;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

void write_report(const mclink::sim::BerReport& rep, const GlobalOpts& g,
                  const std::string& stem) {
  namespace fs = std::filesystem;
  fs::create_directories(g.out_dir);
  const fs::path base = fs::path(g.out_dir) / stem;
  if (g.format == "json") {
    std::ofstream os(base.string() + ".json");
    rep.write_json_rows(os);
  } else {
    std::ofstream os(base.string() + ".csv");
    rep.write_csv(os);
  }
  std::ofstream meta(base.string() + "_meta.json");
  rep.write_sidecar(meta);
  std::cout << "wrote " << base.string() << (g.format == "json" ? ".json" : ".csv") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"link-level simulator and BER analysis for non-coherent "
               "detection over Poisson channels"};
  app.set_version_flag("--version", mclink::kVersion);
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "configuration file (key = value with [sections])");
  app.add_option("--seed", g.seed, "master RNG seed")->capture_default_str();
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--threads", g.threads, "worker threads (0 = all cores)")
      ->capture_default_str();
  app.add_option("--format", g.format, "row output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  auto* sweep = app.add_subcommand("sweep", "Monte Carlo BER sweep");
  auto* fit = app.add_subcommand("fit-csi", "Gamma fit of the CSI distribution");
  auto* bound = app.add_subcommand("bound", "BER bounds and analytical curves");
  auto* peak = app.add_subcommand("peak-time", "peak time of the nominal channel");
  auto* validate = app.add_subcommand("validate", "run the validation suite");
  for (auto* sub : {sweep, fit, bound, peak, validate}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sweep->parsed()) {
      const auto cfg = load_app_config(g);
      const auto rep = mclink::sim::run_sweep(cfg, g.seed, effective_threads(g));
      write_report(rep, g, "sweep");
    } else if (bound->parsed()) {
      const auto cfg = load_app_config(g);
      const auto rep = mclink::sim::run_bound(cfg, g.seed, effective_threads(g));
      write_report(rep, g, "bound");
    } else if (fit->parsed()) {
      const auto cfg = load_app_config(g);
      const auto res = mclink::sim::run_fit(cfg, g.seed);
      std::filesystem::create_directories(g.out_dir);
      const auto base = std::filesystem::path(g.out_dir);
      {
        std::ofstream os(base / "gamma_fit.json");
        mclink::sim::write_fit_json(res, g.seed, cfg.raw, os);
      }
      {
        std::ofstream os(base / "histogram.csv");
        mclink::sim::write_histogram_csv(res.histogram, os);
      }
      std::cout << "signal: shape " << res.signal.shape << ", rate " << res.signal.rate
                << "\nnoise:  shape " << res.noise.shape << ", rate " << res.noise.rate
                << "\nwrote " << (base / "gamma_fit.json").string() << "\n";
    } else if (peak->parsed()) {
      const auto cfg = load_app_config(g);
      const double t = mclink::peak_time(cfg.sweep.channel);
      const double v = mclink::expected_signal(cfg.sweep.channel, t);
      if (g.format == "json") {
        nlohmann::ordered_json j;
        j["peak_time_s"] = t;
        j["peak_expected_count"] = v;
        std::cout << j.dump(2) << "\n";
      } else {
        std::cout << "peak time: " << t << " s\npeak expected count: " << v << "\n";
      }
    } else if (validate->parsed()) {
      const auto results = mclink::sim::run_validation(g.seed, effective_threads(g));
      bool all = true;
      for (const auto& r : results) {
        std::cout << (r.pass ? "PASS " : "FAIL ") << r.name;
        if (!r.pass) std::cout << " (" << r.detail << ")";
        std::cout << "\n";
        all = all && r.pass;
      }
      std::cout << (all ? "validation: all checks passed" : "validation: FAILURES present")
                << "\n";
      return all ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
