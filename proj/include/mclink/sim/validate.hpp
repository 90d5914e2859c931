// validate command: a fast battery of oracle and invariant checks with a
// machine-readable verdict per check. Statistical margins are sized so a
// seed change does not flip any verdict.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mclink/analysis.hpp"
#include "mclink/channel.hpp"
#include "mclink/detectors.hpp"
#include "mclink/oracle.hpp"
#include "mclink/rng.hpp"
#include "mclink/sim/sweep.hpp"

namespace mclink::sim {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

inline std::vector<CheckResult> run_validation(std::uint64_t seed, int threads) {
  std::vector<CheckResult> results;
  auto run = [&](const std::string& name, const std::function<std::string()>& body) {
    CheckResult r;
    r.name = name;
    try {
      r.detail = body();  // throws or returns a non-empty failure message
      r.pass = r.detail.empty();
    } catch (const std::exception& e) {
      r.pass = false;
      r.detail = e.what();
    }
    results.push_back(r);
  };

  run("weighted-moment-quadrature", [&]() -> std::string {
    for (double alpha : {0.5, 2.0, 10.0})
      for (double beta : {0.1, 1.0, 10.0})
        for (double a : {0.0, 3.0, 50.0})
          for (double b : {0.0, 1.0, 20.0}) {
            const GammaParams g{alpha, beta};
            const double lq = oracle::quad_log_weighted_moment(g, a, b);
            const double lc = gamma_log_weighted_moment(g, a, b);
            if (std::abs(lq - lc) > 1e-8 * std::max(1.0, std::abs(lc))) {
              std::ostringstream os;
              os << "mismatch at alpha=" << alpha << " beta=" << beta << " a=" << a
                 << " b=" << b;
              return os.str();
            }
          }
    return {};
  });

  run("ms-search-equivalence", [&]() -> std::string {
    auto rng = make_rng(seed, 11);
    const int K = 8;
    for (int mode = 0; mode < 2; ++mode) {
      const CsiPrior prior = mode == 0
                                 ? CsiPrior::gamma({3.29, 0.245}, {3.29, 2.45})
                                 : CsiPrior::point_mass({6.0, 0.5});
      int checked = 0;
      for (int trial = 0; trial < 300; ++trial) {
        const Csi csi = prior.draw(rng);
        SymbolSequence bits(K);
        for (auto& b : bits) b = rng() & 1u;
        const auto block = draw_observations(csi, bits, rng);
        const auto metrics = oracle::exhaustive_ms_metrics(prior, block.counts);
        double best = neg_inf, second = neg_inf;
        for (double v : metrics)
          if (v > best) {
            second = best;
            best = v;
          } else if (v > second) {
            second = v;
          }
        if (best - second < 1e-9) continue;  // tied instance
        ++checked;
        if (ms_detect(prior, block.counts) != oracle::exhaustive_ms_detect(prior, block.counts))
          return "structured search disagrees with exhaustive ML (mode " +
                 std::to_string(mode) + ")";
      }
      if (checked < 100) return "too many tied instances to validate";
    }
    return {};
  });

  run("pep-enumeration-k2", [&]() -> std::string {
    auto rng = make_rng(seed, 13);
    std::uniform_real_distribution<double> us(2.0, 8.0);
    std::uniform_real_distribution<double> un(0.2, 1.0);
    for (int i = 0; i < 5; ++i) {
      const Csi csi{us(rng), un(rng)};
      const auto prior = CsiPrior::gamma({3.0, 3.0 / csi.mean_signal},
                                         {3.0, 3.0 / csi.mean_noise});
      const double pep = pairwise_error_prob(csi, 2, 1, 1, 0, prior, 1e-12);
      const auto ref = oracle::exhaustive_pep(csi, SymbolSequence{1, 0}, SymbolSequence{0, 1},
                                              prior, 50);
      if (std::abs(pep - ref.probability) > 1e-6 + ref.tail_bound)
        return "pairwise error probability disagrees with enumeration";
    }
    return {};
  });

  run("metric-ratio-monotone", [&]() -> std::string {
    auto rng = make_rng(seed, 17);
    std::uniform_real_distribution<double> ua(0.5, 8.0);
    std::uniform_real_distribution<double> ub(0.2, 4.0);
    for (int p = 0; p < 20; ++p) {
      const CsiPrior prior = (p % 2 == 0)
                                 ? CsiPrior::point_mass({ua(rng) * 3.0, ub(rng)})
                                 : CsiPrior::gamma({ua(rng), ub(rng)}, {ua(rng), ub(rng) * 10.0});
      double prev = neg_inf;
      for (long long r = 0; r <= 200; ++r) {
        const double diff =
            ms_log_metric(prior, {1, r, 0, 1}) - ms_log_metric(prior, {0, 0, r, 1});
        if (r > 0 && diff < prev - 1e-9) return "metric ratio decreased at r=" + std::to_string(r);
        prev = diff;
      }
    }
    return {};
  });

  run("ss-ber-hand-case", [&]() -> std::string {
    const double expected = 0.5 + 0.5 * (6.0 * std::exp(-5.0) - 2.0 * std::exp(-1.0));
    const double got = ss_ber_conditional({4.0, 1.0}, 2);
    if (std::abs(got - expected) > 1e-12) return "conditional BER hand case failed";
    if (std::abs(got - 0.152335) > 1e-6) return "conditional BER differs from 0.152335";
    return {};
  });

  run("regularized-q-hand", [&]() -> std::string {
    if (std::abs(regularized_q(1, 2.0) - std::exp(-2.0)) > 1e-14) return "Q(1, 2)";
    if (std::abs(regularized_q(2, 5.0) - 6.0 * std::exp(-5.0)) > 1e-14) return "Q(2, 5)";
    if (regularized_q(7, 0.0) != 1.0) return "Q(7, 0)";
    return {};
  });

  run("blind-hand-case", [&]() -> std::string {
    const auto res = blind_detect(std::vector<long long>{5, 1, 4, 0});
    if (res.estimate.mean_noise != 0.5 || res.estimate.mean_signal != 4.0)
      return "blind CSI estimate";
    if (res.bits != SymbolSequence{1, 0, 1, 0}) return "blind decisions";
    return {};
  });

  run("genie-df-window-1", [&]() -> std::string {
    const auto prior = CsiPrior::gamma({3.29, 0.245}, {3.29, 2.45});
    const Csi csi{12.0, 1.5};
    const double a = genie_df_ber(csi, 1, prior, 1e-12);
    const double b = ss_ber_conditional(csi, ss_threshold(prior));
    if (std::abs(a - b) > 1e-12) return "window-1 reduction failed";
    return {};
  });

  run("sweep-determinism", [&]() -> std::string {
    AppConfig app;
    app.sweep.sigmas = ScenarioSigmas::scenario(1);
    app.sweep.snr_db = {10.0};
    app.sweep.window = 4;
    app.sweep.block = 12;
    app.sweep.trials = 64;
    app.sweep.prior_source = PriorSource::point_mass;
    const auto a = run_sweep(app, seed, 1);
    const auto b = run_sweep(app, seed, threads > 1 ? threads : 2);
    std::ostringstream csv_a, csv_b;
    a.write_csv(csv_a);
    b.write_csv(csv_b);
    if (csv_a.str() != csv_b.str()) return "thread count changed the report bytes";
    return {};
  });

  return results;
}

}  // namespace mclink::sim
