#include "mclink/oracle.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "mclink/detectors.hpp"
#include "mclink/rng.hpp"

namespace mclink {
namespace {

TEST(QuadMoment, TrivialCases) {
  const GammaParams g{2.0, 3.0};
  EXPECT_NEAR(oracle::quad_weighted_moment(g, 0.0, 0.0), 1.0, 1e-9);
  EXPECT_NEAR(oracle::quad_weighted_moment({1.0, 1.0}, 1.0, 0.0), 1.0, 1e-9);
}

TEST(QuadMoment, AgreesWithClosedFormOnSpotChecks) {
  const std::vector<double> shapes = {0.5, 1.0, 2.0, 10.0};
  const std::vector<double> rates = {0.1, 1.0, 10.0};
  for (double alpha : shapes)
    for (double beta : rates)
      for (double a : {0.0, 1.0, 5.0, 37.0})
        for (double b : {0.0, 1.0, 12.5}) {
          const GammaParams g{alpha, beta};
          const double lq = oracle::quad_log_weighted_moment(g, a, b);
          const double lc = gamma_log_weighted_moment(g, a, b);
          EXPECT_NEAR(lq, lc, 1e-8 * std::max(1.0, std::abs(lc)))
              << "alpha " << alpha << " beta " << beta << " a " << a << " b " << b;
        }
}

TEST(QuadMoment, LargeExponentInLogDomain) {
  const GammaParams g{2.0, 1.0};
  const double lq = oracle::quad_log_weighted_moment(g, 200.0, 50.0);
  const double lc = gamma_log_weighted_moment(g, 200.0, 50.0);
  EXPECT_NEAR(lq, lc, 1e-6);
}

TEST(QuadMoment, DetectsACorruptedClosedForm) {
  // Stand-in for a mutation check: an off-by-one in the denominator
  // exponent must be flagged by the quadrature cross-check.
  const GammaParams g{2.0, 1.5};
  const double a = 3.0, b = 2.0;
  const double corrupted = std::lgamma(a + g.shape) + g.shape * std::log(g.rate) -
                           std::lgamma(g.shape) - (a + g.shape + 1.0) * std::log(b + g.rate);
  const double lq = oracle::quad_log_weighted_moment(g, a, b);
  EXPECT_GT(std::abs(lq - corrupted), 0.5);
}

TEST(QuadMoment, SeparatedMetricExpectationProduct) {
  const GammaParams gs{2.0, 1.0};
  const GammaParams gn{2.0, 10.0};
  const double got = oracle::quad_metric_expectation(gs, gn, 3.0, 1.0, 2.0, 4.0);
  const double expected =
      gamma_weighted_moment(gs, 3.0, 2.0) * gamma_weighted_moment(gn, 1.0, 4.0);
  EXPECT_NEAR(got, expected, 1e-8 * expected);
}

TEST(ExhaustivePepConfig, DerivedCapMatchesExplicit) {
  const Csi csi{4.0, 0.7};
  const auto prior = CsiPrior::point_mass(csi);
  const SymbolSequence s = {1, 0};
  const SymbolSequence sh = {0, 1};
  const auto auto_cap = oracle::exhaustive_pep(csi, s, sh, prior, oracle::OracleConfig{});
  const auto explicit_cap =
      oracle::exhaustive_pep(csi, s, sh, prior, oracle::default_max_count(4.7));
  EXPECT_DOUBLE_EQ(auto_cap.probability, explicit_cap.probability);
  EXPECT_LT(auto_cap.tail_bound, 1e-9);
}

TEST(ExhaustiveMsDetect, WindowOneMatchesSsThreshold) {
  const auto prior = CsiPrior::gamma({3.29, 2.45}, {3.29, 24.5});
  const int xi = ss_threshold(prior);
  for (long long r = 0; r <= 20; ++r) {
    const auto bits = oracle::exhaustive_ms_detect(prior, std::vector<long long>{r});
    EXPECT_EQ(bits[0], r >= xi ? 1 : 0);
  }
}

TEST(ExhaustiveMsDetect, PermutationEquivariantOnDistinctCounts) {
  const auto prior = CsiPrior::gamma({3.29, 2.45}, {3.29, 24.5});
  const std::vector<long long> counts = {9, 0, 4, 15, 2};
  const auto base = oracle::exhaustive_ms_detect(prior, counts);
  std::vector<std::size_t> perm = {3, 0, 4, 1, 2};
  std::vector<long long> permuted(counts.size());
  for (std::size_t i = 0; i < perm.size(); ++i) permuted[i] = counts[perm[i]];
  const auto det = oracle::exhaustive_ms_detect(prior, permuted);
  for (std::size_t i = 0; i < perm.size(); ++i) EXPECT_EQ(det[i], base[perm[i]]);
}

TEST(ExhaustivePep, SelfPairIsZero) {
  const Csi csi{0.0, 1.0};
  const auto prior = CsiPrior::point_mass({2.0, 0.5});
  const SymbolSequence s = {1, 0};
  const auto res = oracle::exhaustive_pep(csi, s, s, prior, 25);
  EXPECT_DOUBLE_EQ(res.probability, 0.0);
}

TEST(ExhaustivePep, TruncationWithinReportedTail) {
  const Csi csi{4.0, 0.7};
  const auto prior = CsiPrior::gamma({2.0, 0.6}, {2.0, 4.0});
  const SymbolSequence s = {1, 0};
  const SymbolSequence sh = {0, 1};
  const auto a = oracle::exhaustive_pep(csi, s, sh, prior, 40);
  const auto b = oracle::exhaustive_pep(csi, s, sh, prior, 60);
  EXPECT_NEAR(a.probability, b.probability, a.tail_bound + 1e-12);
  EXPECT_LT(b.tail_bound, a.tail_bound + 1e-15);
}

}  // namespace
}  // namespace mclink
