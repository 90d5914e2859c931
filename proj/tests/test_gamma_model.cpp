#include "mclink/gamma_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mclink/oracle.hpp"
#include "mclink/rng.hpp"

namespace mclink {
namespace {

TEST(GammaPdf, HandValues) {
  EXPECT_DOUBLE_EQ(gamma_pdf({1.0, 1.0}, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(gamma_pdf({2.0, 3.0}, -1.0), 0.0);
  EXPECT_NEAR(gamma_pdf({2.0, 3.0}, 1.0), 9.0 * std::exp(-3.0), 1e-15);
}

TEST(GammaPdf, IntegratesToOne) {
  for (const GammaParams g : {GammaParams{0.7, 2.0}, GammaParams{3.0, 0.5}, GammaParams{12.0, 9.0}}) {
    // a = 0, b = 0 weighted moment is the total mass.
    EXPECT_NEAR(oracle::quad_weighted_moment(g, 0.0, 0.0), 1.0, 1e-6);
  }
}

TEST(WeightedMoment, HandValues) {
  EXPECT_NEAR(gamma_weighted_moment({2.0, 1.0}, 0.0, 0.0), 1.0, 1e-14);
  EXPECT_NEAR(gamma_weighted_moment({1.0, 1.0}, 1.0, 0.0), 1.0, 1e-14);
  EXPECT_NEAR(gamma_weighted_moment({2.0, 3.0}, 2.0, 1.0), 54.0 / 256.0, 1e-14);
}

TEST(WeightedMoment, LogAndLinearFormsAgree) {
  const GammaParams g{2.5, 1.5};
  for (double a : {0.0, 1.0, 7.0, 40.0})
    for (double b : {0.0, 0.3, 4.0}) {
      const double lin = gamma_weighted_moment(g, a, b);
      const double lg = gamma_log_weighted_moment(g, a, b);
      EXPECT_NEAR(std::log(lin), lg, 1e-12 * std::max(1.0, std::abs(lg)));
    }
}

TEST(MomentsToGamma, HandValuesAndRoundTrip) {
  const GammaParams a = moments_to_gamma(2.0, 4.0);
  EXPECT_DOUBLE_EQ(a.shape, 1.0);
  EXPECT_DOUBLE_EQ(a.rate, 0.5);
  const GammaParams b = moments_to_gamma(3.0, 3.0);
  EXPECT_DOUBLE_EQ(b.shape, 3.0);
  EXPECT_DOUBLE_EQ(b.rate, 1.0);
  const GammaParams c = moments_to_gamma(3.0, 1.0);
  EXPECT_DOUBLE_EQ(c.shape, 9.0);
  EXPECT_DOUBLE_EQ(c.rate, 3.0);

  const GammaParams g{4.2, 1.7};
  const GammaParams back = moments_to_gamma(g.mean(), g.variance());
  EXPECT_NEAR(back.shape, g.shape, 1e-12);
  EXPECT_NEAR(back.rate, g.rate, 1e-12);

  EXPECT_THROW(moments_to_gamma(0.0, 1.0), std::domain_error);
  EXPECT_THROW(moments_to_gamma(1.0, 0.0), std::domain_error);
}

TEST(EmpiricalMoments, HandValues) {
  EXPECT_EQ(empirical_moments(std::vector<double>{1, 1, 1}),
            (std::pair<double, double>{1.0, 0.0}));
  EXPECT_EQ(empirical_moments(std::vector<double>{0, 2}),
            (std::pair<double, double>{1.0, 2.0}));
  EXPECT_THROW(empirical_moments(std::vector<double>{1}), std::domain_error);
}

TEST(EmpiricalMoments, PoissonDraws) {
  auto rng = make_rng(3);
  std::poisson_distribution<long long> pois(7.0);
  std::vector<double> xs(1000000);
  for (auto& x : xs) x = static_cast<double>(pois(rng));
  const auto [mean, var] = empirical_moments(xs);
  const double se = std::sqrt(7.0 / static_cast<double>(xs.size()));
  EXPECT_NEAR(mean, 7.0, 4.0 * se);
  const double se_var = std::sqrt((7.0 + 2.0 * 49.0) / static_cast<double>(xs.size()));
  EXPECT_NEAR(var, 7.0, 4.0 * se_var);
}

EmpiricalPdf histogram_of_gamma_density(const GammaParams& g, int bins, double hi) {
  // Bin densities taken as exact midpoint evaluations, then renormalized.
  EmpiricalPdf pdf;
  pdf.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  for (int i = 0; i <= bins; ++i) pdf.bin_edges[static_cast<std::size_t>(i)] = hi * i / bins;
  pdf.densities.resize(static_cast<std::size_t>(bins));
  double mass = 0.0;
  for (int i = 0; i < bins; ++i) {
    pdf.densities[static_cast<std::size_t>(i)] = gamma_pdf(g, pdf.center(static_cast<std::size_t>(i)));
    mass += pdf.densities[static_cast<std::size_t>(i)] * pdf.width(static_cast<std::size_t>(i));
  }
  for (auto& d : pdf.densities) d /= mass;
  return pdf;
}

TEST(FitGamma, RecoversKnownDensity) {
  const GammaParams truth{2.0, 1.0};
  const auto hist = histogram_of_gamma_density(truth, 400, 25.0);
  const auto fit = fit_gamma(hist, [](double) { return 1.0; }, 0.5, 101);
  // Within one grid step of the truth.
  const auto [mu, var] = hist.moments();
  const GammaParams center = moments_to_gamma(mu, var);
  const double step_a = center.shape * 1.0 / 100.0;
  const double step_b = center.rate * 1.0 / 100.0;
  EXPECT_NEAR(fit.params.shape, truth.shape, step_a + 0.02);
  EXPECT_NEAR(fit.params.rate, truth.rate, step_b + 0.02);
  EXPECT_LE(fit.objective, fit.center_objective + 1e-18);
}

TEST(FitGamma, ZeroDeltaIsMomentMatch) {
  const GammaParams truth{3.0, 2.0};
  const auto hist = histogram_of_gamma_density(truth, 200, 12.0);
  const auto [mu, var] = hist.moments();
  const GammaParams center = moments_to_gamma(mu, var);
  const auto fit = fit_gamma(hist, [](double) { return 1.0; }, 0.0, 11);
  EXPECT_DOUBLE_EQ(fit.params.shape, center.shape);
  EXPECT_DOUBLE_EQ(fit.params.rate, center.rate);
}

TEST(FitGamma, SampleHistogramSelfConsistency) {
  auto rng = make_rng(31);
  std::gamma_distribution<double> gd(2.0, 1.0);
  std::vector<double> xs(1000000);
  for (auto& x : xs) x = gd(rng);
  const auto hist = build_histogram(xs, 120);
  const auto fit = fit_gamma(hist, [](double) { return 1.0; }, 0.5, 101);
  EXPECT_NEAR(fit.params.shape, 2.0, 0.08);
  EXPECT_NEAR(fit.params.rate, 1.0, 0.05);
  EXPECT_LE(fit.objective, fit.center_objective + 1e-18);
}

TEST(FitGamma, DegenerateHistogramRejected) {
  EmpiricalPdf pdf;
  pdf.bin_edges = {0.0, 1.0};
  pdf.densities = {1.0};
  EXPECT_THROW(fit_gamma(pdf, [](double) { return 1.0; }, 0.5, 11), std::domain_error);
}

TEST(EmpiricalPdfIO, TwoColumnCenters) {
  std::istringstream in("# center density\n0.5 0.25\n1.5 0.5\n2.5 0.25\n");
  const auto pdf = load_empirical_pdf(in);
  ASSERT_EQ(pdf.bins(), 3u);
  EXPECT_DOUBLE_EQ(pdf.bin_edges.front(), 0.0);
  EXPECT_DOUBLE_EQ(pdf.bin_edges.back(), 3.0);
  EXPECT_DOUBLE_EQ(pdf.densities[1], 0.5);
}

TEST(EmpiricalPdfIO, ThreeColumnEdges) {
  std::istringstream in("0 1 0.25\n1 2 0.5\n2 3 0.25\n");
  const auto pdf = load_empirical_pdf(in);
  ASSERT_EQ(pdf.bins(), 3u);
  EXPECT_DOUBLE_EQ(pdf.bin_edges[1], 1.0);
  EXPECT_DOUBLE_EQ(pdf.densities[2], 0.25);
}

TEST(EmpiricalPdfIO, RejectsNonContiguousEdges) {
  std::istringstream in("0 1 0.5\n1.5 2 0.5\n");
  EXPECT_THROW(load_empirical_pdf(in), std::runtime_error);
}

}  // namespace
}  // namespace mclink
