// Gamma model for channel-state statistics: density, closed-form
// exponential-weighted moments E{x^a e^{-bx}}, moment-anchored parameter
// mapping, and weighted-MSE fitting against an empirical histogram.
#pragma once

#include <cmath>
#include <functional>
#include <istream>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mclink/math.hpp"

namespace mclink {

/// Shape/rate parameterization.
struct GammaParams {
  double shape = 1.0;  // alpha
  double rate = 1.0;   // beta

  void validate() const {
    if (!(shape > 0) || !(rate > 0))
      throw std::domain_error("GammaParams: shape and rate must be > 0");
  }
  double mean() const { return shape / rate; }
  double variance() const { return shape / (rate * rate); }
};

inline double gamma_pdf(const GammaParams& p, double x) {
  p.validate();
  if (x < 0.0) return 0.0;
  if (x == 0.0) {
    if (p.shape < 1.0) return std::numeric_limits<double>::infinity();
    if (p.shape == 1.0) return p.rate;
    return 0.0;
  }
  return std::exp(p.shape * std::log(p.rate) + (p.shape - 1.0) * std::log(x) -
                  p.rate * x - std::lgamma(p.shape));
}

/// ln E{x^a e^{-bx}} under Gamma(shape, rate):
/// lnGamma(a+alpha) + alpha*ln(beta) - lnGamma(alpha) - (a+alpha)*ln(b+beta).
inline double gamma_log_weighted_moment(const GammaParams& p, double a, double b) {
  p.validate();
  if (!(a >= 0)) throw std::domain_error("gamma_log_weighted_moment: a must be >= 0");
  if (!(b + p.rate > 0)) throw std::domain_error("gamma_log_weighted_moment: b + rate must be > 0");
  return std::lgamma(a + p.shape) + p.shape * std::log(p.rate) - std::lgamma(p.shape) -
         (a + p.shape) * std::log(b + p.rate);
}

inline double gamma_weighted_moment(const GammaParams& p, double a, double b) {
  return std::exp(gamma_log_weighted_moment(p, a, b));
}

/// Unique (shape, rate) with the given mean and variance.
inline GammaParams moments_to_gamma(double mean, double variance) {
  if (!(mean > 0) || !(variance > 0))
    throw std::domain_error("moments_to_gamma: mean and variance must be > 0");
  return {mean * mean / variance, mean / variance};
}

/// Sample mean and unbiased sample variance.
inline std::pair<double, double> empirical_moments(std::span<const double> samples) {
  if (samples.size() < 2) throw std::domain_error("empirical_moments: need >= 2 samples");
  double mean = 0.0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  double ss = 0.0;
  for (double x : samples) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(samples.size() - 1)};
}

/// Binned density estimate. Edges are strictly ascending; densities are
/// per-unit-x values whose Riemann sum over the bins must be within 1e-3
/// of one.
struct EmpiricalPdf {
  std::vector<double> bin_edges;  // size = bins + 1
  std::vector<double> densities;  // size = bins

  void validate() const {
    if (bin_edges.size() < 2 || densities.size() + 1 != bin_edges.size())
      throw std::domain_error("EmpiricalPdf: inconsistent sizes");
    double mass = 0.0;
    for (std::size_t i = 0; i + 1 < bin_edges.size(); ++i) {
      if (!(bin_edges[i + 1] > bin_edges[i]))
        throw std::domain_error("EmpiricalPdf: edges must be strictly ascending");
      if (!(densities[i] >= 0)) throw std::domain_error("EmpiricalPdf: negative density");
      mass += densities[i] * (bin_edges[i + 1] - bin_edges[i]);
    }
    if (std::abs(mass - 1.0) > 1e-3)
      throw std::domain_error("EmpiricalPdf: densities do not integrate to 1");
  }

  std::size_t bins() const { return densities.size(); }
  double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
  double width(std::size_t i) const { return bin_edges[i + 1] - bin_edges[i]; }

  /// Midpoint-rule mean and variance of the binned density.
  std::pair<double, double> moments() const {
    double m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < bins(); ++i) {
      const double w = densities[i] * width(i);
      m1 += w * center(i);
      m2 += w * center(i) * center(i);
    }
    return {m1, m2 - m1 * m1};
  }
};

/// Equal-width histogram over [0, max(samples)] normalized to unit mass.
inline EmpiricalPdf build_histogram(std::span<const double> samples, int bins) {
  if (bins < 1) throw std::domain_error("build_histogram: bins must be >= 1");
  if (samples.size() < 2) throw std::domain_error("build_histogram: need >= 2 samples");
  double hi = 0.0;
  for (double x : samples) {
    if (!(x >= 0)) throw std::domain_error("build_histogram: samples must be >= 0");
    hi = std::max(hi, x);
  }
  if (!(hi > 0)) throw std::domain_error("build_histogram: all samples are zero");
  hi *= 1.0 + 1e-9;  // keep the max inside the last bin
  EmpiricalPdf pdf;
  pdf.bin_edges.resize(static_cast<std::size_t>(bins) + 1);
  pdf.densities.assign(static_cast<std::size_t>(bins), 0.0);
  for (int i = 0; i <= bins; ++i)
    pdf.bin_edges[static_cast<std::size_t>(i)] = hi * i / bins;
  const double w = hi / bins;
  const double unit = 1.0 / (w * static_cast<double>(samples.size()));
  for (double x : samples) {
    auto i = static_cast<std::size_t>(std::min<long long>(bins - 1, static_cast<long long>(x / w)));
    pdf.densities[i] += unit;
  }
  return pdf;
}

/// Reads a histogram from text: lines of either "center density" (edges
/// reconstructed from midpoints) or "edge_lo edge_hi density". Blank lines
/// and lines starting with '#' are skipped.
inline EmpiricalPdf load_empirical_pdf(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (row.size() != 2 && row.size() != 3)
      throw std::runtime_error("histogram file: expected 2 or 3 columns per line");
    if (!rows.empty() && rows.back().size() != row.size())
      throw std::runtime_error("histogram file: mixed column counts");
    rows.push_back(std::move(row));
  }
  if (rows.size() < 2) throw std::runtime_error("histogram file: need >= 2 rows");
  EmpiricalPdf pdf;
  if (rows.front().size() == 3) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (i == 0) pdf.bin_edges.push_back(rows[i][0]);
      else if (std::abs(rows[i][0] - pdf.bin_edges.back()) > 1e-12 * std::abs(rows[i][0]) + 1e-300)
        throw std::runtime_error("histogram file: bin edges not contiguous");
      pdf.bin_edges.push_back(rows[i][1]);
      pdf.densities.push_back(rows[i][2]);
    }
  } else {
    // centers -> edges at midpoints, end bins extended symmetrically
    std::vector<double> c, d;
    for (auto& r : rows) {
      c.push_back(r[0]);
      d.push_back(r[1]);
    }
    pdf.bin_edges.push_back(c.front() - 0.5 * (c[1] - c[0]));
    for (std::size_t i = 0; i + 1 < c.size(); ++i) pdf.bin_edges.push_back(0.5 * (c[i] + c[i + 1]));
    pdf.bin_edges.push_back(c.back() + 0.5 * (c[c.size() - 1] - c[c.size() - 2]));
    pdf.densities = std::move(d);
  }
  pdf.validate();
  return pdf;
}

struct GammaFit {
  GammaParams params;
  double objective = 0.0;        // weighted MSE at the returned point
  double center_objective = 0.0; // objective at the moment-matched center
};

/// Weighted-MSE grid fit of a Gamma density to a histogram. The search box
/// is centered at the moment-matched (shape, rate) = (mu^2/var, mu/var) and
/// spans a relative half-width delta per axis; ties break toward smaller
/// shape, then smaller rate.
inline GammaFit fit_gamma(const EmpiricalPdf& hist,
                          const std::function<double(double)>& weight, double delta,
                          int grid) {
  hist.validate();
  if (delta < 0) throw std::domain_error("fit_gamma: delta must be >= 0");
  if (grid < 2) throw std::domain_error("fit_gamma: grid must be >= 2");
  const auto [mu, var] = hist.moments();
  if (!(var > 0) || !(mu > 0))
    throw std::domain_error("fit_gamma: degenerate histogram (point mass)");
  const GammaParams center = moments_to_gamma(mu, var);

  auto objective_at = [&](const GammaParams& g) {
    double obj = 0.0;
    for (std::size_t i = 0; i < hist.bins(); ++i) {
      const double x = hist.center(i);
      const double diff = hist.densities[i] - gamma_pdf(g, x);
      obj += weight(x) * diff * diff * hist.width(i);
    }
    return obj;
  };

  GammaFit best;
  best.center_objective = objective_at(center);
  if (delta == 0.0) {
    best.params = center;
    best.objective = best.center_objective;
    return best;
  }
  best.objective = std::numeric_limits<double>::infinity();
  for (int ia = 0; ia < grid; ++ia) {
    const double a = center.shape * ((1.0 - delta) + 2.0 * delta * ia / (grid - 1));
    for (int ib = 0; ib < grid; ++ib) {
      const double b = center.rate * ((1.0 - delta) + 2.0 * delta * ib / (grid - 1));
      if (!(a > 0) || !(b > 0)) continue;
      const double obj = objective_at({a, b});
      if (obj < best.objective) {
        best.objective = obj;
        best.params = {a, b};
      }
    }
  }
  return best;
}

}  // namespace mclink
