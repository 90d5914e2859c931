// Statistical channel-state knowledge used by the non-coherent detectors:
// either a Gamma model per component (closed-form moments) or stored CSI
// samples (Monte Carlo moments). A point mass is a single-sample prior.
#pragma once

#include <cmath>
#include <memory>
#include <mutex>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "mclink/channel.hpp"
#include "mclink/gamma_model.hpp"
#include "mclink/math.hpp"

namespace mclink {

namespace detail {

// ln E{x^a e^{-bx}} over a fixed sample set, memoized per (b, a). Every
// detector metric uses integer a and b, so a single table per b serves all
// queries against one stored sample set.
class SampleMoments {
 public:
  explicit SampleMoments(std::vector<double> samples) : x_(std::move(samples)) {
    if (x_.empty()) throw std::domain_error("sample prior: empty sample set");
    lx_.reserve(x_.size());
    double m = 0.0;
    for (double v : x_) {
      if (!(v >= 0) || !std::isfinite(v))
        throw std::domain_error("sample prior: samples must be finite and >= 0");
      lx_.push_back(v > 0 ? std::log(v) : neg_inf);
      m += v;
    }
    mean_ = m / static_cast<double>(x_.size());
  }

  double mean() const { return mean_; }
  std::size_t size() const { return x_.size(); }
  double sample(std::size_t i) const { return x_[i]; }

  double log_moment(long long a, int b) const {
    if (a < 0 || b < 0) throw std::domain_error("sample prior: a, b must be >= 0");
    std::lock_guard<std::mutex> lock(mu_);
    auto& table = memo_[static_cast<std::size_t>(b)];
    while (static_cast<long long>(table.size()) <= a) {
      table.push_back(compute(static_cast<long long>(table.size()), b));
    }
    return table[static_cast<std::size_t>(a)];
  }

 private:
  double compute(long long a, int b) const {
    // logsumexp of a*ln(x_i) - b*x_i, minus ln(n). a = 0 contributes 0
    // even for x_i = 0 (x^0 = 1).
    const double ad = static_cast<double>(a);
    double m = neg_inf;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double t = (a == 0 ? 0.0 : ad * lx_[i]) - b * x_[i];
      if (t > m) m = t;
    }
    if (m == neg_inf) return neg_inf;
    double s = 0.0;
    for (std::size_t i = 0; i < x_.size(); ++i) {
      const double t = (a == 0 ? 0.0 : ad * lx_[i]) - b * x_[i];
      s += std::exp(t - m);
    }
    return m + std::log(s / static_cast<double>(x_.size()));
  }

  std::vector<double> x_;
  std::vector<double> lx_;
  double mean_ = 0.0;
  mutable std::mutex mu_;
  mutable std::vector<std::vector<double>> memo_{64};
};

}  // namespace detail

/// Immutable prior over (mean_signal, mean_noise); safe to share across
/// threads after construction.
class CsiPrior {
 public:
  static CsiPrior gamma(const GammaParams& signal, const GammaParams& noise) {
    signal.validate();
    noise.validate();
    CsiPrior p;
    p.gamma_signal_ = signal;
    p.gamma_noise_ = noise;
    p.is_gamma_ = true;
    return p;
  }

  static CsiPrior samples(std::vector<double> signal, std::vector<double> noise) {
    CsiPrior p;
    p.signal_samples_ = std::make_shared<detail::SampleMoments>(std::move(signal));
    p.noise_samples_ = std::make_shared<detail::SampleMoments>(std::move(noise));
    return p;
  }

  static CsiPrior point_mass(const Csi& csi) {
    csi.validate();
    return samples({csi.mean_signal}, {csi.mean_noise});
  }

  bool is_gamma() const { return is_gamma_; }
  const GammaParams& signal_gamma() const { return require_gamma(gamma_signal_); }
  const GammaParams& noise_gamma() const { return require_gamma(gamma_noise_); }

  double mean_signal() const {
    return is_gamma_ ? gamma_signal_.mean() : signal_samples_->mean();
  }
  double mean_noise() const {
    return is_gamma_ ? gamma_noise_.mean() : noise_samples_->mean();
  }

  /// ln E{mean_signal^a e^{-b*mean_signal}}.
  double log_moment_signal(long long a, int b) const {
    return is_gamma_ ? gamma_log_weighted_moment(gamma_signal_, static_cast<double>(a), b)
                     : signal_samples_->log_moment(a, b);
  }

  /// ln E{mean_noise^a e^{-b*mean_noise}}.
  double log_moment_noise(long long a, int b) const {
    return is_gamma_ ? gamma_log_weighted_moment(gamma_noise_, static_cast<double>(a), b)
                     : noise_samples_->log_moment(a, b);
  }

  /// One CSI draw from the prior (sample priors draw uniformly from the
  /// stored set).
  Csi draw(std::mt19937_64& rng) const {
    Csi csi;
    if (is_gamma_) {
      std::gamma_distribution<double> ds(gamma_signal_.shape, 1.0 / gamma_signal_.rate);
      std::gamma_distribution<double> dn(gamma_noise_.shape, 1.0 / gamma_noise_.rate);
      csi.mean_signal = ds(rng);
      csi.mean_noise = dn(rng);
    } else {
      std::uniform_int_distribution<std::size_t> us(0, signal_samples_->size() - 1);
      std::uniform_int_distribution<std::size_t> un(0, noise_samples_->size() - 1);
      csi.mean_signal = signal_samples_->sample(us(rng));
      csi.mean_noise = noise_samples_->sample(un(rng));
    }
    return csi;
  }

 private:
  CsiPrior() = default;
  const GammaParams& require_gamma(const GammaParams& g) const {
    if (!is_gamma_) throw std::logic_error("CsiPrior: not a Gamma prior");
    return g;
  }

  bool is_gamma_ = false;
  GammaParams gamma_signal_;
  GammaParams gamma_noise_;
  std::shared_ptr<detail::SampleMoments> signal_samples_;
  std::shared_ptr<detail::SampleMoments> noise_samples_;
};

}  // namespace mclink
