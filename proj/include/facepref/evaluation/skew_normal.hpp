#pragma once

// Skew-normal distribution with location xi, scale omega and shape alpha:
//
//   pdf(x) = 2/omega · phi(z) · Phi(alpha z),  z = (x - xi) / omega
//
// Maximum-likelihood fitting runs Newton iterations on (xi, log omega, alpha)
// with an analytic Hessian, started from the method-of-moments estimate.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facepref/errors.hpp"
#include "facepref/random.hpp"

namespace facepref {

inline double normal_pdf(double x) noexcept {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

namespace detail {

// Series factor S in Phi(t) ~ phi(t) S / (-t) for t -> -inf.
inline double lower_tail_series(double t) noexcept {
  const double u = 1.0 / (t * t);
  return 1.0 - u * (1.0 - 3.0 * u * (1.0 - 5.0 * u * (1.0 - 7.0 * u)));
}

}  // namespace detail

inline double log_normal_cdf(double t) noexcept {
  if (t < -20.0) {
    return -0.5 * t * t - 0.5 * std::log(2.0 * std::numbers::pi) - std::log(-t) +
           std::log(detail::lower_tail_series(t));
  }
  return std::log(normal_cdf(t));
}

/// phi(t) / Phi(t).
inline double normal_hazard_ratio(double t) noexcept {
  if (t < -20.0) return -t / detail::lower_tail_series(t);
  return normal_pdf(t) / normal_cdf(t);
}

struct NormalFit {
  double mean = 0.0;
  /// Maximum-likelihood (population) standard deviation.
  double std = 0.0;
  std::size_t n = 0;
  /// Fewer than two samples: std is not meaningful.
  bool degenerate = false;
};

inline NormalFit fit_normal(std::span<const double> samples) {
  NormalFit fit;
  fit.n = samples.size();
  if (samples.empty()) throw InvalidArgument("cannot fit an empty sample");
  double sum = 0.0;
  for (double x : samples) sum += x;
  fit.mean = sum / static_cast<double>(samples.size());
  double ss = 0.0;
  for (double x : samples) ss += (x - fit.mean) * (x - fit.mean);
  fit.std = std::sqrt(ss / static_cast<double>(samples.size()));
  fit.degenerate = samples.size() < 2;
  return fit;
}

struct SkewNormalFit {
  double xi = 0.0;
  double omega = 1.0;
  double alpha = 0.0;
  double log_likelihood = 0.0;
  std::size_t iterations = 0;
  bool converged = false;

  double log_pdf(double x) const noexcept {
    const double z = (x - xi) / omega;
    return std::numbers::ln2 - std::log(omega) - 0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi) +
           log_normal_cdf(alpha * z);
  }
  double pdf(double x) const noexcept { return std::exp(log_pdf(x)); }

  double delta() const noexcept { return alpha / std::sqrt(1.0 + alpha * alpha); }
  double mean() const noexcept { return xi + omega * delta() * std::sqrt(2.0 / std::numbers::pi); }
};

inline double draw_skew_normal(Rng& rng, double xi, double omega, double alpha) {
  const double delta = alpha / std::sqrt(1.0 + alpha * alpha);
  const double u0 = rng.normal();
  const double u1 = rng.normal();
  return xi + omega * (delta * std::abs(u0) + std::sqrt(1.0 - delta * delta) * u1);
}

struct SkewNormalFitOptions {
  /// Shape is kept in [-alpha_bound, alpha_bound].
  double alpha_bound = 50.0;
  /// Hold the shape at this value and fit location and scale only.
  std::optional<double> fixed_alpha;
  double tol = 1e-10;
  std::size_t max_iter = 500;
};

/// Method-of-moments estimate, with the sample skewness clipped to the
/// range a skew-normal can reach.
inline SkewNormalFit skew_normal_moments(std::span<const double> samples, const SkewNormalFitOptions& options = {}) {
  const NormalFit normal = fit_normal(samples);
  double m3 = 0.0;
  for (double x : samples) m3 += std::pow(x - normal.mean, 3);
  m3 /= static_cast<double>(samples.size());
  const double skew = normal.std > 0.0 ? m3 / std::pow(normal.std, 3) : 0.0;

  double delta = 0.0;
  if (options.fixed_alpha) {
    delta = *options.fixed_alpha / std::sqrt(1.0 + *options.fixed_alpha * *options.fixed_alpha);
  } else {
    const double g = std::min(std::abs(skew), 0.99);
    const double g23 = std::pow(g, 2.0 / 3.0);
    const double c = std::pow((4.0 - std::numbers::pi) / 2.0, 2.0 / 3.0);
    delta = std::copysign(std::sqrt(std::numbers::pi / 2.0 * g23 / (g23 + c)), skew);
    const double max_delta = options.alpha_bound / std::sqrt(1.0 + options.alpha_bound * options.alpha_bound);
    delta = std::clamp(delta, -max_delta, max_delta);
  }
  SkewNormalFit fit;
  fit.alpha = options.fixed_alpha ? *options.fixed_alpha : delta / std::sqrt(1.0 - delta * delta);
  fit.omega = normal.std / std::sqrt(1.0 - 2.0 * delta * delta / std::numbers::pi);
  fit.xi = normal.mean - fit.omega * delta * std::sqrt(2.0 / std::numbers::pi);
  return fit;
}

namespace detail {

struct SkewNormalState {
  double value = 0.0;  // mean log-likelihood
  Eigen::Vector3d gradient = Eigen::Vector3d::Zero();
  Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();
};

// Derivatives with respect to (xi, eta = log omega, alpha), averaged over samples.
inline SkewNormalState skew_normal_state(std::span<const double> samples, double xi, double eta, double alpha) {
  const double omega = std::exp(eta);
  SkewNormalState s;
  for (double x : samples) {
    const double z = (x - xi) / omega;
    const double u = alpha * z;
    const double r = normal_hazard_ratio(u);
    const double dr = -r * (u + r);
    s.value += std::numbers::ln2 - eta - 0.5 * z * z + log_normal_cdf(u);

    const double lz = -z + alpha * r;
    const double la = z * r;
    const double lzz = -1.0 + alpha * alpha * dr;
    const double lza = r + alpha * z * dr;
    const double laa = z * z * dr;

    s.gradient[0] += -lz / omega;
    s.gradient[1] += -1.0 - lz * z;
    s.gradient[2] += la;

    s.hessian(0, 0) += lzz / (omega * omega);
    s.hessian(0, 1) += (lzz * z + lz) / omega;
    s.hessian(1, 1) += lzz * z * z + lz * z;
    s.hessian(0, 2) += -lza / omega;
    s.hessian(1, 2) += -lza * z;
    s.hessian(2, 2) += laa;
  }
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  s.value = s.value * inv_n - 0.5 * std::log(2.0 * std::numbers::pi);
  s.gradient *= inv_n;
  s.hessian *= inv_n;
  s.hessian(1, 0) = s.hessian(0, 1);
  s.hessian(2, 0) = s.hessian(0, 2);
  s.hessian(2, 1) = s.hessian(1, 2);
  return s;
}

}  // namespace detail

inline SkewNormalFit fit_skew_normal(std::span<const double> samples, const SkewNormalFitOptions& options = {}) {
  if (samples.size() < 2) throw InvalidArgument("skew-normal fit needs at least two samples");
  const SkewNormalFit start = skew_normal_moments(samples, options);
  if (!(start.omega > 0.0) || !std::isfinite(start.omega)) {
    throw InvalidArgument("samples have zero spread; skew-normal fit is undefined");
  }
  const double bound = options.alpha_bound;
  Eigen::Vector3d theta(start.xi, std::log(start.omega), start.alpha);
  auto state = detail::skew_normal_state(samples, theta[0], theta[1], theta[2]);

  SkewNormalFit fit;
  for (std::size_t iter = 0; iter < options.max_iter; ++iter) {
    // Free coordinates: alpha is frozen when fixed or pinned at its bound
    // with the gradient pointing outward.
    std::array<bool, 3> free{true, true, true};
    if (options.fixed_alpha) free[2] = false;
    else if (std::abs(theta[2]) >= bound && state.gradient[2] * theta[2] > 0.0) free[2] = false;

    Eigen::Vector3d g = state.gradient;
    Eigen::Matrix3d h = state.hessian;
    for (int k = 0; k < 3; ++k) {
      if (free[static_cast<std::size_t>(k)]) continue;
      g[k] = 0.0;
      h.row(k).setZero();
      h.col(k).setZero();
      h(k, k) = -1.0;
    }
    fit.iterations = iter;
    if (g.lpNorm<Eigen::Infinity>() <= options.tol) {
      fit.converged = true;
      break;
    }

    // Newton ascent on a negative-definite model of the Hessian.
    Eigen::Vector3d step;
    double shift = 0.0;
    for (int attempt = 0; attempt < 60; ++attempt) {
      const Eigen::Matrix3d neg = -h + shift * Eigen::Matrix3d::Identity();
      Eigen::LLT<Eigen::Matrix3d> llt(neg);
      if (llt.info() == Eigen::Success) {
        step = llt.solve(g);
        break;
      }
      shift = shift == 0.0 ? 1e-8 * (1.0 + h.diagonal().cwiseAbs().maxCoeff()) : shift * 10.0;
    }

    bool moved = false;
    double t = 1.0;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      Eigen::Vector3d candidate = theta + t * step;
      if (!options.fixed_alpha) candidate[2] = std::clamp(candidate[2], -bound, bound);
      const auto trial = detail::skew_normal_state(samples, candidate[0], candidate[1], candidate[2]);
      if (std::isfinite(trial.value) && trial.value >= state.value) {
        theta = candidate;
        state = trial;
        moved = true;
        break;
      }
    }
    if (!moved) {
      fit.converged = g.lpNorm<Eigen::Infinity>() <= std::sqrt(options.tol);
      break;
    }
  }
  fit.xi = theta[0];
  fit.omega = std::exp(theta[1]);
  fit.alpha = theta[2];
  fit.log_likelihood = state.value * static_cast<double>(samples.size());
  return fit;
}

}  // namespace facepref
