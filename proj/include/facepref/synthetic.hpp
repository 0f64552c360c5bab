#pragma once

// Synthetic review histories with a controllable like/dislike signal.
//
// Each profile draws a label at `like_rate`, a latent face center at its class
// mean plus N(0, sigma_between^2 I), a face count from a discretized truncated
// normal, and faces = center + N(0, sigma_within^2 I). Class means sit at
// +/- separation/2 along a seeded random unit direction.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facepref/dataset.hpp"
#include "facepref/errors.hpp"
#include "facepref/evaluation/skew_normal.hpp"
#include "facepref/random.hpp"

namespace facepref {

/// Discrete law on {min, ..., max} with P(k) proportional to the mass a
/// normal(mu, sigma) puts on [k - 1/2, k + 1/2).
class FaceCountLaw {
 public:
  FaceCountLaw(double mu, double sigma, std::size_t min, std::size_t max) : mu_(mu), sigma_(sigma), min_(min), max_(max) {
    if (min < 1 || min > max) throw InvalidArgument("face count law needs 1 <= min <= max");
    if (!(sigma > 0.0)) throw InvalidArgument("face count law needs sigma > 0");
    double total = 0.0;
    for (std::size_t k = min; k <= max; ++k) {
      const double lo = (static_cast<double>(k) - 0.5 - mu) / sigma;
      const double hi = (static_cast<double>(k) + 0.5 - mu) / sigma;
      const double mass = normal_cdf(hi) - normal_cdf(lo);
      pmf_.push_back(mass);
      total += mass;
    }
    if (!(total > 0.0)) throw InvalidArgument("face count law puts no mass on [min, max]");
    double running = 0.0;
    for (double& p : pmf_) {
      p /= total;
      running += p;
      cdf_.push_back(running);
    }
    cdf_.back() = 1.0;
  }

  /// The law whose discretized, truncated moments equal (mean, std).
  static FaceCountLaw matched(double mean, double std, std::size_t min, std::size_t max) {
    // Newton on the underlying (mu, log sigma) with a finite-difference Jacobian.
    double mu = mean;
    double log_sigma = std::log(std::max(std::sqrt(std::max(std::pow(std, 2) - 1.0 / 12.0, 1e-4)), 1e-3));
    const auto residual = [&](double m, double ls) {
      const FaceCountLaw law(m, std::exp(ls), min, max);
      return Eigen::Vector2d(law.mean() - mean, law.stddev() - std);
    };
    for (int iter = 0; iter < 100; ++iter) {
      const Eigen::Vector2d r = residual(mu, log_sigma);
      if (r.cwiseAbs().maxCoeff() < 1e-12) break;
      constexpr double h = 1e-6;
      Eigen::Matrix2d jac;
      jac.col(0) = (residual(mu + h, log_sigma) - residual(mu - h, log_sigma)) / (2 * h);
      jac.col(1) = (residual(mu, log_sigma + h) - residual(mu, log_sigma - h)) / (2 * h);
      Eigen::Vector2d step = jac.fullPivLu().solve(-r);
      if (!step.allFinite()) break;
      step = step.cwiseMax(-1.0).cwiseMin(1.0);
      mu += step[0];
      log_sigma += step[1];
    }
    return FaceCountLaw(mu, std::exp(log_sigma), min, max);
  }

  std::size_t min() const noexcept { return min_; }
  std::size_t max() const noexcept { return max_; }
  double mu() const noexcept { return mu_; }
  double sigma() const noexcept { return sigma_; }

  double probability(std::size_t k) const {
    return (k < min_ || k > max_) ? 0.0 : pmf_[k - min_];
  }

  double mean() const {
    double m = 0.0;
    for (std::size_t k = min_; k <= max_; ++k) m += static_cast<double>(k) * pmf_[k - min_];
    return m;
  }

  double stddev() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t k = min_; k <= max_; ++k) v += std::pow(static_cast<double>(k) - m, 2) * pmf_[k - min_];
    return std::sqrt(v);
  }

  std::size_t sample(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return min_ + static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), static_cast<std::ptrdiff_t>(pmf_.size()) - 1));
  }

 private:
  double mu_;
  double sigma_;
  std::size_t min_;
  std::size_t max_;
  std::vector<double> pmf_;
  std::vector<double> cdf_;
};

struct FaceCountSpec {
  double mean = 3.01;
  double std = 1.34;
  std::size_t min = 1;
  std::size_t max = 10;
};

struct SyntheticSpec {
  std::size_t n_profiles = 8130;
  double like_rate = 0.28;
  std::size_t dim = 128;
  FaceCountSpec face_count;
  /// Distance between the two class means.
  double separation = 2.0;
  double sigma_within = 1.0;
  double sigma_between = 1.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(like_rate > 0.0 && like_rate < 1.0)) throw InvalidArgument("like_rate must be in (0, 1)");
    if (!(separation >= 0.0)) throw InvalidArgument("separation must be >= 0");
    if (!(sigma_within > 0.0) || !(sigma_between > 0.0)) throw InvalidArgument("noise levels must be > 0");
    if (face_count.min < 1 || face_count.min > face_count.max) {
      throw InvalidArgument("face count range needs 1 <= min <= max");
    }
    if (dim == 0) throw InvalidArgument("dim must be >= 1");
  }

  FaceCountLaw face_count_law() const {
    return FaceCountLaw::matched(face_count.mean, face_count.std, face_count.min, face_count.max);
  }
};

/// Unit vector along which the class means differ.
inline std::vector<double> class_direction(const SyntheticSpec& spec) {
  Rng rng(derive_seed(spec.seed, 0x646972));
  std::vector<double> u(spec.dim);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& v : u) {
      v = rng.normal();
      norm += v * v;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& v : u) v /= norm;
  return u;
}

inline std::string synthetic_profile_id(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "p%06zu", i);
  return buf;
}

inline Dataset generate(const SyntheticSpec& spec) {
  spec.validate();
  const FaceCountLaw law = spec.face_count_law();
  const std::vector<double> direction = class_direction(spec);
  std::vector<Profile> profiles;
  profiles.reserve(spec.n_profiles);
  std::vector<double> center(spec.dim);
  for (std::size_t i = 0; i < spec.n_profiles; ++i) {
    Rng rng(derive_seed(spec.seed, 0x70726f66, i));
    Profile p;
    p.id = synthetic_profile_id(i);
    const bool liked = rng.bernoulli(spec.like_rate);
    p.label = liked ? Label::like : Label::dislike;
    const double offset = (liked ? 0.5 : -0.5) * spec.separation;
    for (std::size_t k = 0; k < spec.dim; ++k) center[k] = offset * direction[k] + spec.sigma_between * rng.normal();
    const std::size_t faces = law.sample(rng);
    for (std::size_t f = 0; f < faces; ++f) {
      std::vector<double> values(spec.dim);
      for (std::size_t k = 0; k < spec.dim; ++k) values[k] = center[k] + spec.sigma_within * rng.normal();
      p.faces.emplace_back(std::move(values));
    }
    profiles.push_back(std::move(p));
  }
  char note[256];
  std::snprintf(note, sizeof(note),
                "synthetic: n=%zu like_rate=%g dim=%zu faces=(%g,%g,%zu,%zu) separation=%.17g "
                "sigma_within=%g sigma_between=%g seed=%llu",
                spec.n_profiles, spec.like_rate, spec.dim, spec.face_count.mean, spec.face_count.std,
                spec.face_count.min, spec.face_count.max, spec.separation, spec.sigma_within, spec.sigma_between,
                static_cast<unsigned long long>(spec.seed));
  return Dataset(spec.dim, std::move(profiles), note);
}

/// Standard deviation of a profile's averaged feature along the class axis,
/// given f faces.
inline double effective_sigma(const SyntheticSpec& spec, std::size_t faces) {
  return std::sqrt(spec.sigma_between * spec.sigma_between +
                   spec.sigma_within * spec.sigma_within / static_cast<double>(faces));
}

/// Accuracy of the midpoint rule on the averaged feature, knowing the true
/// class means: E_f[Phi(s / (2 sigma_eff(f)))] over the face-count law.
/// Equals the Bayes accuracy when both classes are equally likely.
inline double bayes_accuracy(const SyntheticSpec& spec) {
  spec.validate();
  const FaceCountLaw law = spec.face_count_law();
  double acc = 0.0;
  for (std::size_t k = law.min(); k <= law.max(); ++k) {
    acc += law.probability(k) * normal_cdf(spec.separation / (2.0 * effective_sigma(spec, k)));
  }
  return acc;
}

/// Bayes accuracy under the actual like_rate: the likelihood-ratio rule with
/// the prior-shifted threshold, per face count.
inline double bayes_accuracy_with_prior(const SyntheticSpec& spec) {
  spec.validate();
  const FaceCountLaw law = spec.face_count_law();
  const double p = spec.like_rate;
  const double s = spec.separation;
  double acc = 0.0;
  for (std::size_t k = law.min(); k <= law.max(); ++k) {
    const double sigma = effective_sigma(spec, k);
    double correct = 0.0;
    if (s == 0.0) {
      correct = std::max(p, 1.0 - p);
    } else {
      // like iff projection t >= t*, with classes at +/- s/2.
      const double t_star = sigma * sigma * std::log((1.0 - p) / p) / s;
      correct = p * normal_cdf((s / 2.0 - t_star) / sigma) + (1.0 - p) * normal_cdf((s / 2.0 + t_star) / sigma);
    }
    acc += law.probability(k) * correct;
  }
  return acc;
}

/// Separation at which bayes_accuracy(spec) equals `target` (bisection).
inline double calibrate_separation(SyntheticSpec spec, double target) {
  if (!(target > 0.5 && target < 1.0)) throw InvalidArgument("target accuracy must be in (0.5, 1)");
  double lo = 0.0;
  double hi = 1.0;
  spec.separation = hi;
  while (bayes_accuracy(spec) < target) {
    hi *= 2.0;
    spec.separation = hi;
  }
  for (int iter = 0; iter < 200 && hi - lo > 1e-14 * hi; ++iter) {
    spec.separation = 0.5 * (lo + hi);
    if (bayes_accuracy(spec) < target) lo = spec.separation; else hi = spec.separation;
  }
  return 0.5 * (lo + hi);
}

}  // namespace facepref
