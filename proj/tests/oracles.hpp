#pragma once

// Reference computations written independently of the library code they check.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "facepref/classifiers/logistic.hpp"
#include "facepref/classifiers/mlp.hpp"
#include "facepref/features.hpp"
#include "facepref/random.hpp"

namespace facepref::oracle {

/// Central differences of f at x, step h·max(1, |x_k|).
inline Eigen::VectorXd finite_gradient(const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
                                       double h = 1e-5) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(x[k]));
    const double keep = x[k];
    x[k] = keep + step;
    const double up = f(x);
    x[k] = keep - step;
    const double down = f(x);
    x[k] = keep;
    g[k] = (up - down) / (2.0 * step);
  }
  return g;
}

/// ‖a − b‖ / (‖a‖ + ‖b‖), zero when both vanish.
inline double relative_error(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double denom = a.norm() + b.norm();
  return denom == 0.0 ? 0.0 : (a - b).norm() / denom;
}

/// Weighted logistic loss plus (l2/2)‖w‖², straight from the definition.
inline double logistic_loss(const RowMatrix& x, std::span<const int> y, std::span<const double> c, double l2,
                            const Eigen::VectorXd& theta) {
  const Eigen::Index width = x.cols();
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double z = theta[width];
    for (Eigen::Index k = 0; k < width; ++k) z += x(i, k) * theta[k];
    const double yi = y[static_cast<std::size_t>(i)];
    // log(1 + e^z) - y z without overflow for the magnitudes used in tests.
    const double nll = z > 0 ? z + std::log1p(std::exp(-z)) - yi * z : std::log1p(std::exp(z)) - yi * z;
    total += c[static_cast<std::size_t>(i)] * nll;
  }
  double penalty = 0.0;
  for (Eigen::Index k = 0; k < width; ++k) penalty += theta[k] * theta[k];
  return static_cast<double>(total) + 0.5 * l2 * penalty;
}

/// Parameters of an MLP flattened layer by layer: weights (column-major), then bias.
inline Eigen::VectorXd flatten(const MlpParams& p) {
  std::vector<double> out;
  for (const MlpLayer& l : p.layers) {
    for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r) out.push_back(l.weights(r, c));
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) out.push_back(l.bias[r]);
  }
  return Eigen::Map<Eigen::VectorXd>(out.data(), static_cast<Eigen::Index>(out.size()));
}

inline MlpParams unflatten(const MlpParams& shape, const Eigen::VectorXd& v) {
  MlpParams p = shape;
  Eigen::Index pos = 0;
  for (MlpLayer& l : p.layers) {
    for (Eigen::Index c = 0; c < l.weights.cols(); ++c)
      for (Eigen::Index r = 0; r < l.weights.rows(); ++r) l.weights(r, c) = v[pos++];
    for (Eigen::Index r = 0; r < l.bias.size(); ++r) l.bias[r] = v[pos++];
  }
  return p;
}

/// Plain forward pass: ReLU hidden layers, linear output logit.
inline double mlp_forward(const MlpParams& p, std::span<const double> x) {
  std::vector<double> a(x.begin(), x.end());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const MlpLayer& layer = p.layers[l];
    std::vector<double> z(static_cast<std::size_t>(layer.weights.rows()));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      double s = layer.bias[r];
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) s += layer.weights(r, c) * a[static_cast<std::size_t>(c)];
      z[static_cast<std::size_t>(r)] = (l + 1 < p.layers.size()) ? std::max(0.0, s) : s;
    }
    a = std::move(z);
  }
  return a[0];
}

/// Mean weighted binary cross-entropy, −[y log σ(z) + (1−y) log(1−σ(z))].
inline double mlp_mean_bce(const MlpParams& p, const RowMatrix& x, std::span<const int> y,
                           std::span<const double> c) {
  long double total = 0.0L;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double z = mlp_forward(p, {x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())});
    const double s = 1.0 / (1.0 + std::exp(-z));
    const double yi = y[static_cast<std::size_t>(i)];
    total += c[static_cast<std::size_t>(i)] * -(yi * std::log(s) + (1.0 - yi) * std::log(1.0 - s));
  }
  return static_cast<double>(total / static_cast<long double>(x.rows()));
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting 1/2.
inline double pair_count_auc(std::span<const double> scores, std::span<const int> labels) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0) continue;
      pairs += 1.0;
      if (scores[i] > scores[j]) wins += 1.0;
      else if (scores[i] == scores[j]) wins += 0.5;
    }
  }
  return wins / pairs;
}

/// Dual objective sum(a) − ½ Σ a_i a_j y_i y_j exp(−γ‖x_i − x_j‖²).
inline double svm_dual(const RowMatrix& x, std::span<const int> labels, std::span<const double> alpha, double gamma) {
  long double total = 0.0L;
  for (std::size_t i = 0; i < labels.size(); ++i) total += alpha[i];
  long double quad = 0.0L;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    for (std::size_t j = 0; j < labels.size(); ++j) {
      const double d2 = (x.row(static_cast<Eigen::Index>(i)) - x.row(static_cast<Eigen::Index>(j))).squaredNorm();
      const double yy = (labels[i] == labels[j]) ? 1.0 : -1.0;
      quad += alpha[i] * alpha[j] * yy * std::exp(-gamma * d2);
    }
  }
  return static_cast<double>(total - 0.5L * quad);
}

}  // namespace facepref::oracle
