#pragma once

// L2-regularized, class-weighted logistic regression fitted by damped Newton
// iterations with Armijo backtracking.
//
//   F(w, b) = sum_i c_i [softplus(z_i) - y_i z_i] + (l2 / 2) ||w||^2,
//   z_i = x_i . w + b
//
// The bias is unpenalized. The parameter vector theta stacks w then b.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facepref/classifiers/types.hpp"
#include "facepref/errors.hpp"

namespace facepref {

inline double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(1 + e^z) without overflow.
inline double softplus(double z) noexcept {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

inline double logistic_score(const LogisticParams& params, std::span<const double> x) {
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
  return sigmoid(params.weights.dot(v) + params.bias);
}

/// Objective value at `theta`; fills the gradient and Hessian when requested.
inline double logistic_objective(const RowMatrix& x, std::span<const int> labels,
                                 std::span<const double> sample_weights, double l2,
                                 const Eigen::VectorXd& theta, Eigen::VectorXd* gradient = nullptr,
                                 Eigen::MatrixXd* hessian = nullptr) {
  const Eigen::Index n = x.rows();
  const Eigen::Index width = x.cols();
  if (theta.size() != width + 1) throw ShapeError("theta must have width + 1 entries");
  const auto w = theta.head(width);
  const double b = theta[width];
  const Eigen::VectorXd z = (x * w).array() + b;

  // extended-precision sum
  long double value = 0.5L * l2 * w.squaredNorm();
  Eigen::VectorXd residual(n);
  Eigen::VectorXd curvature(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double c = sample_weights[static_cast<std::size_t>(i)];
    const double y = labels[static_cast<std::size_t>(i)];
    value += static_cast<long double>(c * (softplus(z[i]) - y * z[i]));
    const double p = sigmoid(z[i]);
    residual[i] = c * (p - y);
    curvature[i] = c * p * (1.0 - p);
  }
  if (gradient != nullptr) {
    gradient->resize(width + 1);
    gradient->head(width).noalias() = x.transpose() * residual;
    gradient->head(width) += l2 * w;
    (*gradient)[width] = residual.sum();
  }
  if (hessian != nullptr) {
    Eigen::MatrixXd scaled(n, width + 1);
    const Eigen::ArrayXd root = curvature.array().sqrt();
    scaled.leftCols(width) = x.array().colwise() * root;
    scaled.col(width) = root.matrix();
    hessian->setZero(width + 1, width + 1);
    hessian->selfadjointView<Eigen::Lower>().rankUpdate(scaled.transpose());
    *hessian = hessian->selfadjointView<Eigen::Lower>();
    hessian->diagonal().head(width).array() += l2;
  }
  return static_cast<double>(value);
}

struct LogisticFit {
  LogisticParams params;
  TrainMeta meta;
};

inline LogisticFit fit_logistic(const RowMatrix& x, std::span<const int> labels,
                                std::span<const double> sample_weights,
                                const LogisticOptions& options) {
  if (options.l2 < 0.0) throw InvalidArgument("l2 strength must be >= 0");
  const Eigen::Index width = x.cols();
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(width + 1);
  Eigen::VectorXd gradient;
  Eigen::VectorXd trial_gradient;
  Eigen::MatrixXd hessian;

  TrainMeta meta;
  double value = logistic_objective(x, labels, sample_weights, options.l2, theta, &gradient, &hessian);
  meta.objective_history.push_back(value);
  for (std::size_t iter = 0;; ++iter) {
    const double gnorm = gradient.norm();
    if (!std::isfinite(value) || !std::isfinite(gnorm)) {
      throw ConvergenceError("logistic objective is not finite", gnorm, iter);
    }
    if (gnorm <= options.tol) {
      meta.iterations = iter;
      meta.final_objective = value;
      meta.final_residual = gnorm;
      meta.converged = true;
      break;
    }
    if (iter == options.max_iter) {
      throw ConvergenceError("logistic regression did not converge in " + std::to_string(iter) +
                                 " iterations (gradient norm " + std::to_string(gnorm) + ")",
                             gnorm, iter);
    }

    // Tiny ridge keeps the system solvable when l2 = 0 and features are flat.
    const double damping = 1e-10 * (1.0 + hessian.diagonal().cwiseAbs().maxCoeff());
    hessian.diagonal().array() += damping;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(hessian);
    Eigen::VectorXd step = -ldlt.solve(gradient);
    double slope = gradient.dot(step);
    if (ldlt.info() != Eigen::Success || !step.allFinite() || !(slope < 0.0)) {
      step = -gradient;
      slope = -gnorm * gnorm;
    }

    bool accepted = false;
    double t = 1.0;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const Eigen::VectorXd candidate = theta + t * step;
      const double trial = logistic_objective(x, labels, sample_weights, options.l2, candidate, &trial_gradient);
      // Below rounding resolution the decrease test is meaningless; fall back
      // to "no increase and a smaller gradient".
      const bool sufficient = trial <= value + 1e-4 * t * slope;
      const bool resolved_floor = trial <= value && trial_gradient.norm() < gnorm;
      if (sufficient || resolved_floor) {
        theta = candidate;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      throw ConvergenceError("logistic line search stalled (gradient norm " + std::to_string(gnorm) + ")",
                             gnorm, iter);
    }
    value = logistic_objective(x, labels, sample_weights, options.l2, theta, &gradient, &hessian);
    meta.objective_history.push_back(value);
  }

  LogisticFit fit;
  fit.params.weights = theta.head(width);
  fit.params.bias = theta[width];
  fit.meta = std::move(meta);
  return fit;
}

}  // namespace facepref
