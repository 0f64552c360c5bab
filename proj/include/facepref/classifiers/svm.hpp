#pragma once

// Soft-margin kernel SVM with an RBF kernel, solved in the dual by
// sequential minimal optimization (two-variable updates, second-order
// working-set selection).
//
//   minimize   f(a) = 1/2 a'Qa - e'a,   Q_ij = y_i y_j K(x_i, x_j)
//   subject to 0 <= a_i <= C_i,  y'a = 0
//
// C_i = C · class weight of sample i. The reported dual objective is -f(a).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <list>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facepref/classifiers/types.hpp"
#include "facepref/errors.hpp"

namespace facepref {

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double diff = a[k] - b[k];
    d2 += diff * diff;
  }
  return std::exp(-gamma * d2);
}

inline double svm_decision(const SvmParams& params, std::span<const double> x) {
  const auto width = static_cast<std::size_t>(params.support.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < params.support.rows(); ++i) {
    const std::span<const double> sv(params.support.data() + static_cast<std::size_t>(i) * width, width);
    sum += params.coefficients[i] * rbf_kernel(sv, x, params.gamma);
  }
  return sum + params.bias;
}

namespace detail {

// Rows of Q computed on demand and kept in a least-recently-used cache.
class QRowCache {
 public:
  QRowCache(const RowMatrix& x, std::span<const double> y, double gamma, std::size_t cache_mb)
      : x_(x), y_(y), gamma_(gamma), rows_(static_cast<std::size_t>(x.rows())),
        where_(static_cast<std::size_t>(x.rows()), order_.end()) {
    sqnorm_ = x.rowwise().squaredNorm();
    const std::size_t row_bytes = sizeof(double) * std::max<std::size_t>(1, rows_.size());
    capacity_ = std::max<std::size_t>(2, cache_mb * 1024 * 1024 / row_bytes);
  }

  std::span<const double> row(std::size_t i) {
    if (where_[i] != order_.end()) {
      order_.splice(order_.begin(), order_, where_[i]);
      return rows_[i];
    }
    if (order_.size() >= capacity_) {
      const std::size_t victim = order_.back();
      order_.pop_back();
      where_[victim] = order_.end();
      std::vector<double>().swap(rows_[victim]);
    }
    compute(i);
    order_.push_front(i);
    where_[i] = order_.begin();
    return rows_[i];
  }

 private:
  void compute(std::size_t i) {
    const auto n = static_cast<Eigen::Index>(rows_.size());
    const Eigen::VectorXd dots = x_ * x_.row(static_cast<Eigen::Index>(i)).transpose();
    std::vector<double>& out = rows_[i];
    out.resize(rows_.size());
    for (Eigen::Index j = 0; j < n; ++j) {
      const double d2 = std::max(0.0, sqnorm_[static_cast<Eigen::Index>(i)] + sqnorm_[j] - 2.0 * dots[j]);
      out[static_cast<std::size_t>(j)] = y_[i] * y_[static_cast<std::size_t>(j)] * std::exp(-gamma_ * d2);
    }
    out[i] = 1.0;
  }

  const RowMatrix& x_;
  std::span<const double> y_;
  double gamma_;
  Eigen::VectorXd sqnorm_;
  std::vector<std::vector<double>> rows_;
  std::list<std::size_t> order_;
  std::vector<std::list<std::size_t>::iterator> where_;
  std::size_t capacity_ = 2;
};

}  // namespace detail

struct SvmFit {
  SvmParams params;
  /// Dual variables for every training row (zero for non-support rows).
  std::vector<double> alpha;
  std::vector<double> upper_bound;
  TrainMeta meta;
};

inline SvmFit fit_svm_rbf(const RowMatrix& x, std::span<const int> labels, const ClassWeights& weights,
                          const SvmOptions& options) {
  if (!(options.C > 0.0)) throw InvalidArgument("C must be > 0");
  const double gamma = options.gamma.value_or(1.0 / static_cast<double>(std::max<Eigen::Index>(1, x.cols())));
  if (!(gamma > 0.0)) throw InvalidArgument("gamma must be > 0");

  const std::size_t n = labels.size();
  std::vector<double> y(n);
  std::vector<double> upper(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = labels[i] == 1 ? 1.0 : -1.0;
    upper[i] = options.C * weights(labels[i]);
  }
  const std::size_t max_iter = options.max_iter > 0 ? options.max_iter : std::max<std::size_t>(10'000'000, 100 * n);
  constexpr double tau = 1e-12;
  constexpr double inf = std::numeric_limits<double>::infinity();

  detail::QRowCache cache(x, y, gamma, options.cache_mb);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> grad(n, -1.0);  // Q a - e at a = 0
  const auto at_upper = [&](std::size_t t) { return alpha[t] >= upper[t]; };
  const auto at_lower = [&](std::size_t t) { return alpha[t] <= 0.0; };

  TrainMeta meta;
  double objective = 0.0;  // f(a); dual objective is -f
  if (options.record_objective) meta.objective_history.push_back(0.0);

  std::size_t iter = 0;
  double gap = inf;
  for (;; ++iter) {
    // i maximizes -y_t G_t over the "up" set.
    double gmax = -inf;
    std::size_t i = n;
    for (std::size_t t = 0; t < n; ++t) {
      if (y[t] > 0.0) {
        if (!at_upper(t) && -grad[t] >= gmax) { gmax = -grad[t]; i = t; }
      } else {
        if (!at_lower(t) && grad[t] >= gmax) { gmax = grad[t]; i = t; }
      }
    }
    double gmax2 = -inf;
    std::size_t j = n;
    double best = inf;
    if (i != n) {
      const auto qi = cache.row(i);
      for (std::size_t t = 0; t < n; ++t) {
        if (y[t] > 0.0) {
          if (at_lower(t)) continue;
          const double diff = gmax + grad[t];
          gmax2 = std::max(gmax2, grad[t]);
          if (diff > 0.0) {
            double quad = 2.0 - 2.0 * y[i] * qi[t];
            if (quad <= 0.0) quad = tau;
            const double decrease = -(diff * diff) / quad;
            if (decrease <= best) { best = decrease; j = t; }
          }
        } else {
          if (at_upper(t)) continue;
          const double diff = gmax - grad[t];
          gmax2 = std::max(gmax2, -grad[t]);
          if (diff > 0.0) {
            double quad = 2.0 + 2.0 * y[i] * qi[t];
            if (quad <= 0.0) quad = tau;
            const double decrease = -(diff * diff) / quad;
            if (decrease <= best) { best = decrease; j = t; }
          }
        }
      }
    }
    gap = gmax + gmax2;
    if (i == n || j == n || gap < options.tol) break;
    if (iter >= max_iter) {
      throw ConvergenceError("SMO did not converge in " + std::to_string(iter) +
                                 " iterations (KKT gap " + std::to_string(gap) + ")",
                             gap, iter);
    }

    const auto qi = cache.row(i);
    const auto qj = cache.row(j);
    const double ci = upper[i];
    const double cj = upper[j];
    const double old_i = alpha[i];
    const double old_j = alpha[j];
    double& ai = alpha[i];
    double& aj = alpha[j];
    if (y[i] != y[j]) {
      double quad = 2.0 + 2.0 * qi[j];
      if (quad <= 0.0) quad = tau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0.0) {
        if (aj < 0.0) { aj = 0.0; ai = diff; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = -diff; }
      }
      if (diff > ci - cj) {
        if (ai > ci) { ai = ci; aj = ci - diff; }
      } else {
        if (aj > cj) { aj = cj; ai = cj + diff; }
      }
    } else {
      double quad = 2.0 - 2.0 * qi[j];
      if (quad <= 0.0) quad = tau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > ci) {
        if (ai > ci) { ai = ci; aj = sum - ci; }
      } else {
        if (aj < 0.0) { aj = 0.0; ai = sum; }
      }
      if (sum > cj) {
        if (aj > cj) { aj = cj; ai = sum - cj; }
      } else {
        if (ai < 0.0) { ai = 0.0; aj = sum; }
      }
    }
    const double di = ai - old_i;
    const double dj = aj - old_j;
    objective += di * grad[i] + dj * grad[j] + 0.5 * (di * di + dj * dj) + di * dj * qi[j];
    for (std::size_t t = 0; t < n; ++t) grad[t] += qi[t] * di + qj[t] * dj;
    if (options.record_objective) meta.objective_history.push_back(-objective);
  }

  // Offset from free vectors, or the midpoint of the feasible interval.
  double ub = inf;
  double lb = -inf;
  double free_sum = 0.0;
  std::size_t free_count = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (at_upper(t)) {
      if (y[t] < 0.0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (at_lower(t)) {
      if (y[t] > 0.0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free_count;
      free_sum += yg;
    }
  }
  const double rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (ub + lb);

  std::vector<std::size_t> support;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) support.push_back(t);
  }
  SvmFit fit;
  fit.params.gamma = gamma;
  fit.params.bias = -rho;
  fit.params.support.resize(static_cast<Eigen::Index>(support.size()), x.cols());
  fit.params.coefficients.resize(static_cast<Eigen::Index>(support.size()));
  for (std::size_t s = 0; s < support.size(); ++s) {
    fit.params.support.row(static_cast<Eigen::Index>(s)) = x.row(static_cast<Eigen::Index>(support[s]));
    fit.params.coefficients[static_cast<Eigen::Index>(s)] = alpha[support[s]] * y[support[s]];
  }
  meta.iterations = iter;
  meta.final_objective = -objective;
  meta.final_residual = gap;
  meta.converged = true;
  fit.alpha = std::move(alpha);
  fit.upper_bound = std::move(upper);
  fit.meta = std::move(meta);
  return fit;
}

/// Dual objective sum(a) - 1/2 a'Qa evaluated from scratch.
inline double svm_dual_objective(const RowMatrix& x, std::span<const int> labels,
                                 std::span<const double> alpha, double gamma) {
  const std::size_t n = labels.size();
  const std::size_t width = static_cast<std::size_t>(x.cols());
  double linear = 0.0;
  double quadratic = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (alpha[i] == 0.0) continue;
    linear += alpha[i];
    const double yi = labels[i] == 1 ? 1.0 : -1.0;
    const std::span<const double> xi(x.data() + i * width, width);
    for (std::size_t j = 0; j < n; ++j) {
      if (alpha[j] == 0.0) continue;
      const double yj = labels[j] == 1 ? 1.0 : -1.0;
      const std::span<const double> xj(x.data() + j * width, width);
      quadratic += alpha[i] * alpha[j] * yi * yj * rbf_kernel(xi, xj, gamma);
    }
  }
  return linear - 0.5 * quadratic;
}

}  // namespace facepref
