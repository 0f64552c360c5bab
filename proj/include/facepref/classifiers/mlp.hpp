#pragma once

// Feedforward network: rectified hidden layers, one sigmoid output unit,
// trained on class-weighted cross-entropy by mini-batch gradient descent.
//
// Loss over a set S: (1/|S|) sum_{i in S} c_i [softplus(z_i) - y_i z_i],
// z_i the output logit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "facepref/classifiers/logistic.hpp"
#include "facepref/classifiers/types.hpp"
#include "facepref/errors.hpp"
#include "facepref/random.hpp"

namespace facepref {

/// He-uniform weights for rectified layers, Glorot-uniform for the output,
/// zero biases.
inline MlpParams init_mlp(std::size_t width, std::span<const std::size_t> hidden, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6d6c70));
  MlpParams params;
  std::size_t fan_in = width;
  const auto add_layer = [&](std::size_t fan_out, double limit) {
    MlpLayer layer;
    layer.weights.resize(static_cast<Eigen::Index>(fan_out), static_cast<Eigen::Index>(fan_in));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = limit * (2.0 * rng.uniform() - 1.0);
      }
    }
    layer.bias = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(fan_out));
    params.layers.push_back(std::move(layer));
    fan_in = fan_out;
  };
  for (std::size_t units : hidden) add_layer(units, std::sqrt(6.0 / static_cast<double>(fan_in)));
  add_layer(1, std::sqrt(6.0 / static_cast<double>(fan_in + 1)));
  return params;
}

inline double mlp_logit(const MlpParams& params, std::span<const double> x) {
  Eigen::VectorXd a = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const MlpLayer& layer = params.layers[l];
    Eigen::VectorXd z = layer.weights * a + layer.bias;
    if (l + 1 < params.layers.size()) z = z.cwiseMax(0.0);
    a = std::move(z);
  }
  return a[0];
}

inline double mlp_score(const MlpParams& params, std::span<const double> x) {
  return sigmoid(mlp_logit(params, x));
}

/// Mean weighted loss over the rows `batch` of `x`; accumulates the gradient
/// into `gradient` (same shapes as params) when it is non-null.
inline double mlp_loss(const MlpParams& params, const RowMatrix& x, std::span<const int> labels,
                       std::span<const double> sample_weights, std::span<const std::size_t> batch,
                       MlpParams* gradient = nullptr) {
  const auto m = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd input(x.cols(), m);
  for (Eigen::Index b = 0; b < m; ++b) input.col(b) = x.row(static_cast<Eigen::Index>(batch[static_cast<std::size_t>(b)])).transpose();

  // Activations per layer, columns are samples.
  std::vector<Eigen::MatrixXd> acts;
  acts.reserve(params.layers.size() + 1);
  acts.push_back(std::move(input));
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    const MlpLayer& layer = params.layers[l];
    Eigen::MatrixXd z = layer.weights * acts.back();
    z.colwise() += layer.bias;
    if (l + 1 < params.layers.size()) z = z.cwiseMax(0.0);
    acts.push_back(std::move(z));
  }

  const double inv_m = 1.0 / static_cast<double>(m);
  double loss = 0.0;
  Eigen::MatrixXd delta(1, m);
  for (Eigen::Index b = 0; b < m; ++b) {
    const std::size_t row = batch[static_cast<std::size_t>(b)];
    const double z = acts.back()(0, b);
    const double y = labels[row];
    const double c = sample_weights[row];
    loss += c * (softplus(z) - y * z);
    delta(0, b) = c * (sigmoid(z) - y) * inv_m;
  }
  loss *= inv_m;

  if (gradient != nullptr) {
    gradient->layers.resize(params.layers.size());
    for (std::size_t l = params.layers.size(); l-- > 0;) {
      MlpLayer& g = gradient->layers[l];
      g.weights = delta * acts[l].transpose();
      g.bias = delta.rowwise().sum();
      if (l > 0) {
        Eigen::MatrixXd back = params.layers[l].weights.transpose() * delta;
        back.array() *= (acts[l].array() > 0.0).cast<double>();
        delta = std::move(back);
      }
    }
  }
  return loss;
}

struct MlpFit {
  MlpParams params;
  TrainMeta meta;
};

inline MlpFit fit_mlp(const RowMatrix& x, std::span<const int> labels, std::span<const double> sample_weights,
                      const MlpOptions& options) {
  if (!(options.step_size > 0.0)) throw InvalidArgument("step size must be > 0");
  if (options.batch_size == 0) throw InvalidArgument("batch size must be >= 1");
  const std::size_t n = labels.size();
  MlpFit fit;
  fit.params = init_mlp(static_cast<std::size_t>(x.cols()), options.hidden, options.seed);
  fit.meta.seed = options.seed;

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const auto full_loss = [&] { return mlp_loss(fit.params, x, labels, sample_weights, all); };

  double loss = full_loss();
  fit.meta.objective_history.push_back(loss);
  std::vector<std::size_t> order = all;
  MlpParams grad;
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    Rng rng(derive_seed(options.seed, 0x65706f6368, epoch));
    for (std::size_t k = n; k > 1; --k) std::swap(order[k - 1], order[rng.index(k)]);
    for (std::size_t start = 0; start < n; start += options.batch_size) {
      const std::size_t stop = std::min(n, start + options.batch_size);
      mlp_loss(fit.params, x, labels, sample_weights,
               std::span<const std::size_t>(order).subspan(start, stop - start), &grad);
      for (std::size_t l = 0; l < fit.params.layers.size(); ++l) {
        fit.params.layers[l].weights -= options.step_size * grad.layers[l].weights;
        fit.params.layers[l].bias -= options.step_size * grad.layers[l].bias;
      }
    }
    loss = full_loss();
    fit.meta.objective_history.push_back(loss);
    if (!std::isfinite(loss)) {
      throw ConvergenceError("network training diverged at epoch " + std::to_string(epoch + 1), loss, epoch + 1);
    }
  }
  fit.meta.iterations = options.epochs;
  fit.meta.final_objective = loss;
  fit.meta.converged = true;
  return fit;
}

}  // namespace facepref
