#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "facepref/errors.hpp"
#include "facepref/features.hpp"
#include "facepref/number_format.hpp"

namespace facepref {

enum class ModelFamily { logistic, svm_rbf, mlp };

inline std::string_view family_token(ModelFamily family) {
  switch (family) {
    case ModelFamily::logistic: return "logistic";
    case ModelFamily::svm_rbf: return "svm_rbf";
    case ModelFamily::mlp: return "mlp";
  }
  return "logistic";
}

inline ModelFamily parse_family(std::string_view token) {
  if (token == "logistic") return ModelFamily::logistic;
  if (token == "svm_rbf" || token == "svm") return ModelFamily::svm_rbf;
  if (token == "mlp") return ModelFamily::mlp;
  throw InvalidArgument("unknown model family '" + std::string(token) + "'");
}

/// Per-class sample weights resolved against a concrete label vector.
struct ClassWeights {
  double like = 1.0;
  double dislike = 1.0;

  double operator()(int label) const noexcept { return label == 1 ? like : dislike; }
};

struct ClassWeighting {
  enum class Scheme { uniform, inverse_frequency, explicit_weights };

  Scheme scheme = Scheme::uniform;
  double like = 1.0;
  double dislike = 1.0;

  static ClassWeighting uniform() { return {}; }
  static ClassWeighting inverse_frequency() { return {Scheme::inverse_frequency, 1.0, 1.0}; }
  static ClassWeighting explicit_weights(double like, double dislike) {
    if (!(like > 0.0) || !(dislike > 0.0)) throw InvalidArgument("class weights must be > 0");
    return {Scheme::explicit_weights, like, dislike};
  }

  /// inverse_frequency gives class c the weight n / (2 n_c).
  ClassWeights resolve(std::span<const int> labels) const {
    switch (scheme) {
      case Scheme::uniform: return {1.0, 1.0};
      case Scheme::explicit_weights: return {like, dislike};
      case Scheme::inverse_frequency: {
        std::size_t likes = 0;
        for (int y : labels) likes += (y == 1);
        const std::size_t dislikes = labels.size() - likes;
        if (likes == 0 || dislikes == 0) throw SingleClassError("training set has a single class");
        const double n = static_cast<double>(labels.size());
        return {n / (2.0 * static_cast<double>(likes)), n / (2.0 * static_cast<double>(dislikes))};
      }
    }
    return {1.0, 1.0};
  }

  bool operator==(const ClassWeighting&) const = default;
};

inline std::string_view weighting_token(ClassWeighting::Scheme scheme) {
  switch (scheme) {
    case ClassWeighting::Scheme::uniform: return "uniform";
    case ClassWeighting::Scheme::inverse_frequency: return "inverse_frequency";
    case ClassWeighting::Scheme::explicit_weights: return "explicit";
  }
  return "uniform";
}

inline ClassWeighting parse_weighting(std::string_view token) {
  if (token == "uniform") return ClassWeighting::uniform();
  if (token == "inverse_frequency" || token == "inverse-frequency" || token == "balanced") {
    return ClassWeighting::inverse_frequency();
  }
  throw InvalidArgument("unknown class weighting '" + std::string(token) + "'");
}

struct LogisticOptions {
  ClassWeighting weighting;
  /// Penalty (l2/2)·‖w‖² added to the summed weighted log-loss; the bias is
  /// not penalized. l2 = 1 matches the C = 1 convention.
  double l2 = 1.0;
  double tol = 1e-6;
  std::size_t max_iter = 100;
  bool standardize = false;

  bool operator==(const LogisticOptions&) const = default;
};

struct SvmOptions {
  ClassWeighting weighting;
  double C = 1.0;
  /// Defaults to 1 / width when unset.
  std::optional<double> gamma;
  /// Stop when the maximal KKT violation drops to this value.
  double tol = 1e-3;
  /// 0 selects max(10'000'000, 100·n).
  std::size_t max_iter = 0;
  std::size_t cache_mb = 256;
  /// Keep the dual objective after every pair update in train_meta.
  bool record_objective = false;
  bool standardize = false;

  bool operator==(const SvmOptions&) const = default;
};

struct MlpOptions {
  ClassWeighting weighting;
  std::vector<std::size_t> hidden{64};
  std::uint64_t seed = 0;
  std::size_t epochs = 100;
  double step_size = 0.01;
  std::size_t batch_size = 32;
  bool standardize = false;

  bool operator==(const MlpOptions&) const = default;
};

/// One hidden layer of 64 rectified units.
inline std::vector<std::size_t> nn1_layers() { return {64}; }
/// Two hidden layers, 128 then 64 rectified units.
inline std::vector<std::size_t> nn2_layers() { return {128, 64}; }

inline std::vector<std::size_t> parse_architecture(std::string_view token) {
  if (token == "NN1" || token == "nn1") return nn1_layers();
  if (token == "NN2" || token == "nn2") return nn2_layers();
  std::vector<std::size_t> layers;
  std::size_t start = 0;
  while (start <= token.size()) {
    std::size_t end = token.find_first_of("-x,", start);
    if (end == std::string_view::npos) end = token.size();
    const auto part = token.substr(start, end - start);
    if (part.empty()) throw InvalidArgument("bad architecture '" + std::string(token) + "'");
    layers.push_back(parse_integer<std::size_t>(part));
    if (layers.back() == 0) throw InvalidArgument("hidden layer sizes must be >= 1");
    start = end + 1;
  }
  return layers;
}

using ModelOptions = std::variant<LogisticOptions, SvmOptions, MlpOptions>;

inline ModelFamily options_family(const ModelOptions& options) {
  return static_cast<ModelFamily>(options.index());
}

struct LogisticParams {
  Eigen::VectorXd weights;
  double bias = 0.0;
};

struct SvmParams {
  RowMatrix support;
  /// alpha_i · y_i with y in {-1, +1}.
  Eigen::VectorXd coefficients;
  double bias = 0.0;
  double gamma = 1.0;
};

struct MlpLayer {
  /// out × in
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

struct MlpParams {
  std::vector<MlpLayer> layers;
};

using ModelParams = std::variant<LogisticParams, SvmParams, MlpParams>;

/// z-scoring fitted on the training rows.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;

  static Standardizer fit(const RowMatrix& x) {
    Standardizer s;
    s.mean = x.colwise().mean().transpose();
    s.scale.resize(x.cols());
    for (Eigen::Index k = 0; k < x.cols(); ++k) {
      const double var = (x.col(k).array() - s.mean[k]).square().mean();
      s.scale[k] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return s;
  }

  RowMatrix apply(const RowMatrix& x) const {
    RowMatrix out = x;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      out.row(i) = (out.row(i).transpose() - mean).cwiseQuotient(scale).transpose();
    }
    return out;
  }

  Eigen::VectorXd apply(std::span<const double> x) const {
    const Eigen::Map<const Eigen::VectorXd> v(x.data(), static_cast<Eigen::Index>(x.size()));
    return (v - mean).cwiseQuotient(scale);
  }
};

struct TrainMeta {
  std::uint64_t seed = 0;
  std::size_t iterations = 0;
  double final_objective = 0.0;
  /// Gradient norm (logistic), KKT gap (svm), unused (mlp).
  double final_residual = 0.0;
  bool converged = false;
  /// Objective per iteration (logistic), dual objective per pair update when
  /// recorded (svm), mean weighted loss per epoch starting at epoch 0 (mlp).
  std::vector<double> objective_history;
  /// classify(predict_score(.)) accuracy over the training rows.
  double training_accuracy = 0.0;
  std::size_t n_train = 0;
};

struct Model {
  ModelFamily family = ModelFamily::logistic;
  FeatureMode feature_mode = FeatureMode::avg;
  std::size_t width = 0;
  std::size_t max_images = default_max_images;
  ModelOptions hyperparams;
  std::optional<Standardizer> standardizer;
  ModelParams params;
  TrainMeta train_meta;
};

}  // namespace facepref
