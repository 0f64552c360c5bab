#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "facepref/classifiers/logistic.hpp"
#include "facepref/classifiers/mlp.hpp"
#include "facepref/classifiers/svm.hpp"
#include "facepref/classifiers/types.hpp"
#include "facepref/dataset.hpp"
#include "facepref/detail/atomic_file.hpp"
#include "facepref/errors.hpp"
#include "facepref/features.hpp"

namespace facepref {

inline constexpr int model_format_version = 1;

inline double default_threshold(ModelFamily family) noexcept {
  return family == ModelFamily::svm_rbf ? 0.0 : 0.5;
}

/// like iff score >= threshold.
inline Label classify(double score, double threshold) noexcept {
  return score >= threshold ? Label::like : Label::dislike;
}

inline Label classify(const Model& model, double score) noexcept {
  return classify(score, default_threshold(model.family));
}

/// Probability of like (logistic, mlp) or signed margin (svm). Assumes the
/// input already went through the model's standardizer, if any.
inline double raw_score(const Model& model, std::span<const double> x) {
  switch (model.family) {
    case ModelFamily::logistic: return logistic_score(std::get<LogisticParams>(model.params), x);
    case ModelFamily::svm_rbf: return svm_decision(std::get<SvmParams>(model.params), x);
    case ModelFamily::mlp: return mlp_score(std::get<MlpParams>(model.params), x);
  }
  return 0.0;
}

/// Score of a raw feature row; only the width is checked.
inline double predict_score(const Model& model, std::span<const double> values) {
  if (values.size() != model.width) {
    throw ShapeError("model expects width " + std::to_string(model.width) + ", got " +
                     std::to_string(values.size()));
  }
  if (model.standardizer) {
    const Eigen::VectorXd z = model.standardizer->apply(values);
    return raw_score(model, {z.data(), static_cast<std::size_t>(z.size())});
  }
  return raw_score(model, values);
}

inline double predict_score(const Model& model, const FeatureVector& x) {
  if (x.mode != model.feature_mode) {
    throw ShapeError("model was trained on " + std::string(feature_mode_token(model.feature_mode)) +
                     " features, got " + std::string(feature_mode_token(x.mode)));
  }
  return predict_score(model, std::span<const double>(x.values));
}

inline std::vector<double> predict_scores(const Model& model, const FeatureMatrix& m) {
  if (m.mode != model.feature_mode) {
    throw ShapeError("model was trained on " + std::string(feature_mode_token(model.feature_mode)) +
                     " features, got " + std::string(feature_mode_token(m.mode)));
  }
  std::vector<double> scores(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) scores[i] = predict_score(model, m.row(i));
  return scores;
}

/// Features of `p` laid out the way `model` expects.
inline FeatureVector model_features(const Model& model, const Profile& p) {
  return build_features(p, model.feature_mode, model.max_images);
}

namespace detail {

inline void require_both_classes(std::span<const int> labels) {
  std::size_t likes = 0;
  for (int y : labels) likes += (y == 1);
  if (likes == 0 || likes == labels.size()) {
    throw SingleClassError("training set needs both liked and disliked profiles");
  }
}

inline std::vector<double> sample_weights(std::span<const int> labels, const ClassWeights& w) {
  std::vector<double> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = w(labels[i]);
  return out;
}

inline void finish_training(Model& model, const FeatureMatrix& m) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Label predicted = classify(model, predict_score(model, m.row(i)));
    correct += (label_value(predicted) == m.labels[i]);
  }
  model.train_meta.n_train = m.size();
  model.train_meta.training_accuracy =
      m.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(m.size());
}

inline Model model_shell(const FeatureMatrix& m, ModelFamily family, ModelOptions options, bool standardize) {
  Model model;
  model.family = family;
  model.feature_mode = m.mode;
  model.width = m.width();
  model.max_images = m.max_images;
  model.hyperparams = std::move(options);
  if (standardize) model.standardizer = Standardizer::fit(m.rows);
  return model;
}

}  // namespace detail

inline Model train_logistic(const FeatureMatrix& m, const LogisticOptions& options = {}) {
  detail::require_both_classes(m.labels);
  Model model = detail::model_shell(m, ModelFamily::logistic, options, options.standardize);
  const auto weights = detail::sample_weights(m.labels, options.weighting.resolve(m.labels));
  LogisticFit fit = model.standardizer
                        ? fit_logistic(model.standardizer->apply(m.rows), m.labels, weights, options)
                        : fit_logistic(m.rows, m.labels, weights, options);
  model.params = std::move(fit.params);
  model.train_meta = std::move(fit.meta);
  detail::finish_training(model, m);
  return model;
}

inline Model train_svm_rbf(const FeatureMatrix& m, const SvmOptions& options = {}) {
  detail::require_both_classes(m.labels);
  SvmOptions resolved = options;
  if (!resolved.gamma) resolved.gamma = 1.0 / static_cast<double>(std::max<std::size_t>(1, m.width()));
  Model model = detail::model_shell(m, ModelFamily::svm_rbf, resolved, resolved.standardize);
  const ClassWeights weights = resolved.weighting.resolve(m.labels);
  SvmFit fit = model.standardizer
                   ? fit_svm_rbf(model.standardizer->apply(m.rows), m.labels, weights, resolved)
                   : fit_svm_rbf(m.rows, m.labels, weights, resolved);
  model.params = std::move(fit.params);
  model.train_meta = std::move(fit.meta);
  detail::finish_training(model, m);
  return model;
}

inline Model train_mlp(const FeatureMatrix& m, const MlpOptions& options = {}) {
  detail::require_both_classes(m.labels);
  Model model = detail::model_shell(m, ModelFamily::mlp, options, options.standardize);
  const auto weights = detail::sample_weights(m.labels, options.weighting.resolve(m.labels));
  MlpFit fit = model.standardizer
                   ? fit_mlp(model.standardizer->apply(m.rows), m.labels, weights, options)
                   : fit_mlp(m.rows, m.labels, weights, options);
  model.params = std::move(fit.params);
  model.train_meta = std::move(fit.meta);
  detail::finish_training(model, m);
  return model;
}

inline Model train_model(const FeatureMatrix& m, const ModelOptions& options) {
  return std::visit(
      [&](const auto& opts) -> Model {
        using T = std::decay_t<decltype(opts)>;
        if constexpr (std::is_same_v<T, LogisticOptions>) return train_logistic(m, opts);
        else if constexpr (std::is_same_v<T, SvmOptions>) return train_svm_rbf(m, opts);
        else return train_mlp(m, opts);
      },
      options);
}

// ---------------------------------------------------------------------------
// Persistence: a JSON envelope
//   {format, version, family, feature_mode, width, max_images, hyperparams,
//    standardizer, params, train_meta}

namespace detail {

using nlohmann::json;

inline json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Eigen::VectorXd vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

template <typename Matrix>
json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

template <typename Matrix>
Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const json& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw CorruptModelError("matrix row count mismatch");
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = data[static_cast<std::size_t>(r)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw CorruptModelError("matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

inline json weighting_json(const ClassWeighting& w) {
  return {{"scheme", weighting_token(w.scheme)}, {"like", w.like}, {"dislike", w.dislike}};
}

inline ClassWeighting weighting_from_json(const json& j) {
  const std::string scheme = j.at("scheme").get<std::string>();
  if (scheme == "explicit") return ClassWeighting::explicit_weights(j.at("like").get<double>(), j.at("dislike").get<double>());
  return parse_weighting(scheme);
}

inline json options_json(const ModelOptions& options) {
  return std::visit(
      [](const auto& o) -> json {
        using T = std::decay_t<decltype(o)>;
        json j = {{"weighting", weighting_json(o.weighting)}, {"standardize", o.standardize}};
        if constexpr (std::is_same_v<T, LogisticOptions>) {
          j["l2"] = o.l2;
          j["tol"] = o.tol;
          j["max_iter"] = o.max_iter;
        } else if constexpr (std::is_same_v<T, SvmOptions>) {
          j["C"] = o.C;
          j["gamma"] = o.gamma ? json(*o.gamma) : json(nullptr);
          j["tol"] = o.tol;
          j["max_iter"] = o.max_iter;
          j["cache_mb"] = o.cache_mb;
          j["record_objective"] = o.record_objective;
        } else {
          j["hidden"] = o.hidden;
          j["seed"] = o.seed;
          j["epochs"] = o.epochs;
          j["step_size"] = o.step_size;
          j["batch_size"] = o.batch_size;
        }
        return j;
      },
      options);
}

inline ModelOptions options_from_json(ModelFamily family, const json& j) {
  switch (family) {
    case ModelFamily::logistic: {
      LogisticOptions o;
      o.weighting = weighting_from_json(j.at("weighting"));
      o.standardize = j.at("standardize").get<bool>();
      o.l2 = j.at("l2").get<double>();
      o.tol = j.at("tol").get<double>();
      o.max_iter = j.at("max_iter").get<std::size_t>();
      return o;
    }
    case ModelFamily::svm_rbf: {
      SvmOptions o;
      o.weighting = weighting_from_json(j.at("weighting"));
      o.standardize = j.at("standardize").get<bool>();
      o.C = j.at("C").get<double>();
      if (!j.at("gamma").is_null()) o.gamma = j.at("gamma").get<double>();
      o.tol = j.at("tol").get<double>();
      o.max_iter = j.at("max_iter").get<std::size_t>();
      o.cache_mb = j.at("cache_mb").get<std::size_t>();
      o.record_objective = j.at("record_objective").get<bool>();
      return o;
    }
    case ModelFamily::mlp: {
      MlpOptions o;
      o.weighting = weighting_from_json(j.at("weighting"));
      o.standardize = j.at("standardize").get<bool>();
      o.hidden = j.at("hidden").get<std::vector<std::size_t>>();
      o.seed = j.at("seed").get<std::uint64_t>();
      o.epochs = j.at("epochs").get<std::size_t>();
      o.step_size = j.at("step_size").get<double>();
      o.batch_size = j.at("batch_size").get<std::size_t>();
      return o;
    }
  }
  return LogisticOptions{};
}

inline json params_json(const ModelParams& params) {
  return std::visit(
      [](const auto& p) -> json {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LogisticParams>) {
          return {{"weights", vector_json(p.weights)}, {"bias", p.bias}};
        } else if constexpr (std::is_same_v<T, SvmParams>) {
          return {{"support", matrix_json(p.support)},
                  {"coefficients", vector_json(p.coefficients)},
                  {"bias", p.bias},
                  {"gamma", p.gamma}};
        } else {
          json layers = json::array();
          for (const MlpLayer& layer : p.layers) {
            layers.push_back({{"weights", matrix_json(layer.weights)}, {"bias", vector_json(layer.bias)}});
          }
          return {{"layers", std::move(layers)}};
        }
      },
      params);
}

inline ModelParams params_from_json(ModelFamily family, const json& j) {
  switch (family) {
    case ModelFamily::logistic:
      return LogisticParams{vector_from_json(j.at("weights")), j.at("bias").get<double>()};
    case ModelFamily::svm_rbf: {
      SvmParams p;
      p.support = matrix_from_json<RowMatrix>(j.at("support"));
      p.coefficients = vector_from_json(j.at("coefficients"));
      p.bias = j.at("bias").get<double>();
      p.gamma = j.at("gamma").get<double>();
      if (p.coefficients.size() != p.support.rows()) throw CorruptModelError("support vector count mismatch");
      return p;
    }
    case ModelFamily::mlp: {
      MlpParams p;
      for (const json& layer : j.at("layers")) {
        p.layers.push_back({matrix_from_json<Eigen::MatrixXd>(layer.at("weights")), vector_from_json(layer.at("bias"))});
      }
      return p;
    }
  }
  return LogisticParams{};
}

inline std::size_t params_input_width(const Model& m) {
  return std::visit(
      [](const auto& p) -> std::size_t {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, LogisticParams>) return static_cast<std::size_t>(p.weights.size());
        else if constexpr (std::is_same_v<T, SvmParams>) return static_cast<std::size_t>(p.support.cols());
        else return p.layers.empty() ? 0 : static_cast<std::size_t>(p.layers.front().weights.cols());
      },
      m.params);
}

}  // namespace detail

inline std::string save_model(const Model& model) {
  using nlohmann::json;
  json meta = {{"seed", model.train_meta.seed},
               {"iterations", model.train_meta.iterations},
               {"final_objective", model.train_meta.final_objective},
               {"final_residual", model.train_meta.final_residual},
               {"converged", model.train_meta.converged},
               {"objective_history", model.train_meta.objective_history},
               {"training_accuracy", model.train_meta.training_accuracy},
               {"n_train", model.train_meta.n_train}};
  json standardizer = nullptr;
  if (model.standardizer) {
    standardizer = {{"mean", detail::vector_json(model.standardizer->mean)},
                    {"scale", detail::vector_json(model.standardizer->scale)}};
  }
  json envelope = {{"format", "facepref-model"},
                   {"version", model_format_version},
                   {"family", family_token(model.family)},
                   {"feature_mode", feature_mode_token(model.feature_mode)},
                   {"width", model.width},
                   {"max_images", model.max_images},
                   {"hyperparams", detail::options_json(model.hyperparams)},
                   {"standardizer", std::move(standardizer)},
                   {"params", detail::params_json(model.params)},
                   {"train_meta", std::move(meta)}};
  return envelope.dump() + "\n";
}

inline Model load_model(std::string_view payload) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(payload);
  } catch (const json::exception& e) {
    throw CorruptModelError(std::string("model payload is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", std::string{}) != "facepref-model") {
      throw CorruptModelError("not a model file");
    }
    const int version = j.at("version").get<int>();
    if (version != model_format_version) {
      throw VersionError("model format version " + std::to_string(version) + " is not supported (expected " +
                         std::to_string(model_format_version) + ")");
    }
    Model model;
    model.family = parse_family(j.at("family").get<std::string>());
    model.feature_mode = parse_feature_mode(j.at("feature_mode").get<std::string>());
    model.width = j.at("width").get<std::size_t>();
    model.max_images = j.at("max_images").get<std::size_t>();
    model.hyperparams = detail::options_from_json(model.family, j.at("hyperparams"));
    if (!j.at("standardizer").is_null()) {
      model.standardizer = Standardizer{detail::vector_from_json(j["standardizer"].at("mean")),
                                        detail::vector_from_json(j["standardizer"].at("scale"))};
    }
    model.params = detail::params_from_json(model.family, j.at("params"));
    const json& meta = j.at("train_meta");
    model.train_meta.seed = meta.at("seed").get<std::uint64_t>();
    model.train_meta.iterations = meta.at("iterations").get<std::size_t>();
    model.train_meta.final_objective = meta.at("final_objective").get<double>();
    model.train_meta.final_residual = meta.at("final_residual").get<double>();
    model.train_meta.converged = meta.at("converged").get<bool>();
    model.train_meta.objective_history = meta.at("objective_history").get<std::vector<double>>();
    model.train_meta.training_accuracy = meta.at("training_accuracy").get<double>();
    model.train_meta.n_train = meta.at("n_train").get<std::size_t>();
    if (detail::params_input_width(model) != model.width) throw CorruptModelError("parameter width mismatch");
    return model;
  } catch (const json::exception& e) {
    throw CorruptModelError(std::string("corrupt model payload: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CorruptModelError(std::string("corrupt model payload: ") + e.what());
  }
}

inline void save_model_file(const Model& model, const std::filesystem::path& path) {
  write_file_atomic(path, save_model(model));
}

inline Model load_model_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open model file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return load_model(text.str());
}

}  // namespace facepref
