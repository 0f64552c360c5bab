#pragma once

// Split-based evaluation protocols: learning curves over training sizes,
// repeated random splits at a fixed size, and the random-classifier baseline.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "facepref/classifiers/model.hpp"
#include "facepref/evaluation/metrics.hpp"
#include "facepref/evaluation/skew_normal.hpp"
#include "facepref/evaluation/split.hpp"
#include "facepref/features.hpp"
#include "facepref/random.hpp"

namespace facepref {

struct ModelSpec {
  std::string name;
  ModelOptions options;

  ModelFamily family() const { return options_family(options); }
};

/// Training sizes from fractions of the dataset, rounded down.
inline std::vector<std::size_t> sizes_from_fractions(std::size_t n, std::span<const double> fractions) {
  std::vector<std::size_t> sizes;
  for (double f : fractions) sizes.push_back(static_cast<std::size_t>(std::floor(f * static_cast<double>(n))));
  return sizes;
}

inline Metrics evaluate_model(const Model& model, const FeatureMatrix& m) {
  std::vector<int> predicted(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    predicted[i] = label_value(classify(model, predict_score(model, m.row(i))));
  }
  return compute_metrics(m.labels, predicted);
}

/// Split seed for (size, repeat) under one master seed.
inline std::uint64_t split_seed(std::uint64_t master, std::size_t n_train, std::size_t repeat) {
  return derive_seed(master, n_train, repeat);
}

struct ModelEvaluation {
  std::string model;
  Metrics train;
  Metrics validation;
};

struct LearningCurveRow {
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::size_t repeat = 0;
  std::uint64_t seed = 0;
  std::vector<ModelEvaluation> models;
};

/// For each size (and each repeat), one split shared by every model spec.
inline std::vector<LearningCurveRow> learning_curve(const FeatureMatrix& m, std::span<const std::size_t> sizes,
                                                    std::span<const ModelSpec> specs, std::uint64_t master_seed,
                                                    std::size_t repeats = 1) {
  std::vector<LearningCurveRow> rows;
  for (std::size_t repeat = 0; repeat < repeats; ++repeat) {
    for (std::size_t n_train : sizes) {
      LearningCurveRow row;
      row.n_train = n_train;
      row.n_val = m.size() - n_train;
      row.repeat = repeat;
      row.seed = split_seed(master_seed, n_train, repeat);
      const Split split = random_split(m.labels, n_train, row.seed);
      const FeatureMatrix train = take_rows(m, split.train);
      const FeatureMatrix test = take_rows(m, split.test);
      for (const ModelSpec& spec : specs) {
        const Model model = train_model(train, spec.options);
        row.models.push_back({spec.name, evaluate_model(model, train), evaluate_model(model, test)});
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

struct SplitStudy {
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  std::uint64_t master_seed = 0;
  /// Validation accuracies, sorted ascending.
  std::vector<double> samples;
  NormalFit moments;
  std::optional<SkewNormalFit> fit;
};

namespace detail {

template <typename Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn&& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

inline unsigned default_threads() { return std::max(1u, std::thread::hardware_concurrency()); }

/// One model per random split; validation accuracies and their skew-normal fit.
inline SplitStudy repeated_split_study(const FeatureMatrix& m, std::size_t n_train, std::size_t repeats,
                                       const ModelOptions& spec, std::uint64_t master_seed,
                                       std::size_t threads = 1) {
  if (repeats < 2) throw InvalidArgument("a repeated-split study needs at least two repeats");
  SplitStudy study;
  study.n_train = n_train;
  study.n_val = m.size() - n_train;
  study.master_seed = master_seed;
  study.samples.resize(repeats);
  detail::parallel_for(repeats, threads, [&](std::size_t r) {
    const Split split = random_split(m.labels, n_train, split_seed(master_seed, n_train, r));
    const Model model = train_model(take_rows(m, split.train), spec);
    study.samples[r] = evaluate_model(model, take_rows(m, split.test)).accuracy;
  });
  std::sort(study.samples.begin(), study.samples.end());
  study.moments = fit_normal(study.samples);
  if (study.moments.std > 0.0) study.fit = fit_skew_normal(study.samples);
  return study;
}

enum class BaselineScheme {
  /// like with probability 1/2
  fair_coin,
  /// like with probability equal to the like prior
  prior_matched,
};

struct BaselineStudy {
  std::size_t n_val = 0;
  double like_prior = 0.0;
  BaselineScheme scheme = BaselineScheme::fair_coin;
  std::vector<double> samples;
  NormalFit fit;
};

/// Accuracy of a classifier that ignores its input, against labels drawn at
/// `like_prior`.
inline BaselineStudy simulate_random_baseline(std::size_t n_val, double like_prior, std::size_t repeats,
                                              std::uint64_t seed, BaselineScheme scheme = BaselineScheme::fair_coin) {
  if (!(like_prior > 0.0 && like_prior < 1.0)) throw InvalidArgument("like prior must be in (0, 1)");
  if (n_val == 0 || repeats == 0) throw InvalidArgument("baseline needs n_val >= 1 and repeats >= 1");
  BaselineStudy study;
  study.n_val = n_val;
  study.like_prior = like_prior;
  study.scheme = scheme;
  study.samples.reserve(repeats);
  const double p_like = scheme == BaselineScheme::fair_coin ? 0.5 : like_prior;
  for (std::size_t r = 0; r < repeats; ++r) {
    Rng rng(derive_seed(seed, 0x72616e646f6d, r));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n_val; ++i) {
      const bool truth = rng.bernoulli(like_prior);
      const bool guess = rng.bernoulli(p_like);
      correct += (truth == guess);
    }
    study.samples.push_back(static_cast<double>(correct) / static_cast<double>(n_val));
  }
  study.fit = fit_normal(study.samples);
  return study;
}

}  // namespace facepref
