#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "facepref/dataset.hpp"
#include "facepref/errors.hpp"
#include "facepref/random.hpp"

namespace facepref {

struct Split {
  /// Row indices, ascending.
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  /// Draws made before the training side held both classes.
  std::size_t attempts = 0;
};

/// Uniform random train/test split conditioned on the training side holding
/// both classes (rejection sampling). The class ratio is not stratified.
inline Split random_split(std::span<const int> labels, std::size_t n_train, std::uint64_t seed) {
  const std::size_t n = labels.size();
  if (n_train < 2 || n_train + 1 > n) {
    throw InvalidArgument("training size must be in [2, " + std::to_string(n > 0 ? n - 1 : 0) + "], got " +
                          std::to_string(n_train));
  }
  std::size_t likes = 0;
  for (int y : labels) likes += (y == 1);
  if (likes == 0 || likes == n) throw SingleClassError("dataset lacks one class entirely");

  std::vector<std::size_t> order(n);
  for (std::size_t attempt = 0;; ++attempt) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(derive_seed(seed, 0x73706c6974, attempt));
    for (std::size_t k = 0; k < n_train; ++k) std::swap(order[k], order[k + rng.index(n - k)]);
    std::size_t train_likes = 0;
    for (std::size_t k = 0; k < n_train; ++k) train_likes += (labels[order[k]] == 1);
    if (train_likes == 0 || train_likes == n_train) continue;

    Split split;
    split.attempts = attempt + 1;
    split.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::sort(split.train.begin(), split.train.end());
    std::vector<char> in_train(n, 0);
    for (std::size_t i : split.train) in_train[i] = 1;
    split.test.reserve(n - n_train);
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_train[i]) split.test.push_back(i);
    }
    return split;
  }
}

struct IdSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

/// Split of a reviewable dataset, by profile id in dataset order.
inline IdSplit random_split(const Dataset& d, std::size_t n_train, std::uint64_t seed) {
  std::vector<int> labels;
  labels.reserve(d.size());
  for (const Profile& p : d.profiles()) labels.push_back(label_value(p.label));
  const Split split = random_split(labels, n_train, seed);
  IdSplit out;
  for (std::size_t i : split.train) out.train.push_back(d.profiles()[i].id);
  for (std::size_t i : split.test) out.test.push_back(d.profiles()[i].id);
  return out;
}

}  // namespace facepref
