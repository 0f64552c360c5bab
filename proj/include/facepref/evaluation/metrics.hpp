#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <string>

#include "facepref/errors.hpp"

namespace facepref {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t tn = 0;
  std::size_t fn = 0;

  std::size_t total() const noexcept { return tp + fp + tn + fn; }
  std::size_t positives() const noexcept { return tp + fn; }
  std::size_t negatives() const noexcept { return tn + fp; }

  bool operator==(const ConfusionCounts&) const = default;
};

/// accuracy = (tp+tn)/n, like accuracy = true positive rate,
/// dislike accuracy = true negative rate. A rate whose class is absent is NaN.
struct Metrics {
  double accuracy = 0.0;
  double like_accuracy = 0.0;
  double dislike_accuracy = 0.0;
  ConfusionCounts counts;

  /// Fraction of liked profiles in the evaluated set.
  double like_prior() const noexcept {
    return static_cast<double>(counts.positives()) / static_cast<double>(counts.total());
  }
};

inline Metrics metrics_from_counts(const ConfusionCounts& c) {
  if (c.total() == 0) throw InvalidArgument("metrics need at least one example");
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  Metrics m;
  m.counts = c;
  m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
  m.like_accuracy = c.positives() > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.positives()) : nan;
  m.dislike_accuracy = c.negatives() > 0 ? static_cast<double>(c.tn) / static_cast<double>(c.negatives()) : nan;
  return m;
}

/// Labels are 1 (like) / 0 (dislike).
inline Metrics compute_metrics(std::span<const int> y_true, std::span<const int> y_pred) {
  if (y_true.size() != y_pred.size()) {
    throw ShapeError("label and prediction counts differ (" + std::to_string(y_true.size()) + " vs " +
                     std::to_string(y_pred.size()) + ")");
  }
  if (y_true.empty()) throw InvalidArgument("metrics need at least one example");
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool truth = y_true[i] == 1;
    const bool predicted = y_pred[i] == 1;
    if (truth && predicted) ++c.tp;
    else if (truth) ++c.fn;
    else if (predicted) ++c.fp;
    else ++c.tn;
  }
  return metrics_from_counts(c);
}

}  // namespace facepref
