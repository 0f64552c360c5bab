#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "facepref/errors.hpp"

namespace facepref {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  /// Scores >= threshold are called like at this point.
  double threshold = 0.0;

  bool operator==(const RocPoint&) const = default;
};

struct RocCurve {
  std::vector<RocPoint> points;
  double auc = 0.0;
};

inline double trapezoid_area(std::span<const RocPoint> points) {
  double area = 0.0;
  for (std::size_t k = 1; k < points.size(); ++k) {
    area += (points[k].fpr - points[k - 1].fpr) * (points[k - 1].tpr + points[k].tpr) * 0.5;
  }
  return area;
}

namespace detail {

inline std::pair<std::size_t, std::size_t> class_totals(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  std::size_t pos = 0;
  for (int y : labels) pos += (y == 1);
  const std::size_t neg = labels.size() - pos;
  if (pos == 0 || neg == 0) throw SingleClassError("ROC needs both classes");
  return {pos, neg};
}

}  // namespace detail

/// Sweeps every distinct score as a threshold, from +inf down. Equal scores
/// form one step. AUC is the trapezoidal area under the resulting points.
inline RocCurve roc_auc(std::span<const double> scores, std::span<const int> labels) {
  const auto [pos, neg] = detail::class_totals(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t k = 0; k < order.size();) {
    const double threshold = scores[order[k]];
    while (k < order.size() && scores[order[k]] == threshold) {
      if (labels[order[k]] == 1) ++tp; else ++fp;
      ++k;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                            static_cast<double>(tp) / static_cast<double>(pos), threshold});
  }
  curve.auc = trapezoid_area(curve.points);
  return curve;
}

/// AUC as the Mann-Whitney statistic from mid-ranks: the probability that a
/// random liked profile outscores a random disliked one, ties counting half.
inline double auc_rank_statistic(std::span<const double> scores, std::span<const int> labels) {
  const auto [pos, neg] = detail::class_totals(scores, labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k;
    while (end < order.size() && scores[order[end]] == scores[order[k]]) ++end;
    const double mid_rank = 0.5 * static_cast<double>(k + 1 + end);
    for (std::size_t t = k; t < end; ++t) {
      if (labels[order[t]] == 1) rank_sum += mid_rank;
    }
    k = end;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

}  // namespace facepref
