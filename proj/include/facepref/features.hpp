#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "facepref/dataset.hpp"
#include "facepref/errors.hpp"

namespace facepref {

/// Profile-level feature construction: `avg` is the elementwise mean of the
/// face embeddings; `concat` lays the faces end to end, zero-padded to a fixed
/// image count.
enum class FeatureMode { avg, concat };

inline constexpr std::size_t default_max_images = 10;

inline std::string_view feature_mode_token(FeatureMode mode) {
  return mode == FeatureMode::avg ? "avg" : "concat";
}

inline FeatureMode parse_feature_mode(std::string_view token) {
  if (token == "avg") return FeatureMode::avg;
  if (token == "concat") return FeatureMode::concat;
  throw InvalidArgument("unknown feature mode '" + std::string(token) + "' (expected avg or concat)");
}

inline std::size_t feature_width(FeatureMode mode, std::size_t dim, std::size_t max_images) {
  return mode == FeatureMode::avg ? dim : dim * max_images;
}

struct FeatureVector {
  FeatureMode mode = FeatureMode::avg;
  std::vector<double> values;
  /// Set when the profile had more faces than the concat layout holds.
  bool truncated = false;

  std::size_t width() const noexcept { return values.size(); }
};

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline FeatureVector build_avg(const Profile& p) {
  if (p.faces.empty()) throw EmptyProfileError("profile '" + p.id + "' has no faces");
  const std::size_t dim = p.faces.front().dim();
  FeatureVector out{FeatureMode::avg, std::vector<double>(dim, 0.0), false};
  // Left-to-right over stored face order, then one division.
  for (const Embedding& face : p.faces) {
    for (std::size_t k = 0; k < dim; ++k) out.values[k] += face[k];
  }
  const double f = static_cast<double>(p.faces.size());
  for (double& v : out.values) v /= f;
  return out;
}

inline FeatureVector build_concat(const Profile& p, std::size_t max_images = default_max_images) {
  if (p.faces.empty()) throw EmptyProfileError("profile '" + p.id + "' has no faces");
  if (max_images == 0) throw InvalidArgument("max image count must be >= 1");
  const std::size_t dim = p.faces.front().dim();
  FeatureVector out{FeatureMode::concat, std::vector<double>(dim * max_images, 0.0),
                    p.faces.size() > max_images};
  const std::size_t used = std::min(p.faces.size(), max_images);
  for (std::size_t i = 0; i < used; ++i) {
    const auto values = p.faces[i].values();
    std::copy(values.begin(), values.end(), out.values.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return out;
}

inline FeatureVector build_features(const Profile& p, FeatureMode mode,
                                    std::size_t max_images = default_max_images) {
  return mode == FeatureMode::avg ? build_avg(p) : build_concat(p, max_images);
}

/// Training-set container: one row per profile, sorted by profile id.
struct FeatureMatrix {
  FeatureMode mode = FeatureMode::avg;
  std::size_t max_images = default_max_images;
  RowMatrix rows;
  std::vector<int> labels;
  std::vector<std::string> profile_ids;
  std::vector<std::string> warnings;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t width() const noexcept { return static_cast<std::size_t>(rows.cols()); }

  std::span<const double> row(std::size_t i) const {
    return {rows.data() + i * width(), width()};
  }

  FeatureVector vector(std::size_t i) const {
    const auto r = row(i);
    return {mode, std::vector<double>(r.begin(), r.end()), false};
  }

  std::size_t like_count() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  }
};

inline FeatureMatrix build_matrix(const Dataset& d, FeatureMode mode,
                                  std::size_t max_images = default_max_images) {
  std::vector<const Profile*> order;
  order.reserve(d.size());
  for (const Profile& p : d.profiles()) order.push_back(&p);
  std::sort(order.begin(), order.end(),
            [](const Profile* a, const Profile* b) { return a->id < b->id; });

  FeatureMatrix m;
  m.mode = mode;
  m.max_images = max_images;
  const std::size_t width = feature_width(mode, d.dim(), max_images);
  m.rows.resize(static_cast<Eigen::Index>(order.size()), static_cast<Eigen::Index>(width));
  m.labels.reserve(order.size());
  m.profile_ids.reserve(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Profile& p = *order[i];
    const FeatureVector fv = build_features(p, mode, max_images);
    if (fv.truncated) {
      m.warnings.push_back("profile '" + p.id + "' has " + std::to_string(p.face_count()) +
                           " faces; only the first " + std::to_string(max_images) + " are used");
    }
    std::copy(fv.values.begin(), fv.values.end(), m.rows.data() + i * width);
    m.labels.push_back(label_value(p.label));
    m.profile_ids.push_back(p.id);
  }
  return m;
}

/// Rows `indices` of `m`, in the given order.
inline FeatureMatrix take_rows(const FeatureMatrix& m, std::span<const std::size_t> indices) {
  FeatureMatrix out;
  out.mode = m.mode;
  out.max_images = m.max_images;
  out.rows.resize(static_cast<Eigen::Index>(indices.size()), m.rows.cols());
  out.labels.reserve(indices.size());
  out.profile_ids.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.rows.row(static_cast<Eigen::Index>(i)) = m.rows.row(static_cast<Eigen::Index>(indices[i]));
    out.labels.push_back(m.labels[indices[i]]);
    out.profile_ids.push_back(m.profile_ids[indices[i]]);
  }
  return out;
}

}  // namespace facepref
