#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "facepref/dataset.hpp"
#include "facepref/features.hpp"
#include "facepref/random.hpp"

namespace facepref::testutil {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("facepref-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Values with awkward decimal expansions, signs and magnitudes.
inline double awkward_value(Rng& rng) {
  switch (rng.index(5)) {
    case 0: return rng.normal();
    case 1: return rng.normal() * 1e-300;
    case 2: return rng.normal() * 1e300;
    case 3: return static_cast<double>(static_cast<std::int64_t>(rng.index(2001))) - 1000.0;
    default: return 1.0 / 3.0 * (rng.uniform() - 0.5);
  }
}

inline Dataset random_dataset(std::uint64_t seed, std::size_t max_profiles = 12, std::size_t max_dim = 6) {
  Rng rng(seed);
  const std::size_t dim = 1 + rng.index(max_dim);
  const std::size_t n = rng.index(max_profiles + 1);
  std::vector<Profile> profiles;
  for (std::size_t i = 0; i < n; ++i) {
    Profile p;
    p.id = "u" + std::to_string(seed) + "_" + std::to_string(i);
    p.label = static_cast<Label>(rng.index(3));
    if (p.label != Label::unreviewed && rng.bernoulli(0.2)) p.source = LabelSource::machine;
    const std::size_t faces = rng.index(5);
    for (std::size_t f = 0; f < faces; ++f) {
      std::vector<double> v(dim);
      for (double& x : v) x = awkward_value(rng);
      p.faces.emplace_back(std::move(v));
    }
    if (rng.bernoulli(0.3)) p.display = DisplayInfo{"name \"" + std::to_string(i) + "\", é", static_cast<int>(18 + rng.index(40)), {"img/" + std::to_string(i) + ".jpg"}};
    profiles.push_back(std::move(p));
  }
  return Dataset(dim, std::move(profiles), rng.bernoulli(0.5) ? "" : "seed " + std::to_string(seed) + ", note\nline");
}

/// Labeled profiles with Gaussian faces; like profiles are shifted by `shift`.
inline Dataset gaussian_dataset(std::uint64_t seed, std::size_t n, std::size_t dim, double shift = 1.0,
                                double like_rate = 0.4) {
  Rng rng(seed);
  std::vector<Profile> profiles;
  for (std::size_t i = 0; i < n; ++i) {
    Profile p;
    char id[32];
    std::snprintf(id, sizeof(id), "g%04zu", i);
    p.id = id;
    const bool like = rng.bernoulli(like_rate);
    p.label = like ? Label::like : Label::dislike;
    const std::size_t faces = 1 + rng.index(3);
    for (std::size_t f = 0; f < faces; ++f) {
      std::vector<double> v(dim);
      for (std::size_t k = 0; k < dim; ++k) v[k] = rng.normal() + (like && k == 0 ? shift : 0.0);
      p.faces.emplace_back(std::move(v));
    }
    profiles.push_back(std::move(p));
  }
  return Dataset(dim, std::move(profiles));
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  return v;
}

}  // namespace facepref::testutil
