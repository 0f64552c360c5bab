#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "facepref/features.hpp"
#include "test_util.hpp"

using namespace facepref;

namespace {

Profile profile_with(std::vector<std::vector<double>> faces, Label label = Label::like, std::string id = "q") {
  Profile p;
  p.id = std::move(id);
  p.label = label;
  for (auto& f : faces) p.faces.emplace_back(std::move(f));
  return p;
}

Profile random_profile(Rng& rng, std::size_t faces, std::size_t dim) {
  std::vector<std::vector<double>> v;
  for (std::size_t i = 0; i < faces; ++i) v.push_back(testutil::random_vector(rng, dim));
  return profile_with(std::move(v));
}

// Independent mean: accumulate each coordinate in long double.
std::vector<double> oracle_mean(const Profile& p) {
  const std::size_t dim = p.faces.front().dim();
  std::vector<double> out(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < p.faces.size(); ++i) s += p.faces[i].values()[k];
    out[k] = static_cast<double>(s / static_cast<long double>(p.faces.size()));
  }
  return out;
}

}  // namespace

TEST(BuildAvg, SingleFaceUnchanged) {
  Rng rng(1);
  const Profile p = random_profile(rng, 1, 128);
  const FeatureVector fv = build_avg(p);
  EXPECT_EQ(fv.mode, FeatureMode::avg);
  ASSERT_EQ(fv.values.size(), 128u);
  for (std::size_t k = 0; k < 128; ++k) EXPECT_EQ(fv.values[k], p.faces[0].values()[k]);
}

TEST(BuildAvg, ZerosAndTwosGiveOnes) {
  const FeatureVector fv = build_avg(profile_with({{0, 0, 0, 0}, {2, 2, 2, 2}}));
  EXPECT_EQ(fv.values, (std::vector<double>{1, 1, 1, 1}));
}

TEST(BuildAvg, MatchesSummationOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const Profile p = random_profile(rng, 3, 128);
    const FeatureVector fv = build_avg(p);
    const auto expected = oracle_mean(p);
    for (std::size_t k = 0; k < 128; ++k) {
      ASSERT_NEAR(fv.values[k], expected[k], 1e-15 * (1.0 + std::abs(expected[k])));
      // Left-to-right then divide, spelled out.
      const double direct = (p.faces[0].values()[k] + p.faces[1].values()[k] + p.faces[2].values()[k]) / 3.0;
      ASSERT_EQ(fv.values[k], direct);
    }
  }
}

TEST(BuildAvg, EmptyProfileThrows) {
  EXPECT_THROW(build_avg(profile_with({})), EmptyProfileError);
  EXPECT_THROW(build_concat(profile_with({})), EmptyProfileError);
}

TEST(BuildConcat, PaddingLayout) {
  Rng rng(3);
  for (std::size_t f : {1u, 2u}) {
    const Profile p = random_profile(rng, f, 128);
    const FeatureVector fv = build_concat(p, 10);
    ASSERT_EQ(fv.values.size(), 1280u);
    EXPECT_FALSE(fv.truncated);
    for (std::size_t i = 0; i < f; ++i) {
      for (std::size_t k = 0; k < 128; ++k) ASSERT_EQ(fv.values[i * 128 + k], p.faces[i].values()[k]);
    }
    const auto zeros = std::count(fv.values.begin() + static_cast<std::ptrdiff_t>(128 * f), fv.values.end(), 0.0);
    EXPECT_EQ(static_cast<std::size_t>(zeros), 1280 - 128 * f);
  }
}

TEST(BuildConcat, SingleSlotEqualsAverage) {
  Rng rng(4);
  const Profile p = random_profile(rng, 1, 16);
  EXPECT_EQ(build_concat(p, 1).values, build_avg(p).values);
}

TEST(BuildConcat, TruncatesToFirstFaces) {
  Rng rng(5);
  const Profile p = random_profile(rng, 4, 3);
  const FeatureVector fv = build_concat(p, 2);
  EXPECT_TRUE(fv.truncated);
  ASSERT_EQ(fv.values.size(), 6u);
  EXPECT_EQ(fv.values[3], p.faces[1].values()[0]);
  EXPECT_THROW(build_concat(p, 0), InvalidArgument);
}

TEST(BuildConcat, OrderSensitiveWhileAverageIsNot) {
  Rng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    Profile p = random_profile(rng, 4, 8);
    Profile shuffled = p;
    std::reverse(shuffled.faces.begin(), shuffled.faces.end());
    const auto a = build_avg(p).values;
    const auto b = build_avg(shuffled).values;
    for (std::size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(a[k], b[k], 1e-12 * (1.0 + std::abs(a[k])));
    EXPECT_NE(build_concat(p).values, build_concat(shuffled).values);
  }
}

TEST(Features, AverageOfConcatBlocks) {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t f = 1 + rng.index(10);
    const std::size_t dim = 1 + rng.index(20);
    const Profile p = random_profile(rng, f, dim);
    const auto concat = build_concat(p, 10).values;
    const auto avg = build_avg(p).values;
    for (std::size_t k = 0; k < dim; ++k) {
      double s = 0.0;
      for (std::size_t i = 0; i < f; ++i) s += concat[i * dim + k];
      ASSERT_NEAR(avg[k], s / static_cast<double>(f), 1e-12 * (1.0 + std::abs(avg[k])));
    }
  }
}

TEST(Features, Linearity) {
  Rng rng(8);
  for (double c : {2.0, -0.5, 3.7, 1e-3}) {
    const Profile p = random_profile(rng, 3, 12);
    Profile scaled = p;
    for (auto& face : scaled.faces) {
      std::vector<double> v(face.values().begin(), face.values().end());
      for (double& x : v) x *= c;
      face = Embedding(std::move(v));
    }
    const auto a = build_avg(p).values, sa = build_avg(scaled).values;
    const auto b = build_concat(p).values, sb = build_concat(scaled).values;
    for (std::size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(sa[k], c * a[k], 1e-12 * (1.0 + std::abs(c * a[k])));
    for (std::size_t k = 0; k < b.size(); ++k) ASSERT_EQ(sb[k], c * b[k]);
  }
}

TEST(BuildMatrix, Shapes) {
  const Dataset d(3, {profile_with({{1, 2, 3}}, Label::like, "a"), profile_with({{4, 5, 6}, {0, 1, 0}}, Label::dislike, "b")});
  const FeatureMatrix avg = build_matrix(d, FeatureMode::avg);
  EXPECT_EQ(avg.size(), 2u);
  EXPECT_EQ(avg.width(), 3u);
  EXPECT_EQ(avg.labels, (std::vector<int>{1, 0}));
  const FeatureMatrix concat = build_matrix(d, FeatureMode::concat, 10);
  EXPECT_EQ(concat.size(), 2u);
  EXPECT_EQ(concat.width(), 30u);
}

TEST(BuildMatrix, RowsEqualPerProfileFeatures) {
  const Dataset d = testutil::gaussian_dataset(9, 50, 7);
  for (const auto mode : {FeatureMode::avg, FeatureMode::concat}) {
    const FeatureMatrix m = build_matrix(d, mode, 4);
    ASSERT_EQ(m.size(), d.size());
    EXPECT_TRUE(std::is_sorted(m.profile_ids.begin(), m.profile_ids.end()));
    for (std::size_t i = 0; i < m.size(); ++i) {
      const Profile& p = d.at(m.profile_ids[i]);
      const auto expected = build_features(p, mode, 4).values;
      const auto row = m.row(i);
      ASSERT_TRUE(std::equal(row.begin(), row.end(), expected.begin(), expected.end()));
      EXPECT_EQ(m.labels[i], label_value(p.label));
    }
  }
}

TEST(BuildMatrix, WarnsOnTruncationAndRejectsUnreviewed) {
  const Dataset many(1, {profile_with({{1}, {2}, {3}}, Label::like, "a")});
  EXPECT_EQ(build_matrix(many, FeatureMode::concat, 2).warnings.size(), 1u);
  EXPECT_TRUE(build_matrix(many, FeatureMode::avg).warnings.empty());
  const Dataset open(1, {profile_with({{1}}, Label::unreviewed, "a")});
  EXPECT_THROW(build_matrix(open, FeatureMode::avg), LabelError);
}

TEST(BuildMatrix, TakeRows) {
  const FeatureMatrix m = build_matrix(testutil::gaussian_dataset(10, 10, 2), FeatureMode::avg);
  const std::vector<std::size_t> idx{7, 2};
  const FeatureMatrix sub = take_rows(m, idx);
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub.profile_ids[0], m.profile_ids[7]);
  EXPECT_EQ(sub.labels[1], m.labels[2]);
  EXPECT_EQ(sub.row(0)[1], m.row(7)[1]);
}
