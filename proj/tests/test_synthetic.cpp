#include <gtest/gtest.h>

#include <cmath>

#include "facepref/evaluation/roc.hpp"
#include "facepref/evaluation/split.hpp"
#include "facepref/evaluation/studies.hpp"
#include "facepref/synthetic.hpp"

using namespace facepref;

namespace {

double phi(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

SyntheticSpec small_spec(std::size_t n, std::size_t dim, double s, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_profiles = n;
  spec.dim = dim;
  spec.separation = s;
  spec.seed = seed;
  return spec;
}

// Validation metrics and AUC of a logistic model trained on a random split.
std::pair<Metrics, double> holdout(const Dataset& d, std::size_t n_train, std::uint64_t seed) {
  const FeatureMatrix m = build_matrix(d, FeatureMode::avg);
  const Split split = random_split(m.labels, n_train, seed);
  const Model model = train_logistic(take_rows(m, split.train));
  const FeatureMatrix test = take_rows(m, split.test);
  const auto scores = predict_scores(model, test);
  return {evaluate_model(model, test), roc_auc(scores, test.labels).auc};
}

}  // namespace

TEST(FaceCountLaw, MatchesPublishedMoments) {
  const FaceCountLaw law = SyntheticSpec{}.face_count_law();
  EXPECT_NEAR(law.mean(), 3.01, 1e-10);
  EXPECT_NEAR(law.stddev(), 1.34, 1e-10);
  // pmf straight from the normal CDF.
  double total = 0, mean = 0;
  std::vector<double> mass;
  for (int k = 1; k <= 10; ++k) {
    mass.push_back(phi((k + 0.5 - law.mu()) / law.sigma()) - phi((k - 0.5 - law.mu()) / law.sigma()));
    total += mass.back();
  }
  for (int k = 1; k <= 10; ++k) {
    EXPECT_NEAR(law.probability(static_cast<std::size_t>(k)), mass[static_cast<std::size_t>(k - 1)] / total, 1e-14);
    mean += k * mass[static_cast<std::size_t>(k - 1)] / total;
  }
  EXPECT_NEAR(mean, 3.01, 1e-10);
  EXPECT_EQ(law.probability(0), 0.0);
  EXPECT_EQ(law.probability(11), 0.0);
}

TEST(Generate, StatisticsMatchTheSpec) {
  SyntheticSpec spec;
  spec.dim = 4;
  spec.seed = 1;
  const Dataset d = generate(spec);
  ASSERT_EQ(d.size(), 8130u);
  double likes = 0, faces = 0;
  std::size_t max_faces = 0, min_faces = 100;
  for (const Profile& p : d.profiles()) {
    likes += p.label == Label::like;
    faces += static_cast<double>(p.face_count());
    max_faces = std::max(max_faces, p.face_count());
    min_faces = std::min(min_faces, p.face_count());
  }
  const double n = 8130;
  EXPECT_NEAR(likes / n, 0.28, 3 * std::sqrt(0.28 * 0.72 / n));
  const FaceCountLaw law = spec.face_count_law();
  EXPECT_NEAR(faces / n, law.mean(), 3 * law.stddev() / std::sqrt(n));
  EXPECT_GE(min_faces, 1u);
  EXPECT_LE(max_faces, 10u);
  EXPECT_NE(d.provenance().find("synthetic"), std::string::npos);
}

TEST(Generate, ByteDeterministic) {
  const SyntheticSpec spec = small_spec(300, 6, 1.5, 42);
  const std::string a = serialize_dataset(generate(spec), DatasetFormat::csv);
  EXPECT_EQ(a, serialize_dataset(generate(spec), DatasetFormat::csv));
  SyntheticSpec other = spec;
  other.seed = 43;
  EXPECT_NE(a, serialize_dataset(generate(other), DatasetFormat::csv));
}

TEST(Generate, InvalidSpecs) {
  SyntheticSpec spec;
  spec.like_rate = 1.0;
  EXPECT_THROW(generate(spec), InvalidArgument);
  spec = SyntheticSpec{};
  spec.sigma_within = 0.0;
  EXPECT_THROW(generate(spec), InvalidArgument);
  spec = SyntheticSpec{};
  spec.separation = -1.0;
  EXPECT_THROW(bayes_accuracy(spec), InvalidArgument);
  spec = SyntheticSpec{};
  spec.face_count.min = 0;
  EXPECT_THROW(generate(spec), InvalidArgument);
}

TEST(Generate, NoSignalGivesChanceAuc) {
  const Dataset d = generate(small_spec(4000, 8, 0.0, 3));
  const auto [metrics, auc] = holdout(d, 200, 1);
  const double pos = 0.28 * 3800, neg = 0.72 * 3800;
  EXPECT_NEAR(auc, 0.5, 3 * std::sqrt((1 / pos + 1 / neg) / 12));
}

TEST(Generate, LargeSeparationIsLearnable) {
  const Dataset d = generate(small_spec(3000, 8, 20.0, 4));
  const auto [metrics, auc] = holdout(d, 400, 2);
  EXPECT_GE(metrics.accuracy, 0.999);
  EXPECT_GE(auc, 0.999);
}

TEST(Bayes, ClosedFormCases) {
  SyntheticSpec spec;
  spec.separation = 0.0;
  EXPECT_DOUBLE_EQ(bayes_accuracy(spec), 0.5);
  spec.separation = 2.0;
  spec.sigma_within = 1e-12;
  spec.sigma_between = 1.0;
  EXPECT_NEAR(bayes_accuracy(spec), phi(1.0), 1e-12);
  EXPECT_NEAR(bayes_accuracy(spec), 0.841, 5e-4);

  // Prior-aware rule at s = 0 always picks dislike.
  spec.separation = 0.0;
  EXPECT_DOUBLE_EQ(bayes_accuracy_with_prior(spec), 0.72);
  spec.separation = 2.0;
  EXPECT_GT(bayes_accuracy_with_prior(spec), bayes_accuracy(spec));
}

TEST(Bayes, CalibrationHitsTarget) {
  SyntheticSpec spec;
  const double s = calibrate_separation(spec, 0.80);
  spec.separation = s;
  EXPECT_NEAR(bayes_accuracy(spec), 0.80, 1e-12);
  EXPECT_THROW(calibrate_separation(spec, 0.5), InvalidArgument);
}

TEST(Bayes, MonteCarloMidpointRule) {
  // 10 chunks of 10^5 profiles, classified with the true class means.
  double correct = 0;
  double predicted = 0;
  const std::size_t chunks = 10, per_chunk = 100000;
  for (std::size_t c = 0; c < chunks; ++c) {
    SyntheticSpec spec = small_spec(per_chunk, 2, 1.3, 100 + c);
    spec.sigma_within = 1.5;
    const Dataset d = generate(spec);
    const auto dir = class_direction(spec);
    for (const Profile& p : d.profiles()) {
      const FeatureVector avg = build_avg(p);
      double t = 0;
      for (std::size_t k = 0; k < 2; ++k) t += avg.values[k] * dir[k];
      correct += (t >= 0) == (p.label == Label::like);
    }
    predicted = bayes_accuracy(spec);
  }
  const double n = static_cast<double>(chunks * per_chunk);
  EXPECT_NEAR(correct / n, predicted, 3 * std::sqrt(predicted * (1 - predicted) / n));
}

TEST(Bayes, MonteCarloPriorAwareRule) {
  SyntheticSpec spec = small_spec(200000, 3, 1.1, 7);
  const Dataset d = generate(spec);
  const auto dir = class_direction(spec);
  double correct = 0;
  for (const Profile& p : d.profiles()) {
    const FeatureVector avg = build_avg(p);
    double t = 0;
    for (std::size_t k = 0; k < 3; ++k) t += avg.values[k] * dir[k];
    const double sigma = effective_sigma(spec, p.face_count());
    const double threshold = sigma * sigma * std::log(0.72 / 0.28) / spec.separation;
    correct += (t >= threshold) == (p.label == Label::like);
  }
  const double n = 200000, a = bayes_accuracy_with_prior(spec);
  EXPECT_NEAR(correct / n, a, 3 * std::sqrt(a * (1 - a) / n));
}

TEST(Bayes, TrainedModelsStayBelowTheBound) {
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    SyntheticSpec spec = small_spec(20000, 8, 0.0, seed);
    spec.separation = calibrate_separation(spec, 0.80);
    const Dataset d = generate(spec);
    const auto [metrics, auc] = holdout(d, 2000, seed);
    const double bound = bayes_accuracy_with_prior(spec);
    const double n_val = 18000;
    EXPECT_LE(metrics.accuracy, bound + 3 * std::sqrt(bound * (1 - bound) / n_val)) << seed;
    EXPECT_GT(metrics.accuracy, 0.75);
  }
}
