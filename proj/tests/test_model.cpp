#include <gtest/gtest.h>

#include <json.hpp>

#include "facepref/classifiers/model.hpp"
#include "facepref/features.hpp"
#include "test_util.hpp"

using namespace facepref;

namespace {

std::vector<ModelOptions> every_family() {
  SvmOptions svm;
  svm.standardize = true;
  MlpOptions nn1;
  nn1.epochs = 15;
  nn1.seed = 3;
  MlpOptions nn2 = nn1;
  nn2.hidden = nn2_layers();
  LogisticOptions weighted;
  weighted.weighting = ClassWeighting::explicit_weights(2.0, 0.5);
  return {LogisticOptions{}, weighted, svm, SvmOptions{}, nn1, nn2};
}

}  // namespace

TEST(ModelFile, RoundTripIsExact) {
  const Dataset d = testutil::gaussian_dataset(1, 60, 5);
  for (FeatureMode mode : {FeatureMode::avg, FeatureMode::concat}) {
    const FeatureMatrix m = build_matrix(d, mode, 3);
    for (const ModelOptions& o : every_family()) {
      const Model model = train_model(m, o);
      const std::string payload = save_model(model);
      const Model back = load_model(payload);
      EXPECT_EQ(save_model(back), payload);
      EXPECT_EQ(back.family, model.family);
      EXPECT_EQ(back.feature_mode, mode);
      EXPECT_EQ(back.max_images, 3u);
      EXPECT_EQ(back.train_meta.objective_history, model.train_meta.objective_history);
      const auto a = predict_scores(model, m);
      const auto b = predict_scores(back, m);
      EXPECT_EQ(a, b);  // bit-identical
      std::size_t correct = 0;
      for (std::size_t i = 0; i < m.size(); ++i) correct += label_value(classify(back, b[i])) == m.labels[i];
      EXPECT_EQ(static_cast<double>(correct) / static_cast<double>(m.size()), model.train_meta.training_accuracy);
    }
  }
}

TEST(ModelFile, FileOnDisk) {
  testutil::TempDir dir;
  const FeatureMatrix m = build_matrix(testutil::gaussian_dataset(2, 30, 4), FeatureMode::avg);
  const Model model = train_logistic(m);
  save_model_file(model, dir / "model.bin");
  EXPECT_EQ(save_model(load_model_file(dir / "model.bin")), save_model(model));
  EXPECT_THROW(load_model_file(dir / "missing.json"), NotFoundError);
}

TEST(ModelFile, CorruptPayloads) {
  const FeatureMatrix m = build_matrix(testutil::gaussian_dataset(3, 30, 4), FeatureMode::avg);
  const std::string good = save_model(train_logistic(m));
  EXPECT_THROW(load_model(""), CorruptModelError);
  EXPECT_THROW(load_model("{"), CorruptModelError);
  EXPECT_THROW(load_model("[1,2]"), CorruptModelError);
  EXPECT_THROW(load_model(good.substr(0, good.size() / 2)), CorruptModelError);

  auto j = nlohmann::json::parse(good);
  j["params"]["weights"].push_back(1.0);
  EXPECT_THROW(load_model(j.dump()), CorruptModelError);

  j = nlohmann::json::parse(good);
  j["family"] = "forest";
  EXPECT_THROW(load_model(j.dump()), CorruptModelError);

  j = nlohmann::json::parse(good);
  j.erase("train_meta");
  EXPECT_THROW(load_model(j.dump()), CorruptModelError);

  j = nlohmann::json::parse(good);
  j["params"]["bias"] = "zero";
  EXPECT_THROW(load_model(j.dump()), CorruptModelError);
}

TEST(ModelFile, VersionMismatch) {
  const FeatureMatrix m = build_matrix(testutil::gaussian_dataset(4, 30, 4), FeatureMode::avg);
  auto j = nlohmann::json::parse(save_model(train_logistic(m)));
  j["version"] = model_format_version + 1;
  EXPECT_THROW(load_model(j.dump()), VersionError);
}

TEST(ModelFile, WidthMismatchOnPredict) {
  const Dataset d = testutil::gaussian_dataset(5, 30, 4);
  const Model model = train_logistic(build_matrix(d, FeatureMode::concat, 2));
  const Profile& p = d.profiles().front();
  EXPECT_NO_THROW(predict_score(model, model_features(model, p)));
  EXPECT_THROW(predict_score(model, build_avg(p)), ShapeError);
  EXPECT_THROW(predict_score(model, build_concat(p, 3)), ShapeError);
  EXPECT_THROW(predict_scores(model, build_matrix(d, FeatureMode::avg)), ShapeError);
}

TEST(ModelFile, SingleClassTrainingRefused) {
  Dataset d = testutil::gaussian_dataset(6, 20, 3, 1.0, 0.0);
  const FeatureMatrix m = build_matrix(d, FeatureMode::avg);
  ASSERT_EQ(m.like_count(), 0u);
  for (const ModelOptions& o : every_family()) EXPECT_THROW(train_model(m, o), SingleClassError);
}
