// Generate a small synthetic review history, fit a logistic model on 40
// reviewed profiles and score the rest.

#include <iostream>

#include "facepref/facepref.hpp"

int main() {
  using namespace facepref;

  SyntheticSpec spec;
  spec.n_profiles = 1000;
  spec.seed = 7;
  spec.separation = calibrate_separation(spec, 0.80);
  const Dataset data = generate(spec);

  const FeatureMatrix all = build_matrix(data, FeatureMode::avg);
  const Split split = random_split(all.labels, 40, 11);
  const FeatureMatrix train = take_rows(all, split.train);
  const FeatureMatrix test = take_rows(all, split.test);

  const Model model = train_logistic(train);
  const Metrics m = evaluate_model(model, test);
  const RocCurve roc = roc_auc(predict_scores(model, test), test.labels);

  std::cout << "trained on " << train.size() << " profiles, validated on " << test.size() << "\n"
            << "accuracy " << m.accuracy << ", like accuracy " << m.like_accuracy << ", dislike accuracy "
            << m.dislike_accuracy << ", AUC " << roc.auc << "\n";

  const Profile& p = data.profiles().front();
  const double score = predict_score(model, model_features(model, p));
  std::cout << p.id << ": score " << score << " -> " << label_token(classify(model, score)) << "\n";
}
