#pragma once

// Command-line front end. run_cli is the whole program minus process setup,
// so tests can drive it in-process.

#include <atomic>
#include <csignal>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "facepref/facepref.hpp"

namespace facepref::cli {

struct ModelFlags {
  std::string family = "logistic";
  std::string weighting = "uniform";
  double like_weight = 1.0;
  double dislike_weight = 1.0;
  double l2 = 1.0;
  double c = 1.0;
  std::optional<double> gamma;
  std::string architecture = "NN1";
  std::size_t epochs = 100;
  double step_size = 0.01;
  std::size_t batch_size = 32;
  bool standardize = false;

  void attach(CLI::App* cmd, const char* family_flag) {
    cmd->add_option(family_flag, family, "logistic | svm_rbf | mlp | nn1 | nn2")->capture_default_str();
    cmd->add_option("--weighting", weighting, "uniform | inverse_frequency | explicit")->capture_default_str();
    cmd->add_option("--like-weight", like_weight, "like weight under --weighting explicit");
    cmd->add_option("--dislike-weight", dislike_weight, "dislike weight under --weighting explicit");
    cmd->add_option("--l2", l2, "logistic L2 penalty")->capture_default_str();
    cmd->add_option("--C", c, "SVM box constraint")->capture_default_str();
    cmd->add_option("--gamma", gamma, "RBF gamma (default 1/width)");
    cmd->add_option("--architecture", architecture, "MLP hidden layers: NN1, NN2 or e.g. 128-64")->capture_default_str();
    cmd->add_option("--epochs", epochs, "MLP epochs")->capture_default_str();
    cmd->add_option("--step-size", step_size, "MLP step size")->capture_default_str();
    cmd->add_option("--batch-size", batch_size, "MLP batch size")->capture_default_str();
    cmd->add_flag("--standardize", standardize, "standardize features before fitting");
  }

  ClassWeighting class_weighting() const {
    ClassWeighting w = parse_weighting(weighting);
    if (w.scheme == ClassWeighting::Scheme::explicit_weights) w = ClassWeighting::explicit_weights(like_weight, dislike_weight);
    return w;
  }

  ModelSpec spec(std::string token, std::uint64_t seed) const {
    if (token == "nn1" || token == "NN1") return {"NN1", mlp(nn1_layers(), seed)};
    if (token == "nn2" || token == "NN2") return {"NN2", mlp(nn2_layers(), seed)};
    switch (parse_family(token)) {
      case ModelFamily::logistic: {
        LogisticOptions o;
        o.weighting = class_weighting();
        o.l2 = l2;
        o.standardize = standardize;
        return {"logistic", o};
      }
      case ModelFamily::svm_rbf: {
        SvmOptions o;
        o.weighting = class_weighting();
        o.C = c;
        o.gamma = gamma;
        o.standardize = standardize;
        return {"svm_rbf", o};
      }
      case ModelFamily::mlp:
        return {"mlp", mlp(parse_architecture(architecture), seed)};
    }
    throw InvalidArgument("unknown model '" + token + "'");
  }

 private:
  MlpOptions mlp(std::vector<std::size_t> hidden, std::uint64_t seed) const {
    MlpOptions o;
    o.weighting = class_weighting();
    o.hidden = std::move(hidden);
    o.seed = seed;
    o.epochs = epochs;
    o.step_size = step_size;
    o.batch_size = batch_size;
    o.standardize = standardize;
    return o;
  }
};

inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFoundError("cannot open '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

inline void write_output(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_atomic(path, text);
  }
}

inline FeatureMatrix training_matrix(const std::string& data, const std::string& features, std::size_t max_images,
                                     bool include_machine, std::ostream& err) {
  const Dataset d = filter_reviewable(load_dataset(data), include_machine);
  FeatureMatrix m = build_matrix(d, parse_feature_mode(features), max_images);
  for (const std::string& w : m.warnings) err << "warning: " << w << "\n";
  return m;
}

inline void print_metrics(std::ostream& out, const char* name, const Metrics& m) {
  out << name << ": accuracy=" << format_double(m.accuracy) << " like_accuracy=" << format_double(m.like_accuracy)
      << " dislike_accuracy=" << format_double(m.dislike_accuracy) << " n=" << m.counts.total() << "\n";
}

inline std::atomic<int>* stop_flag() {
  static std::atomic<int> flag{0};
  static_assert(std::atomic<int>::is_always_lock_free);
  return &flag;
}

inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Personalized like/dislike preference engine over face embeddings", "facepref"};
  app.require_subcommand(1);

  std::uint64_t seed = 0;
  const auto add_seed = [&](CLI::App* cmd) { cmd->add_option("--seed", seed, "master seed")->capture_default_str(); };

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  SyntheticSpec sspec;
  std::optional<double> separation;
  double target_bayes = 0.80;
  std::string synth_out;
  synth->add_option("--out", synth_out, "dataset path (.csv or .jsonl)")->required();
  synth->add_option("--n", sspec.n_profiles, "profiles")->capture_default_str();
  synth->add_option("--like-rate", sspec.like_rate, "probability of like")->capture_default_str();
  synth->add_option("--dim", sspec.dim, "embedding length")->capture_default_str();
  synth->add_option("--face-mean", sspec.face_count.mean, "faces per profile, mean")->capture_default_str();
  synth->add_option("--face-std", sspec.face_count.std, "faces per profile, std")->capture_default_str();
  synth->add_option("--face-min", sspec.face_count.min, "faces per profile, min")->capture_default_str();
  synth->add_option("--face-max", sspec.face_count.max, "faces per profile, max")->capture_default_str();
  synth->add_option("--sigma-within", sspec.sigma_within, "face noise around the profile center")->capture_default_str();
  synth->add_option("--sigma-between", sspec.sigma_between, "profile spread around the class mean")->capture_default_str();
  auto* sep_opt = synth->add_option("--separation", separation, "distance between class means");
  synth->add_option("--bayes-accuracy", target_bayes, "calibrate separation to this accuracy")
      ->capture_default_str()
      ->excludes(sep_opt);
  add_seed(synth);

  // ingest
  auto* ingest = app.add_subcommand("ingest", "parse and validate a dataset");
  std::string ingest_data, ingest_out;
  ingest->add_option("--data", ingest_data, "dataset path")->required();
  ingest->add_option("--out", ingest_out, "rewrite to this path (format from extension)");
  add_seed(ingest);

  // features
  auto* features = app.add_subcommand("features", "export the feature matrix as CSV");
  std::string feat_data, feat_mode = "avg", feat_out;
  std::size_t max_images = default_max_images;
  bool include_machine = false;
  features->add_option("--data", feat_data, "dataset path")->required();
  features->add_option("--features", feat_mode, "avg | concat")->capture_default_str();
  features->add_option("--max-images", max_images, "concat slots")->capture_default_str();
  features->add_option("--out", feat_out, "CSV path (default stdout)");
  features->add_flag("--include-machine-labels", include_machine, "keep machine-labeled profiles");
  add_seed(features);

  // train
  auto* train = app.add_subcommand("train", "fit a model and write it");
  ModelFlags train_flags;
  std::string train_data, train_features = "avg", train_out;
  train_flags.attach(train, "--model");
  train->add_option("--data", train_data, "dataset path")->required();
  train->add_option("--features", train_features, "avg | concat")->capture_default_str();
  train->add_option("--max-images", max_images, "concat slots")->capture_default_str();
  train->add_option("--out", train_out, "model path")->required();
  train->add_flag("--include-machine-labels", include_machine, "train on machine labels too");
  add_seed(train);

  // eval
  auto* eval = app.add_subcommand("eval", "metrics and ROC for a saved model, or for a fresh 95:5 split");
  ModelFlags eval_flags;
  std::string eval_data, eval_features = "avg", eval_model_file, roc_out, report_out;
  eval_flags.attach(eval, "--model");
  eval->add_option("--model-file", eval_model_file, "evaluate this saved model on the whole dataset");
  eval->add_option("--data", eval_data, "dataset path")->required();
  eval->add_option("--features", eval_features, "avg | concat (split mode)")->capture_default_str();
  eval->add_option("--max-images", max_images, "concat slots")->capture_default_str();
  eval->add_option("--roc-out", roc_out, "ROC CSV path");
  eval->add_option("--report-out", report_out, "report JSON path (default stdout)");
  eval->add_flag("--include-machine-labels", include_machine, "evaluate on machine labels too");
  add_seed(eval);

  // curve
  auto* curve = app.add_subcommand("curve", "learning curve over training sizes");
  ModelFlags curve_flags;
  std::string curve_data, curve_features = "avg", curve_models = "logistic,svm_rbf,nn1,nn2", curve_out, curve_json;
  std::vector<std::size_t> sizes;
  std::vector<double> fractions;
  std::size_t curve_repeats = 1;
  curve_flags.attach(curve, "--family");
  curve->add_option("--data", curve_data, "dataset path")->required();
  curve->add_option("--features", curve_features, "avg | concat")->capture_default_str();
  curve->add_option("--models", curve_models, "comma list of logistic, svm_rbf, nn1, nn2, mlp")->capture_default_str();
  auto* sizes_opt = curve->add_option("--sizes", sizes, "training sizes")->delimiter(',');
  curve->add_option("--fractions", fractions, "training fractions of the dataset")->delimiter(',')->excludes(sizes_opt);
  curve->add_option("--repeats", curve_repeats, "splits per size")->capture_default_str();
  curve->add_option("--out", curve_out, "CSV path (default stdout)");
  curve->add_option("--json-out", curve_json, "also write JSON rows here");
  add_seed(curve);

  // pdf-study
  auto* study = app.add_subcommand("pdf-study", "repeated-split accuracy distributions against a random baseline");
  ModelFlags study_flags;
  std::string study_data, study_features = "avg", study_out, baseline = "fair_coin";
  std::vector<std::size_t> n_train{10, 20, 40, 81, 406};
  std::size_t study_repeats = 10000;
  std::optional<std::size_t> baseline_repeats;
  std::size_t threads = default_threads();
  study_flags.attach(study, "--model");
  study->add_option("--data", study_data, "dataset path")->required();
  study->add_option("--features", study_features, "avg | concat")->capture_default_str();
  study->add_option("--n-train", n_train, "training sizes")->delimiter(',')->capture_default_str();
  study->add_option("--repeats", study_repeats, "splits per size")->capture_default_str();
  study->add_option("--baseline-repeats", baseline_repeats, "random-classifier draws (default --repeats)");
  study->add_option("--baseline", baseline, "fair_coin | prior_matched")->capture_default_str();
  study->add_option("--threads", threads, "worker threads (results do not depend on this)");
  study->add_option("--out", study_out, "report JSON path (default stdout)");
  add_seed(study);

  // serve
  auto* serve = app.add_subcommand("serve", "run the review service");
  std::string data_dir, host = "127.0.0.1", static_dir;
  int port = 8080;
  bool train_machine = false;
  serve->add_option("--data-dir", data_dir, "data directory (default $FACEPREF_DATA_DIR)");
  serve->add_option("--host", host, "bind address")->capture_default_str();
  serve->add_option("--port", port, "port (0 picks one)")->capture_default_str();
  serve->add_option("--static-dir", static_dir, "serve the UI bundle from here");
  serve->add_flag("--train-on-machine-labels", train_machine, "let auto-mode labels into training");
  add_seed(serve);

  std::vector<const char*> argv{"facepref"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (synth->parsed()) {
      sspec.seed = seed;
      sspec.separation = separation ? *separation : calibrate_separation(sspec, target_bayes);
      const Dataset d = generate(sspec);
      save_dataset(d, synth_out);
      out << "profiles=" << d.size() << " separation=" << format_double(sspec.separation)
          << " bayes_accuracy=" << format_double(bayes_accuracy(sspec))
          << " bayes_accuracy_with_prior=" << format_double(bayes_accuracy_with_prior(sspec)) << "\n";
      return 0;
    }

    if (ingest->parsed()) {
      const Dataset d = load_dataset(ingest_data);
      std::size_t likes = 0, dislikes = 0, unreviewed = 0, machine = 0, faces = 0, faceless = 0;
      for (const Profile& p : d.profiles()) {
        faces += p.face_count();
        faceless += p.face_count() == 0;
        machine += p.reviewed() && p.source == LabelSource::machine;
        if (p.label == Label::like) ++likes;
        else if (p.label == Label::dislike) ++dislikes;
        else ++unreviewed;
      }
      out << "profiles=" << d.size() << " dim=" << d.dim() << " faces=" << faces << " like=" << likes
          << " dislike=" << dislikes << " unreviewed=" << unreviewed << " machine_labeled=" << machine
          << " faceless=" << faceless << "\n";
      if (!ingest_out.empty()) save_dataset(d, ingest_out);
      return 0;
    }

    if (features->parsed()) {
      const FeatureMatrix m = training_matrix(feat_data, feat_mode, max_images, include_machine, err);
      std::string text = "id,label";
      for (std::size_t k = 0; k < m.width(); ++k) text += ",x" + std::to_string(k);
      text += "\n";
      for (std::size_t i = 0; i < m.size(); ++i) {
        text += m.profile_ids[i];
        text += m.labels[i] == 1 ? ",like" : ",dislike";
        for (double v : m.row(i)) text += "," + format_double(v);
        text += "\n";
      }
      write_output(feat_out, text, out);
      return 0;
    }

    if (train->parsed()) {
      const FeatureMatrix m = training_matrix(train_data, train_features, max_images, include_machine, err);
      const Model model = train_model(m, train_flags.spec(train_flags.family, seed).options);
      save_model_file(model, train_out);
      out << "model=" << family_token(model.family) << " features=" << feature_mode_token(model.feature_mode)
          << " n_train=" << model.train_meta.n_train << " iterations=" << model.train_meta.iterations
          << " objective=" << format_double(model.train_meta.final_objective) << "\n";
      print_metrics(out, "train", evaluate_model(model, m));
      return 0;
    }

    if (eval->parsed()) {
      EvaluationReport report;
      std::vector<double> scores;
      FeatureMatrix test;
      std::optional<Model> model;
      if (!eval_model_file.empty()) {
        model = load_model_file(eval_model_file);
        test = training_matrix(eval_data, std::string(feature_mode_token(model->feature_mode)), model->max_images,
                               include_machine, err);
      } else {
        const FeatureMatrix m = training_matrix(eval_data, eval_features, max_images, include_machine, err);
        const std::size_t n_train = sizes_from_fractions(m.size(), std::vector<double>{0.95}).front();
        const Split split = random_split(m.labels, n_train, seed);
        const FeatureMatrix train_rows = take_rows(m, split.train);
        model = train_model(train_rows, eval_flags.spec(eval_flags.family, seed).options);
        test = take_rows(m, split.test);
        print_metrics(out, "train", evaluate_model(*model, train_rows));
      }
      scores = predict_scores(*model, test);
      report.metrics = evaluate_model(*model, test);
      report.roc = roc_auc(scores, test.labels);
      print_metrics(out, "validation", *report.metrics);
      out << "auc=" << format_double(report.roc->auc) << "\n";
      if (!roc_out.empty()) write_file_atomic(roc_out, roc_csv(*report.roc));
      if (!report_out.empty()) write_file_atomic(report_out, emit_report(report));
      return 0;
    }

    if (curve->parsed()) {
      const FeatureMatrix m = training_matrix(curve_data, curve_features, max_images, false, err);
      if (sizes.empty()) sizes = fractions.empty() ? std::vector<std::size_t>{10, 20, 40, 81, 406}
                                                   : sizes_from_fractions(m.size(), fractions);
      std::vector<ModelSpec> specs;
      for (const std::string& token : split_list(curve_models)) specs.push_back(curve_flags.spec(token, seed));
      const auto rows = learning_curve(m, sizes, specs, seed, curve_repeats);
      write_output(curve_out, learning_curve_csv(rows), out);
      if (!curve_json.empty()) write_file_atomic(curve_json, learning_curve_json(rows).dump(2) + "\n");
      return 0;
    }

    if (study->parsed()) {
      const FeatureMatrix m = training_matrix(study_data, study_features, max_images, false, err);
      const ModelSpec spec = study_flags.spec(study_flags.family, seed);
      const double prior = static_cast<double>(m.like_count()) / static_cast<double>(m.size());
      const BaselineScheme scheme = baseline == "prior_matched" ? BaselineScheme::prior_matched
                                    : baseline == "fair_coin"   ? BaselineScheme::fair_coin
                                                                : throw InvalidArgument("unknown baseline '" + baseline + "'");
      EvaluationReport report;
      for (std::size_t n : n_train) {
        report.studies.push_back(repeated_split_study(m, n, study_repeats, spec.options, seed, threads));
        report.baselines.push_back(simulate_random_baseline(m.size() - n, prior, baseline_repeats.value_or(study_repeats),
                                                            derive_seed(seed, 0x62617365, n), scheme));
        const SplitStudy& s = report.studies.back();
        err << "n_train=" << n << " mean=" << format_double(s.moments.mean) << " std=" << format_double(s.moments.std)
            << " baseline_mean=" << format_double(report.baselines.back().fit.mean) << "\n";
      }
      write_output(study_out, emit_report(report), out);
      return 0;
    }

    if (serve->parsed()) {
      if (data_dir.empty()) {
        const char* env = std::getenv("FACEPREF_DATA_DIR");
        if (env == nullptr || *env == '\0') throw InvalidArgument("pass --data-dir or set FACEPREF_DATA_DIR");
        data_dir = env;
      }
      ServiceConfig config;
      config.data_dir = data_dir;
      config.seed = seed;
      config.train_on_machine_labels = train_machine;
      ReviewService service(config);
      HttpServer server(service, static_dir.empty() ? std::nullopt : std::optional<std::filesystem::path>(static_dir));
      const int bound = server.bind(host, port);
      out << "listening on http://" << host << ":" << bound << std::endl;
      server.start();
      while (stop_flag()->load() == 0) std::this_thread::sleep_for(std::chrono::milliseconds(100));
      server.stop();
      service.close();
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace facepref::cli
