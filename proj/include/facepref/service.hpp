#pragma once

// Review session over a data directory:
//
//   dataset.jsonl | dataset.csv   labeled profiles (compacted snapshot)
//   decisions.log                 one JSON label update per line, fsynced
//   model.json                    last trained model
//
// Decisions are journaled before they are acknowledged. The journal is folded
// into the dataset file on open and on close.

#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "facepref/classifiers/model.hpp"
#include "facepref/dataset.hpp"
#include "facepref/detail/atomic_file.hpp"
#include "facepref/errors.hpp"
#include "facepref/evaluation/metrics.hpp"
#include "facepref/evaluation/report.hpp"
#include "facepref/evaluation/studies.hpp"
#include "facepref/features.hpp"

namespace facepref {

enum class AutoMode { off, suggest, auto_like };

inline std::string_view auto_mode_token(AutoMode mode) {
  switch (mode) {
    case AutoMode::off: return "off";
    case AutoMode::suggest: return "suggest";
    case AutoMode::auto_like: return "auto_like";
  }
  return "off";
}

inline AutoMode parse_auto_mode(std::string_view token) {
  if (token == "off") return AutoMode::off;
  if (token == "suggest") return AutoMode::suggest;
  if (token == "auto_like") return AutoMode::auto_like;
  throw InvalidArgument("unknown auto mode '" + std::string(token) + "'");
}

enum class JobState { idle, running, done, failed };

inline std::string_view job_state_token(JobState state) {
  switch (state) {
    case JobState::idle: return "idle";
    case JobState::running: return "running";
    case JobState::done: return "done";
    case JobState::failed: return "failed";
  }
  return "idle";
}

struct TrainRequest {
  ModelFamily family = ModelFamily::logistic;
  FeatureMode features = FeatureMode::avg;
  std::vector<std::size_t> hidden = nn1_layers();
};

struct ServiceConfig {
  std::filesystem::path data_dir;
  /// Let machine-made labels into training sets.
  bool train_on_machine_labels = false;
  std::uint64_t seed = 0;
  ClassWeighting weighting;
};

struct TrainingStatus {
  JobState state = JobState::idle;
  std::optional<TrainRequest> request;
  std::string error;
  /// Bumped on every model swap.
  std::size_t generation = 0;
};

struct LearningCurveQuery {
  std::optional<ModelFamily> family;
  std::optional<FeatureMode> features;
  std::vector<std::size_t> sizes;
  std::size_t repeats = 1;
};

class ReviewService {
 public:
  static constexpr std::string_view journal_name = "decisions.log";
  static constexpr std::string_view model_name = "model.json";

  explicit ReviewService(ServiceConfig config) : config_(std::move(config)) {
    dataset_path_ = locate_dataset(config_.data_dir);
    auto data = std::make_shared<const Dataset>(replay_journal(load_dataset(dataset_path_)));
    compact(*data);
    dataset_ = std::move(data);
    const auto model_path = config_.data_dir / std::string(model_name);
    if (std::filesystem::exists(model_path)) model_ = std::make_shared<const Model>(load_model_file(model_path));
  }

  ReviewService(const ReviewService&) = delete;
  ReviewService& operator=(const ReviewService&) = delete;

  ~ReviewService() {
    try {
      close();
    } catch (...) {
    }
  }

  /// Waits for training and folds the journal into the dataset file.
  void close() {
    wait_for_training();
    std::lock_guard writer(write_mutex_);
    if (closed_) return;
    compact(*dataset());
    closed_ = true;
  }

  static std::filesystem::path locate_dataset(const std::filesystem::path& dir) {
    for (const char* name : {"dataset.jsonl", "dataset.csv"}) {
      if (std::filesystem::exists(dir / name)) return dir / name;
    }
    throw NotFoundError("no dataset.jsonl or dataset.csv in '" + dir.string() + "'");
  }

  const ServiceConfig& config() const noexcept { return config_; }
  const std::filesystem::path& dataset_path() const noexcept { return dataset_path_; }

  std::shared_ptr<const Dataset> dataset() const {
    std::lock_guard lock(state_mutex_);
    return dataset_;
  }

  std::shared_ptr<const Model> model() const {
    std::lock_guard lock(state_mutex_);
    return model_;
  }

  AutoMode auto_mode() const {
    std::lock_guard lock(state_mutex_);
    return auto_mode_;
  }

  TrainingStatus training_status() const {
    std::lock_guard lock(state_mutex_);
    return status_;
  }

  /// First unreviewed profile with at least one face, in dataset order.
  const Profile* next_profile(const Dataset& d) const {
    for (const Profile& p : d.profiles()) {
      if (!p.reviewed() && p.face_count() > 0) return &p;
    }
    return nullptr;
  }

  std::size_t queue_length(const Dataset& d) const {
    std::size_t n = 0;
    for (const Profile& p : d.profiles()) n += (!p.reviewed() && p.face_count() > 0);
    return n;
  }

  /// Records a human decision. Durable once this returns.
  std::shared_ptr<const Dataset> decide(std::string_view id, Label label) {
    if (label == Label::unreviewed) throw InvalidArgument("decision must be like or dislike");
    std::lock_guard writer(write_mutex_);
    const auto current = dataset();
    current->at(id);
    const std::vector<Dataset::LabelUpdate> updates{{std::string(id), label, LabelSource::human}};
    return commit(*current, updates);
  }

  /// Score of the active model on one profile.
  std::pair<double, Label> predict(std::string_view id) const {
    const auto m = model();
    if (!m) throw ConflictError("no trained model");
    const Profile& p = dataset()->at(id);
    if (p.face_count() == 0) throw InvalidArgument("profile '" + std::string(id) + "' has no faces");
    const double score = predict_score(*m, model_features(*m, p));
    return {score, classify(*m, score)};
  }

  void set_auto_mode(AutoMode mode) {
    {
      std::lock_guard lock(state_mutex_);
      if (mode == AutoMode::auto_like && !model_) throw ConflictError("auto_like needs a trained model");
      auto_mode_ = mode;
    }
    if (mode == AutoMode::auto_like) auto_label();
  }

  /// Starts a background training job on the current snapshot.
  void start_training(const TrainRequest& request) {
    std::lock_guard job(job_mutex_);
    {
      std::lock_guard lock(state_mutex_);
      if (status_.state == JobState::running) throw ConflictError("a training job is already running");
      status_.state = JobState::running;
      status_.request = request;
      status_.error.clear();
    }
    if (worker_.joinable()) worker_.join();
    const auto snapshot = dataset();
    worker_ = std::thread([this, request, snapshot] { run_training(request, snapshot); });
  }

  void wait_for_training() {
    std::unique_lock lock(state_mutex_);
    job_done_.wait(lock, [&] { return status_.state != JobState::running; });
    lock.unlock();
    std::lock_guard job(job_mutex_);
    if (worker_.joinable()) worker_.join();
  }

  /// Profiles a model is trained on under this configuration.
  FeatureMatrix training_matrix(const Dataset& d, FeatureMode mode, std::size_t max_images = default_max_images) const {
    return build_matrix(filter_reviewable(d, config_.train_on_machine_labels), mode, max_images);
  }

  ModelOptions options_for(const TrainRequest& request) const {
    switch (request.family) {
      case ModelFamily::logistic: {
        LogisticOptions o;
        o.weighting = config_.weighting;
        return o;
      }
      case ModelFamily::svm_rbf: {
        SvmOptions o;
        o.weighting = config_.weighting;
        return o;
      }
      case ModelFamily::mlp: {
        MlpOptions o;
        o.weighting = config_.weighting;
        o.hidden = request.hidden;
        o.seed = config_.seed;
        return o;
      }
    }
    return LogisticOptions{};
  }

  nlohmann::json summary_json() const {
    const auto d = dataset();
    const auto m = model();
    std::size_t liked = 0, disliked = 0, machine = 0, unreviewed = 0;
    for (const Profile& p : d->profiles()) {
      if (!p.reviewed()) {
        ++unreviewed;
        continue;
      }
      if (p.source == LabelSource::machine) {
        ++machine;
        continue;
      }
      (p.label == Label::like ? liked : disliked) += 1;
    }
    nlohmann::json out = {{"profiles", d->size()},
                          {"reviewed", liked + disliked},
                          {"liked", liked},
                          {"disliked", disliked},
                          {"machine_labeled", machine},
                          {"unreviewed", unreviewed},
                          {"queue", queue_length(*d)},
                          {"auto_mode", auto_mode_token(auto_mode())},
                          {"model", nullptr}};
    if (m) {
      nlohmann::json model = model_json(*m);
      // Accuracy of the active model on the profiles it would be trained on now.
      try {
        const FeatureMatrix train = training_matrix(*d, m->feature_mode, m->max_images);
        if (train.size() > 0) model["metrics"] = metrics_json(evaluate_model(*m, train));
      } catch (const Error&) {
      }
      out["model"] = std::move(model);
    }
    return out;
  }

  nlohmann::json status_json() const {
    const TrainingStatus s = training_status();
    const auto m = model();
    nlohmann::json out = {{"state", job_state_token(s.state)},
                          {"generation", s.generation},
                          {"auto_mode", auto_mode_token(auto_mode())},
                          {"model", m ? model_json(*m) : nlohmann::json(nullptr)}};
    if (s.request) {
      out["request"] = {{"family", family_token(s.request->family)},
                        {"features", feature_mode_token(s.request->features)}};
    }
    if (s.state == JobState::failed) out["error"] = s.error;
    return out;
  }

  std::vector<LearningCurveRow> learning_curve_rows(const LearningCurveQuery& q) const {
    const auto d = dataset();
    const auto m = model();
    TrainRequest request;
    request.family = q.family.value_or(m ? m->family : ModelFamily::logistic);
    request.features = q.features.value_or(m ? m->feature_mode : FeatureMode::avg);
    const FeatureMatrix matrix = training_matrix(*d, request.features);
    if (matrix.like_count() == 0 || matrix.like_count() == matrix.size()) {
      throw ConflictError("learning curve needs reviewed likes and dislikes");
    }
    std::vector<std::size_t> sizes = q.sizes;
    if (sizes.empty()) {
      for (std::size_t n : {10, 20, 40, 81, 406}) {
        if (n + 1 <= matrix.size()) sizes.push_back(n);
      }
    }
    if (sizes.empty()) throw ConflictError("not enough reviewed profiles for a learning curve");
    for (std::size_t n : sizes) {
      if (n < 2 || n + 1 > matrix.size()) {
        throw InvalidArgument("training size " + std::to_string(n) + " does not fit " +
                              std::to_string(matrix.size()) + " reviewed profiles");
      }
    }
    const std::vector<ModelSpec> specs{{std::string(family_token(request.family)), options_for(request)}};
    return learning_curve(matrix, sizes, specs, config_.seed, q.repeats);
  }

  static nlohmann::json profile_json(const Profile& p) {
    nlohmann::json out = {{"id", p.id},
                          {"label", label_token(p.label)},
                          {"source", source_token(p.source)},
                          {"face_count", p.face_count()}};
    if (p.display) out["display"] = detail::display_to_json(*p.display);
    return out;
  }

 private:
  static nlohmann::json model_json(const Model& m) {
    return {{"family", family_token(m.family)},
            {"features", feature_mode_token(m.feature_mode)},
            {"width", m.width},
            {"n_train", m.train_meta.n_train},
            {"iterations", m.train_meta.iterations},
            {"converged", m.train_meta.converged},
            {"training_accuracy", detail::number_json(m.train_meta.training_accuracy)}};
  }

  std::filesystem::path journal_path() const { return config_.data_dir / std::string(journal_name); }

  Dataset replay_journal(Dataset d) const {
    std::ifstream in(journal_path());
    if (!in) return d;
    std::vector<Dataset::LabelUpdate> updates;
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception&) {
        // A torn final line was never acknowledged.
        if (in.peek() == std::char_traits<char>::eof()) break;
        throw FormatError("corrupt decision journal line: " + line);
      }
      updates.push_back({j.at("id").get<std::string>(), parse_label(j.at("label").get<std::string>()),
                         parse_source(j.at("source").get<std::string>())});
    }
    return d.with_labels(updates);
  }

  void compact(const Dataset& d) {
    if (!std::filesystem::exists(journal_path())) return;
    save_dataset(d, dataset_path_);
    std::filesystem::remove(journal_path());
    detail::fsync_directory(config_.data_dir);
  }

  // Caller holds write_mutex_.
  std::shared_ptr<const Dataset> commit(const Dataset& current, std::span<const Dataset::LabelUpdate> updates) {
    if (closed_) throw ConflictError("service is closed");
    auto next = std::make_shared<const Dataset>(current.with_labels(updates));
    std::string lines;
    for (const auto& u : updates) {
      if (!lines.empty()) lines += '\n';
      lines += nlohmann::json{{"id", u.id}, {"label", label_token(u.label)}, {"source", source_token(u.source)}}.dump();
    }
    append_line_durable(journal_path(), lines);
    std::lock_guard lock(state_mutex_);
    dataset_ = next;
    return next;
  }

  // Machine labels go only to profiles nobody has reviewed.
  void auto_label() {
    std::lock_guard writer(write_mutex_);
    const auto m = model();
    if (!m || auto_mode() != AutoMode::auto_like) return;
    const auto current = dataset();
    std::vector<Dataset::LabelUpdate> updates;
    for (const Profile& p : current->profiles()) {
      if (p.reviewed() || p.face_count() == 0) continue;
      const double score = predict_score(*m, model_features(*m, p));
      updates.push_back({p.id, classify(*m, score), LabelSource::machine});
    }
    if (!updates.empty()) commit(*current, updates);
  }

  void run_training(TrainRequest request, std::shared_ptr<const Dataset> snapshot) {
    try {
      const FeatureMatrix matrix = training_matrix(*snapshot, request.features);
      if (matrix.size() == 0) throw SingleClassError("no reviewed profiles to train on");
      auto trained = std::make_shared<const Model>(train_model(matrix, options_for(request)));
      save_model_file(*trained, config_.data_dir / std::string(model_name));
      {
        std::lock_guard lock(state_mutex_);
        model_ = std::move(trained);
        ++status_.generation;
      }
      auto_label();
      {
        std::lock_guard lock(state_mutex_);
        status_.state = JobState::done;
      }
      job_done_.notify_all();
    } catch (const std::exception& e) {
      {
        std::lock_guard lock(state_mutex_);
        status_.state = JobState::failed;
        status_.error = e.what();
      }
      job_done_.notify_all();
    }
  }

  ServiceConfig config_;
  std::filesystem::path dataset_path_;

  mutable std::mutex state_mutex_;
  std::condition_variable job_done_;
  std::shared_ptr<const Dataset> dataset_;
  std::shared_ptr<const Model> model_;
  AutoMode auto_mode_ = AutoMode::off;
  TrainingStatus status_;

  std::mutex write_mutex_;
  bool closed_ = false;

  std::mutex job_mutex_;
  std::thread worker_;
};

}  // namespace facepref
