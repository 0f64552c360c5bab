#pragma once

// Plot-ready report formats. Every float is written as its shortest
// round-trip decimal; NaN and infinities are spelled nan / inf in CSV and
// null / "inf" in JSON.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "facepref/dataset.hpp"
#include "facepref/evaluation/metrics.hpp"
#include "facepref/evaluation/roc.hpp"
#include "facepref/evaluation/skew_normal.hpp"
#include "facepref/evaluation/studies.hpp"
#include "facepref/number_format.hpp"

namespace facepref {

struct EvaluationReport {
  std::optional<RocCurve> roc;
  std::optional<Metrics> metrics;
  std::vector<LearningCurveRow> learning_curve;
  std::vector<SplitStudy> studies;
  std::vector<BaselineStudy> baselines;
};

namespace detail {

using nlohmann::json;

inline json number_json(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double number_from_json(const json& j) {
  if (j.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw FormatError("bad number '" + s + "'");
  }
  return j.get<double>();
}

inline json numbers_json(std::span<const double> values) {
  json out = json::array();
  for (double v : values) out.push_back(number_json(v));
  return out;
}

inline std::vector<double> numbers_from_json(const json& j) {
  std::vector<double> out;
  for (const json& v : j) out.push_back(number_from_json(v));
  return out;
}

inline json metrics_json(const Metrics& m) {
  return {{"accuracy", number_json(m.accuracy)},
          {"like_accuracy", number_json(m.like_accuracy)},
          {"dislike_accuracy", number_json(m.dislike_accuracy)},
          {"tp", m.counts.tp},
          {"fp", m.counts.fp},
          {"tn", m.counts.tn},
          {"fn", m.counts.fn}};
}

inline Metrics metrics_from_json(const json& j) {
  Metrics m;
  m.accuracy = number_from_json(j.at("accuracy"));
  m.like_accuracy = number_from_json(j.at("like_accuracy"));
  m.dislike_accuracy = number_from_json(j.at("dislike_accuracy"));
  m.counts = {j.at("tp").get<std::size_t>(), j.at("fp").get<std::size_t>(), j.at("tn").get<std::size_t>(),
              j.at("fn").get<std::size_t>()};
  return m;
}

}  // namespace detail

inline nlohmann::json metrics_json(const Metrics& m) { return detail::metrics_json(m); }
inline Metrics metrics_from_json(const nlohmann::json& j) { return detail::metrics_from_json(j); }

inline nlohmann::json roc_json(const RocCurve& roc) {
  nlohmann::json points = nlohmann::json::array();
  for (const RocPoint& p : roc.points) {
    points.push_back({detail::number_json(p.fpr), detail::number_json(p.tpr), detail::number_json(p.threshold)});
  }
  return {{"auc", detail::number_json(roc.auc)}, {"points", std::move(points)}};
}

inline RocCurve roc_from_json(const nlohmann::json& j) {
  RocCurve roc;
  roc.auc = detail::number_from_json(j.at("auc"));
  for (const auto& p : j.at("points")) {
    roc.points.push_back({detail::number_from_json(p.at(0)), detail::number_from_json(p.at(1)),
                          detail::number_from_json(p.at(2))});
  }
  return roc;
}

inline std::string roc_csv(const RocCurve& roc) {
  std::ostringstream out;
  out << "fpr,tpr,threshold\n";
  for (const RocPoint& p : roc.points) {
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << ',' << format_double(p.threshold) << '\n';
  }
  return out.str();
}

/// The AUC is recomputed from the points with the same trapezoid rule.
inline RocCurve parse_roc_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || detail::chomp(line) != "fpr,tpr,threshold") {
    throw FormatError("ROC CSV must start with 'fpr,tpr,threshold'");
  }
  RocCurve roc;
  while (std::getline(in, line)) {
    const auto text_line = detail::chomp(line);
    if (text_line.empty()) continue;
    const auto fields = detail::split_fields(text_line, ',');
    if (fields.size() != 3) throw FormatError("ROC CSV rows need three fields");
    roc.points.push_back({parse_double(fields[0]), parse_double(fields[1]), parse_double(fields[2])});
  }
  roc.auc = trapezoid_area(roc.points);
  return roc;
}

inline constexpr std::string_view learning_curve_header =
    "n_train,n_val,repeat,seed,model,train_accuracy,train_like_accuracy,train_dislike_accuracy,"
    "val_accuracy,val_like_accuracy,val_dislike_accuracy,val_tp,val_fp,val_tn,val_fn,"
    "train_tp,train_fp,train_tn,train_fn";

inline std::string learning_curve_csv(std::span<const LearningCurveRow> rows) {
  std::ostringstream out;
  out << learning_curve_header << '\n';
  for (const LearningCurveRow& row : rows) {
    for (const ModelEvaluation& e : row.models) {
      out << row.n_train << ',' << row.n_val << ',' << row.repeat << ',' << row.seed << ',' << e.model << ','
          << format_double(e.train.accuracy) << ',' << format_double(e.train.like_accuracy) << ','
          << format_double(e.train.dislike_accuracy) << ',' << format_double(e.validation.accuracy) << ','
          << format_double(e.validation.like_accuracy) << ',' << format_double(e.validation.dislike_accuracy)
          << ',' << e.validation.counts.tp << ',' << e.validation.counts.fp << ',' << e.validation.counts.tn << ','
          << e.validation.counts.fn << ',' << e.train.counts.tp << ',' << e.train.counts.fp << ','
          << e.train.counts.tn << ',' << e.train.counts.fn << '\n';
    }
  }
  return out.str();
}

/// Consecutive lines sharing (n_train, repeat) are grouped into one row.
inline std::vector<LearningCurveRow> parse_learning_curve_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || detail::chomp(line) != learning_curve_header) {
    throw FormatError("learning-curve CSV has an unexpected header");
  }
  std::vector<LearningCurveRow> rows;
  while (std::getline(in, line)) {
    const auto text_line = detail::chomp(line);
    if (text_line.empty()) continue;
    const auto f = detail::split_fields(text_line, ',');
    if (f.size() != 19) throw FormatError("learning-curve CSV rows need 19 fields");
    const auto n_train = parse_integer<std::size_t>(f[0]);
    const auto repeat = parse_integer<std::size_t>(f[2]);
    if (rows.empty() || rows.back().n_train != n_train || rows.back().repeat != repeat) {
      LearningCurveRow row;
      row.n_train = n_train;
      row.n_val = parse_integer<std::size_t>(f[1]);
      row.repeat = repeat;
      row.seed = parse_integer<std::uint64_t>(f[3]);
      rows.push_back(std::move(row));
    }
    ModelEvaluation e;
    e.model = std::string(f[4]);
    e.train.accuracy = parse_double(f[5]);
    e.train.like_accuracy = parse_double(f[6]);
    e.train.dislike_accuracy = parse_double(f[7]);
    e.validation.accuracy = parse_double(f[8]);
    e.validation.like_accuracy = parse_double(f[9]);
    e.validation.dislike_accuracy = parse_double(f[10]);
    e.validation.counts = {parse_integer<std::size_t>(f[11]), parse_integer<std::size_t>(f[12]),
                           parse_integer<std::size_t>(f[13]), parse_integer<std::size_t>(f[14])};
    e.train.counts = {parse_integer<std::size_t>(f[15]), parse_integer<std::size_t>(f[16]),
                      parse_integer<std::size_t>(f[17]), parse_integer<std::size_t>(f[18])};
    rows.back().models.push_back(std::move(e));
  }
  return rows;
}

inline nlohmann::json learning_curve_json(std::span<const LearningCurveRow> rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const LearningCurveRow& row : rows) {
    nlohmann::json models = nlohmann::json::array();
    for (const ModelEvaluation& e : row.models) {
      models.push_back({{"model", e.model},
                        {"train", detail::metrics_json(e.train)},
                        {"validation", detail::metrics_json(e.validation)}});
    }
    out.push_back({{"n_train", row.n_train},
                   {"n_val", row.n_val},
                   {"repeat", row.repeat},
                   {"seed", row.seed},
                   {"models", std::move(models)}});
  }
  return out;
}

inline std::vector<LearningCurveRow> learning_curve_from_json(const nlohmann::json& j) {
  std::vector<LearningCurveRow> rows;
  for (const auto& r : j) {
    LearningCurveRow row;
    row.n_train = r.at("n_train").get<std::size_t>();
    row.n_val = r.at("n_val").get<std::size_t>();
    row.repeat = r.at("repeat").get<std::size_t>();
    row.seed = r.at("seed").get<std::uint64_t>();
    for (const auto& m : r.at("models")) {
      row.models.push_back({m.at("model").get<std::string>(), detail::metrics_from_json(m.at("train")),
                            detail::metrics_from_json(m.at("validation"))});
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json study_json(const SplitStudy& s) {
  nlohmann::json j = {{"n_train", s.n_train},
                      {"n_val", s.n_val},
                      {"master_seed", s.master_seed},
                      {"samples", detail::numbers_json(s.samples)},
                      {"mean", detail::number_json(s.moments.mean)},
                      {"std", detail::number_json(s.moments.std)},
                      {"fit", nullptr}};
  if (s.fit) {
    j["fit"] = {{"xi", detail::number_json(s.fit->xi)},
                {"omega", detail::number_json(s.fit->omega)},
                {"alpha", detail::number_json(s.fit->alpha)},
                {"log_likelihood", detail::number_json(s.fit->log_likelihood)},
                {"converged", s.fit->converged}};
  }
  return j;
}

inline SplitStudy study_from_json(const nlohmann::json& j) {
  SplitStudy s;
  s.n_train = j.at("n_train").get<std::size_t>();
  s.n_val = j.at("n_val").get<std::size_t>();
  s.master_seed = j.at("master_seed").get<std::uint64_t>();
  s.samples = detail::numbers_from_json(j.at("samples"));
  s.moments = fit_normal(s.samples);
  if (!j.at("fit").is_null()) {
    const auto& f = j["fit"];
    SkewNormalFit fit;
    fit.xi = detail::number_from_json(f.at("xi"));
    fit.omega = detail::number_from_json(f.at("omega"));
    fit.alpha = detail::number_from_json(f.at("alpha"));
    fit.log_likelihood = detail::number_from_json(f.at("log_likelihood"));
    fit.converged = f.at("converged").get<bool>();
    s.fit = fit;
  }
  return s;
}

inline nlohmann::json baseline_json(const BaselineStudy& b) {
  return {{"n_val", b.n_val},
          {"like_prior", detail::number_json(b.like_prior)},
          {"scheme", b.scheme == BaselineScheme::fair_coin ? "fair_coin" : "prior_matched"},
          {"samples", detail::numbers_json(b.samples)},
          {"mean", detail::number_json(b.fit.mean)},
          {"std", detail::number_json(b.fit.std)},
          {"degenerate", b.fit.degenerate}};
}

inline BaselineStudy baseline_from_json(const nlohmann::json& j) {
  BaselineStudy b;
  b.n_val = j.at("n_val").get<std::size_t>();
  b.like_prior = detail::number_from_json(j.at("like_prior"));
  b.scheme = j.at("scheme").get<std::string>() == "prior_matched" ? BaselineScheme::prior_matched
                                                                  : BaselineScheme::fair_coin;
  b.samples = detail::numbers_from_json(j.at("samples"));
  b.fit = fit_normal(b.samples);
  return b;
}

inline nlohmann::json report_json(const EvaluationReport& r) {
  nlohmann::json j = nlohmann::json::object();
  j["roc"] = r.roc ? roc_json(*r.roc) : nlohmann::json(nullptr);
  j["metrics"] = r.metrics ? detail::metrics_json(*r.metrics) : nlohmann::json(nullptr);
  j["learning_curve"] = learning_curve_json(r.learning_curve);
  j["studies"] = nlohmann::json::array();
  for (const SplitStudy& s : r.studies) j["studies"].push_back(study_json(s));
  j["baselines"] = nlohmann::json::array();
  for (const BaselineStudy& b : r.baselines) j["baselines"].push_back(baseline_json(b));
  return j;
}

/// Deterministic JSON text for a report.
inline std::string emit_report(const EvaluationReport& r) { return report_json(r).dump(2) + "\n"; }

inline EvaluationReport parse_report(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("report is not valid JSON: ") + e.what());
  }
  try {
    EvaluationReport r;
    if (!j.at("roc").is_null()) r.roc = roc_from_json(j["roc"]);
    if (!j.at("metrics").is_null()) r.metrics = detail::metrics_from_json(j["metrics"]);
    r.learning_curve = learning_curve_from_json(j.at("learning_curve"));
    for (const auto& s : j.at("studies")) r.studies.push_back(study_from_json(s));
    for (const auto& b : j.at("baselines")) r.baselines.push_back(baseline_from_json(b));
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
}

}  // namespace facepref
