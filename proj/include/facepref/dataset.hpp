#pragma once

// Profiles, face embeddings and the on-disk dataset formats.
//
// CSV layout:
//
//   dim=D
//   #provenance="free text, JSON-quoted"
//   #meta={"id":"p1","source":"machine","display":{...}}
//   p1,like,0,v1,...,vD
//   p1,like,1,v1,...,vD
//   p2,unreviewed
//
// A row with only `profile_id,label` declares a profile without faces.
// Faces keep row order; image_index only has to be unique per profile.
// `#` lines other than the two directives above are ignored.
//
// JSON-lines layout: a header object {"dim":D,"provenance":...} followed by
// one profile object per line.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "facepref/detail/atomic_file.hpp"
#include "facepref/errors.hpp"
#include "facepref/number_format.hpp"

namespace facepref {

enum class Label { dislike = 0, like = 1, unreviewed = 2 };

/// Who assigned a label. Machine labels come from auto-like mode.
enum class LabelSource { human, machine };

inline std::string_view label_token(Label label) {
  switch (label) {
    case Label::like: return "like";
    case Label::dislike: return "dislike";
    case Label::unreviewed: return "unreviewed";
  }
  return "unreviewed";
}

inline Label parse_label(std::string_view token) {
  if (token == "like") return Label::like;
  if (token == "dislike") return Label::dislike;
  if (token == "unreviewed") return Label::unreviewed;
  throw LabelError("unknown label token '" + std::string(token) + "'");
}

/// like=1, dislike=0.
inline int label_value(Label label) {
  if (label == Label::unreviewed) throw LabelError("profile is unreviewed");
  return label == Label::like ? 1 : 0;
}

inline std::string_view source_token(LabelSource source) {
  return source == LabelSource::machine ? "machine" : "human";
}

inline LabelSource parse_source(std::string_view token) {
  if (token == "human") return LabelSource::human;
  if (token == "machine") return LabelSource::machine;
  throw FormatError("unknown label source '" + std::string(token) + "'");
}

/// One face, as emitted by the embedding provider. Never renormalized.
class Embedding {
 public:
  explicit Embedding(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw DimensionError("embedding must have at least one value");
    for (double v : values_) {
      if (!std::isfinite(v)) throw FormatError("embedding value is not finite");
    }
  }

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t k) const { return values_[k]; }

  bool operator==(const Embedding&) const = default;

 private:
  std::vector<double> values_;
};

struct DisplayInfo {
  std::string name;
  int age = 0;
  std::vector<std::string> image_refs;

  bool operator==(const DisplayInfo&) const = default;
};

struct Profile {
  std::string id;
  std::vector<Embedding> faces;
  Label label = Label::unreviewed;
  LabelSource source = LabelSource::human;
  std::optional<DisplayInfo> display;

  std::size_t face_count() const noexcept { return faces.size(); }
  bool reviewed() const noexcept { return label != Label::unreviewed; }

  bool operator==(const Profile&) const = default;
};

/// Ids end up as CSV fields and URL path segments.
inline void validate_profile_id(std::string_view id) {
  if (id.empty()) throw FormatError("empty profile id");
  if (id.front() == '#') throw FormatError("profile id may not start with '#'");
  for (char c : id) {
    if (c == ',' || c == '\n' || c == '\r' || c == '/') {
      throw FormatError("profile id contains a reserved character: '" + std::string(id) + "'");
    }
  }
}

/// Immutable labeled profile collection. Updates build a new value.
class Dataset {
 public:
  Dataset() = default;

  Dataset(std::size_t dim, std::vector<Profile> profiles, std::string provenance = {})
      : dim_(dim), profiles_(std::move(profiles)), provenance_(std::move(provenance)) {
    if (dim_ == 0) throw DimensionError("dataset dimension must be >= 1");
    index_.reserve(profiles_.size());
    for (std::size_t i = 0; i < profiles_.size(); ++i) {
      const Profile& p = profiles_[i];
      validate_profile_id(p.id);
      if (!index_.emplace(p.id, i).second) {
        throw DuplicateError("duplicate profile id '" + p.id + "'");
      }
      for (const Embedding& e : p.faces) {
        if (e.dim() != dim_) {
          throw DimensionError("profile '" + p.id + "' has an embedding of length " +
                               std::to_string(e.dim()) + ", dataset dim is " +
                               std::to_string(dim_));
        }
      }
    }
  }

  std::size_t dim() const noexcept { return dim_; }
  std::span<const Profile> profiles() const noexcept { return profiles_; }
  std::size_t size() const noexcept { return profiles_.size(); }
  bool empty() const noexcept { return profiles_.empty(); }
  const std::string& provenance() const noexcept { return provenance_; }

  const Profile* find(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &profiles_[it->second];
  }

  const Profile& at(std::string_view id) const {
    const Profile* p = find(id);
    if (p == nullptr) throw NotFoundError("unknown profile '" + std::string(id) + "'");
    return *p;
  }

  std::optional<std::size_t> position(std::string_view id) const {
    const auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  Dataset with_label(std::string_view id, Label label, LabelSource source) const {
    const auto pos = position(id);
    if (!pos) throw NotFoundError("unknown profile '" + std::string(id) + "'");
    Dataset copy = *this;
    copy.profiles_[*pos].label = label;
    copy.profiles_[*pos].source = source;
    return copy;
  }

  struct LabelUpdate {
    std::string id;
    Label label = Label::unreviewed;
    LabelSource source = LabelSource::human;
  };

  /// Applies all updates in order to one copy.
  Dataset with_labels(std::span<const LabelUpdate> updates) const {
    Dataset copy = *this;
    for (const LabelUpdate& u : updates) {
      const auto pos = position(u.id);
      if (!pos) throw NotFoundError("unknown profile '" + u.id + "'");
      copy.profiles_[*pos].label = u.label;
      copy.profiles_[*pos].source = u.source;
    }
    return copy;
  }

  bool operator==(const Dataset& other) const {
    return dim_ == other.dim_ && provenance_ == other.provenance_ &&
           profiles_ == other.profiles_;
  }

 private:
  std::size_t dim_ = 128;
  std::vector<Profile> profiles_;
  std::string provenance_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Profiles that can be trained on: at least one face and a label.
/// Machine-labeled profiles are kept unless `include_machine_labels` is false.
inline Dataset filter_reviewable(const Dataset& d, bool include_machine_labels = true) {
  std::vector<Profile> kept;
  kept.reserve(d.size());
  for (const Profile& p : d.profiles()) {
    if (p.face_count() == 0 || !p.reviewed()) continue;
    if (!include_machine_labels && p.source == LabelSource::machine) continue;
    kept.push_back(p);
  }
  return Dataset(d.dim(), std::move(kept), d.provenance());
}

enum class DatasetFormat { csv, json_lines };

inline DatasetFormat format_from_path(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".jsonl" || ext == ".ndjson" || ext == ".json") return DatasetFormat::json_lines;
  return DatasetFormat::csv;
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line, char sep) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

inline std::string_view chomp(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.remove_suffix(1);
  return line;
}

inline nlohmann::json display_to_json(const DisplayInfo& info) {
  return {{"name", info.name}, {"age", info.age}, {"image_refs", info.image_refs}};
}

inline DisplayInfo display_from_json(const nlohmann::json& j) {
  DisplayInfo info;
  info.name = j.value("name", std::string{});
  info.age = j.value("age", 0);
  info.image_refs = j.value("image_refs", std::vector<std::string>{});
  return info;
}

// Accumulates rows of one profile while a file is being read.
struct ProfileBuilder {
  Profile profile;
  std::set<long long> image_indices;
};

inline Dataset parse_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::size_t dim = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = chomp(line);
    if (text.empty()) continue;
    if (!text.starts_with("dim=")) throw FormatError("CSV dataset must start with 'dim=D'");
    dim = parse_integer<std::size_t>(text.substr(4));
    if (dim == 0) throw DimensionError("dataset dimension must be >= 1");
    break;
  }
  if (dim == 0) throw FormatError("CSV dataset is missing its 'dim=D' header");

  std::string provenance;
  std::vector<ProfileBuilder> builders;
  std::unordered_map<std::string, std::size_t> slot;
  std::vector<nlohmann::json> metas;

  auto builder_for = [&](std::string_view id, Label label) -> ProfileBuilder& {
    const auto [it, inserted] = slot.emplace(std::string(id), builders.size());
    if (inserted) {
      validate_profile_id(id);
      builders.push_back({Profile{std::string(id), {}, label, LabelSource::human, std::nullopt}, {}});
    } else if (builders[it->second].profile.label != label) {
      throw FormatError("line " + std::to_string(line_no) + ": profile '" + std::string(id) +
                        "' has conflicting labels");
    }
    return builders[it->second];
  };

  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = chomp(line);
    if (text.empty()) continue;
    if (text.front() == '#') {
      try {
        if (text.starts_with("#provenance=")) {
          provenance = nlohmann::json::parse(text.substr(12)).get<std::string>();
        } else if (text.starts_with("#meta=")) {
          metas.push_back(nlohmann::json::parse(text.substr(6)));
        }
      } catch (const nlohmann::json::exception& e) {
        throw FormatError("line " + std::to_string(line_no) + ": bad directive: " + e.what());
      }
      continue;
    }
    const auto fields = split_fields(text, ',');
    if (fields.size() < 2) {
      throw FormatError("line " + std::to_string(line_no) + ": expected profile_id,label,...");
    }
    const Label label = parse_label(fields[1]);
    ProfileBuilder& b = builder_for(fields[0], label);
    if (fields.size() == 2) continue;
    if (fields.size() != dim + 3) {
      throw DimensionError("line " + std::to_string(line_no) + ": expected " +
                           std::to_string(dim) + " embedding values, found " +
                           std::to_string(fields.size() - 3));
    }
    const auto image_index = parse_integer<long long>(fields[2]);
    if (!b.image_indices.insert(image_index).second) {
      throw DuplicateError("line " + std::to_string(line_no) + ": duplicate (profile_id, image_index) = (" +
                           std::string(fields[0]) + ", " + std::to_string(image_index) + ")");
    }
    std::vector<double> values;
    values.reserve(dim);
    for (std::size_t k = 0; k < dim; ++k) values.push_back(parse_double(fields[k + 3]));
    b.profile.faces.emplace_back(std::move(values));
  }

  for (const nlohmann::json& meta : metas) {
    try {
      const std::string id = meta.at("id").get<std::string>();
      const auto it = slot.find(id);
      if (it == slot.end()) throw FormatError("#meta for unknown profile '" + id + "'");
      Profile& p = builders[it->second].profile;
      if (meta.contains("source")) p.source = parse_source(meta["source"].get<std::string>());
      if (meta.contains("display") && !meta["display"].is_null()) {
        p.display = display_from_json(meta["display"]);
      }
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("bad #meta directive: ") + e.what());
    }
  }

  std::vector<Profile> profiles;
  profiles.reserve(builders.size());
  for (ProfileBuilder& b : builders) profiles.push_back(std::move(b.profile));
  return Dataset(dim, std::move(profiles), std::move(provenance));
}

inline Dataset parse_json_lines(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  std::optional<std::size_t> dim;
  std::string provenance;
  std::vector<Profile> profiles;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view text = chomp(line);
    if (text.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!dim) {
        if (!j.contains("dim")) throw FormatError("JSON-lines dataset must start with a {\"dim\":D} header");
        dim = j.at("dim").get<std::size_t>();
        provenance = j.value("provenance", std::string{});
        continue;
      }
      Profile p;
      p.id = j.at("id").get<std::string>();
      p.label = parse_label(j.at("label").get<std::string>());
      if (j.contains("source")) p.source = parse_source(j["source"].get<std::string>());
      if (j.contains("display") && !j["display"].is_null()) p.display = display_from_json(j["display"]);
      if (!seen.insert(p.id).second) {
        throw DuplicateError("line " + std::to_string(line_no) + ": duplicate profile id '" + p.id + "'");
      }
      for (const auto& face : j.value("faces", nlohmann::json::array())) {
        auto values = face.get<std::vector<double>>();
        if (values.size() != *dim) {
          throw DimensionError("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(*dim) + " embedding values, found " +
                               std::to_string(values.size()));
        }
        p.faces.emplace_back(std::move(values));
      }
      profiles.push_back(std::move(p));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!dim) throw FormatError("JSON-lines dataset is missing its header line");
  return Dataset(*dim, std::move(profiles), std::move(provenance));
}

inline void write_csv(const Dataset& d, std::ostream& out) {
  out << "dim=" << d.dim() << '\n';
  if (!d.provenance().empty()) out << "#provenance=" << nlohmann::json(d.provenance()).dump() << '\n';
  for (const Profile& p : d.profiles()) {
    if (p.display || p.source != LabelSource::human) {
      nlohmann::json meta = {{"id", p.id}, {"source", source_token(p.source)}};
      if (p.display) meta["display"] = display_to_json(*p.display);
      out << "#meta=" << meta.dump() << '\n';
    }
    if (p.faces.empty()) {
      out << p.id << ',' << label_token(p.label) << '\n';
      continue;
    }
    for (std::size_t i = 0; i < p.faces.size(); ++i) {
      out << p.id << ',' << label_token(p.label) << ',' << i;
      for (double v : p.faces[i].values()) out << ',' << format_double(v);
      out << '\n';
    }
  }
}

inline void write_json_lines(const Dataset& d, std::ostream& out) {
  out << nlohmann::json{{"dim", d.dim()}, {"provenance", d.provenance()}}.dump() << '\n';
  for (const Profile& p : d.profiles()) {
    nlohmann::json j = {{"id", p.id}, {"label", label_token(p.label)}, {"source", source_token(p.source)}};
    nlohmann::json faces = nlohmann::json::array();
    for (const Embedding& e : p.faces) {
      faces.push_back(std::vector<double>(e.values().begin(), e.values().end()));
    }
    j["faces"] = std::move(faces);
    if (p.display) j["display"] = display_to_json(*p.display);
    out << j.dump() << '\n';
  }
}

}  // namespace detail

inline Dataset parse_dataset(std::istream& in, DatasetFormat format) {
  return format == DatasetFormat::csv ? detail::parse_csv(in) : detail::parse_json_lines(in);
}

inline Dataset parse_dataset(std::string_view text, DatasetFormat format) {
  std::istringstream in{std::string(text)};
  return parse_dataset(in, format);
}

inline void serialize_dataset(const Dataset& d, DatasetFormat format, std::ostream& out) {
  if (format == DatasetFormat::csv) {
    detail::write_csv(d, out);
  } else {
    detail::write_json_lines(d, out);
  }
}

inline std::string serialize_dataset(const Dataset& d, DatasetFormat format) {
  std::ostringstream out;
  serialize_dataset(d, format, out);
  return out.str();
}

inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open dataset '" + path.string() + "'");
  return parse_dataset(in, format_from_path(path));
}

inline void save_dataset(const Dataset& d, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_dataset(d, format_from_path(path)));
}

}  // namespace facepref
