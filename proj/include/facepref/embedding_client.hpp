#pragma once

// Client side of the embedding-provider HTTP contract.
//
//   POST /embed   body: raw image bytes (application/octet-stream)
//   200           {"status": "ok"|"no_face"|"multi_face", "dim": D, "values": [...]}
//
// Face detection and cropping happen on the provider. Its documented
// parameters are listed in `ProviderContract`; this side does not enforce them.

#include <chrono>
#include <cstddef>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <httplib.h>
#include <json.hpp>

#include "facepref/dataset.hpp"
#include "facepref/errors.hpp"

namespace facepref {

struct ProviderContract {
  static constexpr int min_face_px = 60;
  static constexpr double detection_threshold = 0.8;
  static constexpr int crop_px = 182;
  static constexpr int crop_margin_px = 44;
};

struct ProviderConfig {
  std::string host = "127.0.0.1";
  int port = 8000;
  std::string path = "/embed";
  int retries = 3;
  std::chrono::milliseconds backoff{200};
  std::chrono::seconds timeout{30};
};

/// The image had no detectable face and is skipped.
struct NoFace {};
/// The image had more than one face and is skipped.
struct MultiFace {};

using FetchOutcome = std::variant<Embedding, NoFace, MultiFace>;

/// Decodes a provider response body. Throws ProviderError on malformed
/// payloads and DimensionError when the vector does not fit `expected_dim`.
inline FetchOutcome decode_provider_response(std::string_view body, std::size_t expected_dim) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("malformed provider response: ") + e.what());
  }
  if (!j.is_object() || !j.contains("status") || !j["status"].is_string()) {
    throw ProviderError("malformed provider response: missing status");
  }
  const std::string status = j["status"].get<std::string>();
  if (status == "no_face") return NoFace{};
  if (status == "multi_face") return MultiFace{};
  if (status != "ok") throw ProviderError("malformed provider response: unknown status '" + status + "'");

  std::vector<double> values;
  try {
    values = j.at("values").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("malformed provider response: ") + e.what());
  }
  if (j.contains("dim")) {
    if (!j["dim"].is_number_integer() || j["dim"].get<std::size_t>() != values.size()) {
      throw ProviderError("malformed provider response: dim does not match values");
    }
  }
  if (values.size() != expected_dim) {
    throw DimensionError("provider returned a " + std::to_string(values.size()) +
                         "-value embedding, dataset dim is " + std::to_string(expected_dim));
  }
  try {
    return Embedding(std::move(values));
  } catch (const Error& e) {
    throw ProviderError(std::string("malformed provider response: ") + e.what());
  }
}

/// Safe to call from several threads; each call opens its own connection.
class EmbeddingClient {
 public:
  explicit EmbeddingClient(ProviderConfig config) : config_(std::move(config)) {}

  const ProviderConfig& config() const noexcept { return config_; }

  FetchOutcome fetch(std::string_view image, std::size_t expected_dim) const {
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt <= config_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(config_.backoff);
      httplib::Client client(config_.host, config_.port);
      client.set_connection_timeout(config_.timeout);
      client.set_read_timeout(config_.timeout);
      auto response = client.Post(config_.path, image.data(), image.size(), "application/octet-stream");
      if (!response) {
        last_error = httplib::to_string(response.error());
        continue;
      }
      if (response->status >= 500) {
        last_error = "HTTP " + std::to_string(response->status);
        continue;
      }
      if (response->status != 200) {
        throw ProviderError("provider rejected the image: HTTP " + std::to_string(response->status));
      }
      return decode_provider_response(response->body, expected_dim);
    }
    throw ProviderError("provider unreachable after " + std::to_string(config_.retries + 1) +
                        " attempts: " + last_error);
  }

 private:
  ProviderConfig config_;
};

inline FetchOutcome fetch_embedding(const EmbeddingClient& client, std::string_view image,
                                    std::size_t expected_dim = 128) {
  return client.fetch(image, expected_dim);
}

}  // namespace facepref
