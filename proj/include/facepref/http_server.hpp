#pragma once

// JSON API over a ReviewService.

#include <atomic>
#include <charconv>
#include <filesystem>
#include <optional>
#include <string>
#include <thread>

#include <Eigen/Dense>
#include <httplib.h>
#include <json.hpp>

#include "facepref/errors.hpp"
#include "facepref/number_format.hpp"
#include "facepref/service.hpp"

namespace facepref {

namespace detail {

inline void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, std::string_view message) {
  send_json(res, {{"error", message}}, status);
}

inline nlohmann::json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return nlohmann::json::object();
  try {
    nlohmann::json j = nlohmann::json::parse(req.body);
    if (!j.is_object()) throw InvalidArgument("request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed JSON body: ") + e.what());
  }
}

inline std::string string_field(const nlohmann::json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_string()) throw InvalidArgument(std::string("expected string field '") + key + "'");
  return it->get<std::string>();
}

inline std::vector<std::size_t> parse_size_list(std::string_view text) {
  std::vector<std::size_t> out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const std::string_view field = text.substr(0, comma);
    try {
      out.push_back(parse_integer<std::size_t>(field));
    } catch (const FormatError&) {
      throw InvalidArgument("bad size '" + std::string(field) + "'");
    }
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  return out;
}

}  // namespace detail

class HttpServer {
 public:
  explicit HttpServer(ReviewService& service, std::optional<std::filesystem::path> static_dir = std::nullopt)
      : service_(service) {
    routes();
    if (static_dir) {
      if (!server_.set_mount_point("/", static_dir->string())) {
        throw NotFoundError("static directory '" + static_dir->string() + "' does not exist");
      }
    }
  }

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  ~HttpServer() { stop(); }

  /// Binds and returns the port; port 0 picks a free one.
  int bind(const std::string& host, int port) {
    const int bound = port == 0 ? server_.bind_to_any_port(host) : (server_.bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
  }

  /// Serves until stop() is called.
  void listen() { server_.listen_after_bind(); }

  void start() {
    thread_ = std::thread([this] { listen(); });
    server_.wait_until_ready();
  }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  httplib::Server& raw() noexcept { return server_; }

 private:
  void routes() {
    using detail::send_json;
    server_.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
      try {
        std::rethrow_exception(ep);
      } catch (const NotFoundError& e) {
        detail::send_error(res, 404, e.what());
      } catch (const ConflictError& e) {
        detail::send_error(res, 409, e.what());
      } catch (const SingleClassError& e) {
        detail::send_error(res, 409, e.what());
      } catch (const InvalidArgument& e) {
        detail::send_error(res, 400, e.what());
      } catch (const FormatError& e) {
        detail::send_error(res, 400, e.what());
      } catch (const LabelError& e) {
        detail::send_error(res, 400, e.what());
      } catch (const std::exception& e) {
        detail::send_error(res, 500, e.what());
      }
    });

    server_.Get("/api/profiles/next", [this](const httplib::Request&, httplib::Response& res) {
      const auto d = service_.dataset();
      const Profile* p = service_.next_profile(*d);
      if (p == nullptr) {
        res.status = 204;
        return;
      }
      nlohmann::json body = ReviewService::profile_json(*p);
      body["queue"] = service_.queue_length(*d);
      if (service_.auto_mode() != AutoMode::off && service_.model()) {
        const auto [score, label] = service_.predict(p->id);
        body["prediction"] = {{"score", score}, {"decision", label_token(label)}};
      }
      send_json(res, body);
    });

    server_.Get(R"(/api/profiles/([^/]+)/prediction)", [this](const httplib::Request& req, httplib::Response& res) {
      const auto [score, label] = service_.predict(req.matches[1].str());
      send_json(res, {{"id", req.matches[1].str()}, {"score", score}, {"decision", label_token(label)}});
    });

    server_.Get(R"(/api/profiles/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, ReviewService::profile_json(service_.dataset()->at(req.matches[1].str())));
    });

    server_.Post(R"(/api/profiles/([^/]+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
      const std::string id = req.matches[1].str();
      const nlohmann::json body = detail::parse_body(req);
      const std::string decision = detail::string_field(body, "decision");
      if (decision != "like" && decision != "dislike") {
        throw InvalidArgument("decision must be \"like\" or \"dislike\"");
      }
      const auto d = service_.decide(id, parse_label(decision));
      send_json(res, ReviewService::profile_json(d->at(id)));
    });

    server_.Post("/api/model/train", [this](const httplib::Request& req, httplib::Response& res) {
      const nlohmann::json body = detail::parse_body(req);
      TrainRequest request;
      if (body.contains("family")) request.family = parse_family(detail::string_field(body, "family"));
      if (body.contains("features")) request.features = parse_feature_mode(detail::string_field(body, "features"));
      if (body.contains("architecture")) request.hidden = parse_architecture(detail::string_field(body, "architecture"));
      service_.start_training(request);
      send_json(res, service_.status_json(), 202);
    });

    server_.Get("/api/model/status", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, service_.status_json());
    });

    server_.Get("/api/metrics/summary", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, service_.summary_json());
    });

    server_.Get("/api/metrics/learning-curve", [this](const httplib::Request& req, httplib::Response& res) {
      LearningCurveQuery q;
      if (req.has_param("family")) q.family = parse_family(req.get_param_value("family"));
      if (req.has_param("features")) q.features = parse_feature_mode(req.get_param_value("features"));
      if (req.has_param("sizes")) q.sizes = detail::parse_size_list(req.get_param_value("sizes"));
      if (req.has_param("repeats")) {
        try {
          q.repeats = parse_integer<std::size_t>(req.get_param_value("repeats"));
        } catch (const FormatError&) {
          throw InvalidArgument("bad repeats value");
        }
        if (q.repeats == 0) throw InvalidArgument("repeats must be >= 1");
      }
      const auto rows = service_.learning_curve_rows(q);
      send_json(res, {{"rows", learning_curve_json(rows)}});
    });

    server_.Post("/api/session/auto-mode", [this](const httplib::Request& req, httplib::Response& res) {
      const nlohmann::json body = detail::parse_body(req);
      service_.set_auto_mode(parse_auto_mode(detail::string_field(body, "mode")));
      send_json(res, {{"auto_mode", auto_mode_token(service_.auto_mode())}});
    });
  }

  ReviewService& service_;
  httplib::Server server_;
  std::thread thread_;
};

}  // namespace facepref
