#include "curator/service/http.hpp"

#include <charconv>

#include "httplib.h"

namespace curator::service {

int http_status(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::calibration:
      return 422;
    case ErrorKind::not_found:
      return 404;
    case ErrorKind::not_ready:
    case ErrorKind::stale:
      return 409;
    default:
      return 500;
  }
}

nlohmann::json error_body(ErrorKind kind, const std::string& message) {
  return {{"error", {{"kind", to_string(kind)}, {"message", message}}}};
}

namespace {

void send_json(httplib::Response& res, const nlohmann::json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename T>
std::optional<T> query_number(const httplib::Request& req, const std::string& key) {
  if (!req.has_param(key)) return std::nullopt;
  const std::string text = req.get_param_value(key);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError("query parameter '" + key + "' must be a non-negative integer, got '" + text + "'");
  }
  return value;
}

nlohmann::json parse_body(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception&) {
    throw ValidationError("request body is not valid JSON");
  }
}

// Converts module errors into status codes so every handler stays linear.
template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_json(res, error_body(e.kind(), e.what()), http_status(e.kind()));
    } catch (const std::exception& e) {
      send_json(res, {{"error", {{"kind", "internal"}, {"message", e.what()}}}}, 500);
    }
  };
}

}  // namespace

struct HttpServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;
  bool bound = false;

  explicit Impl(Service& s) : service(s) { routes(); }

  void routes() {
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"}});

    server.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, {{"status", "ok"}});
    });

    server.Post("/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto body = parse_body(req);
      if (!body.is_object()) throw ValidationError("request body must be a JSON object");
      JobRequest request;
      try {
        request.keyword = body.at("keyword").get<std::string>();
        const auto count = body.at("count").get<long long>();
        if (count < 0) throw ValidationError("count must be at least 1");
        request.count = static_cast<std::size_t>(count);
        if (body.contains("level") && !body["level"].is_null()) request.level = body["level"].get<int>();
        if (body.contains("provider") && !body["provider"].is_null()) {
          request.provider = body["provider"].get<std::string>();
        }
      } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("invalid job request: ") + e.what());
      }
      send_json(res, {{"job_id", service.submit(request)}}, 202);
    }));

    server.Get(R"(/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, to_json(service.job(req.matches[1])));
    }));

    server.Get(R"(/jobs/([^/]+)/results)", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto level = query_number<int>(req, "level");
      const auto limit = query_number<std::size_t>(req, "limit").value_or(50);
      const auto offset = query_number<std::size_t>(req, "offset").value_or(0);
      const auto space = req.has_param("space") ? parse_result_space(req.get_param_value("space"))
                                                : ResultSpace::keyword;
      send_json(res, to_json(service.results(req.matches[1], level, space, limit, offset)));
    }));

    server.Get("/classes", guarded([this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json classes = nlohmann::json::array();
      for (const auto& s : service.classes()) classes.push_back(to_json(s));
      send_json(res, {{"classes", std::move(classes)}});
    }));

    server.Put(R"(/anchors/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      std::string payload;
      if (req.is_multipart_form_data()) {
        if (!req.has_file("image")) throw ValidationError("multipart upload needs an \"image\" field");
        payload = req.get_file_value("image").content;
      } else {
        payload = req.body;
      }
      if (payload.empty()) throw ValidationError("anchor upload is empty");
      const auto update = service.set_anchor(req.matches[1], Bytes(payload.begin(), payload.end()));
      send_json(res, {{"class", update.class_name},
                      {"changed", update.changed},
                      {"invalidated_scores", update.invalidated_scores},
                      {"invalidated_profile", update.invalidated_profile}});
    }));

    server.Post(R"(/calibrate/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      send_json(res, calibrator::to_json(service.calibrate(req.matches[1])));
    }));

    server.Get("/reports/compare", guarded([this](const httplib::Request&, httplib::Response& res) {
      send_json(res, service.compare_report());
    }));

    server.Post("/reports/compare", guarded([this](const httplib::Request& req, httplib::Response& res) {
      service.evaluate(query_number<int>(req, "level"));
      send_json(res, service.compare_report());
    }));

    server.Get(R"(/density/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const auto bins = query_number<std::size_t>(req, "bins").value_or(20);
      send_json(res, metrics::to_json(service.density(req.matches[1], bins, query_number<int>(req, "level"))));
    }));

    server.Get(R"(/images/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
      const Bytes png = service.crop_png(req.matches[1]);
      res.set_content(std::string(png.begin(), png.end()), "image/png");
    }));

    if (const auto& ui = service.config().server.ui_dir) {
      if (!server.set_mount_point("/ui", ui->string())) {
        throw ConfigurationError("ui directory does not exist: " + ui->string());
      }
    }
  }
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw ConfigurationError("cannot listen on " + host + ":" + std::to_string(port));
  }
  impl_->bound = true;
  return bound;
}

void HttpServer::serve() {
  if (!impl_->bound) throw ContractError("serve() before bind()");
  impl_->server.listen_after_bind();
}

void HttpServer::start() {
  if (!impl_->bound) throw ContractError("start() before bind()");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace curator::service
