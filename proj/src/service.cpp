#include "lessonrag/service.hpp"

#include <condition_variable>

#include "httplib.h"
#include "lessonrag/error.hpp"
#include "lessonrag/logging.hpp"

namespace lessonrag {

namespace {

HttpResponse json_response(int status, const nlohmann::ordered_json& body) {
  return HttpResponse{status, body.dump(), "application/json"};
}

HttpResponse error_response(int status, std::string_view stage, std::string_view reason, std::string_view field = {}) {
  nlohmann::ordered_json j;
  j["stage"] = stage;
  j["reason"] = reason;
  if (!field.empty()) j["field"] = field;
  return json_response(status, j);
}

}  // namespace

int status_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::validation:
    case ErrorKind::invalid_argument: return 400;
    case ErrorKind::not_found: return 404;
    case ErrorKind::format: return 422;
    case ErrorKind::provider: return 502;
    default: return 500;
  }
}

LessonService::LessonService(Providers providers, GenerationConfig config)
    : providers_(std::move(providers)), config_(std::move(config)) {}

LessonService::~LessonService() {
  if (prober_.joinable()) {
    prober_.request_stop();
    prober_.join();
  }
}

void LessonService::set_stores(StoreRegistry stores) {
  auto p = std::make_shared<const StoreRegistry>(std::move(stores));
  std::lock_guard lock(mu_);
  stores_ = std::move(p);
}

std::shared_ptr<const StoreRegistry> LessonService::snapshot() const {
  std::lock_guard lock(mu_);
  return stores_;
}

bool LessonService::ready() const { return snapshot() != nullptr; }

HttpResponse LessonService::handle_list_subjects() const {
  const auto stores = snapshot();
  auto arr = nlohmann::ordered_json::array();
  if (stores) {
    for (const auto& s : stores->stores()) {
      nlohmann::ordered_json e;
      e["subject"] = s->manifest().subject;
      e["level"] = s->manifest().level;
      e["edition"] = s->manifest().edition;
      arr.push_back(std::move(e));
    }
  }
  return json_response(200, arr);
}

HttpResponse LessonService::handle_generate(std::string_view body) const {
  const auto stores = snapshot();
  if (!stores) return error_response(503, "startup", "stores are still loading");

  nlohmann::json payload;
  try {
    payload = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    return error_response(400, "validate", "body is not valid JSON", "body");
  }
  LessonRequest request;
  try {
    request = request_from_json(payload);
  } catch (const ValidationError& e) {
    return error_response(400, "validate", e.reason(), e.field());
  }

  try {
    const GenerationResult res = run_generation(*stores, request, providers_, config_);
    nlohmann::ordered_json out;
    out["plan"] = plan_to_json(res.plan);
    out["rendered"] = render_plan(res.plan, RenderMode::display_markup);
    nlohmann::ordered_json c;
    c["chunk_count"] = res.confidence.chunk_count;
    c["distinct_pages"] = res.confidence.distinct_pages;
    c["page_equivalents"] = res.confidence.page_equivalents;
    c["low_evidence"] = res.confidence.low_evidence;
    out["confidence"] = std::move(c);
    out["warnings"] = res.warnings;
    out["retries_used"] = res.retries_used;
    return json_response(200, out);
  } catch (const PipelineError& e) {
    logger()->warn("generate failed at {}: {}", e.stage(), e.reason());
    return error_response(status_for(e.kind()), e.stage(), e.reason(), e.field());
  } catch (const std::exception& e) {
    logger()->error("generate: unexpected error: {}", e.what());
    return error_response(500, "internal", e.what());
  }
}

HttpResponse LessonService::handle_health() const {
  const auto stores = snapshot();
  nlohmann::ordered_json j;
  j["status"] = stores ? "ok" : "starting";
  j["stores_loaded"] = stores ? stores->size() : 0;
  j["provider_reachable"] = provider_reachable_.load();
  return json_response(200, j);
}

void LessonService::refresh_provider_status() {
  bool ok = false;
  try {
    ok = providers_.llm && providers_.llm->probe();
  } catch (const std::exception& e) {
    logger()->warn("provider probe failed: {}", e.what());
  }
  provider_reachable_ = ok;
}

void LessonService::start_probe_loop(std::chrono::milliseconds interval) {
  if (prober_.joinable()) return;
  prober_ = std::jthread([this, interval](std::stop_token stop) {
    std::mutex m;
    std::condition_variable_any cv;
    while (!stop.stop_requested()) {
      refresh_provider_status();
      std::unique_lock lock(m);
      cv.wait_for(lock, stop, interval, [] { return false; });
    }
  });
}

HttpServer::HttpServer(std::shared_ptr<LessonService> service, std::filesystem::path ui_dir, std::string cors_origin)
    : service_(std::move(service)), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  auto send = [](httplib::Response& res, const HttpResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  s.set_post_routing_handler([cors_origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", cors_origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  s.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  s.Get("/api/subjects", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_->handle_list_subjects());
  });
  s.Get("/api/health", [this, send](const httplib::Request&, httplib::Response& res) {
    send(res, service_->handle_health());
  });
  s.Post("/api/generate", [this, send](const httplib::Request& req, httplib::Response& res) {
    send(res, service_->handle_generate(req.body));
  });
  if (!ui_dir.empty() && std::filesystem::is_directory(ui_dir)) {
    s.set_mount_point("/", ui_dir.string());
  }
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error(ErrorKind::io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() { server_->listen_after_bind(); }

int HttpServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { listen(); });
  server_->wait_until_ready();
  return bound;
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace lessonrag
