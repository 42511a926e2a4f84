#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <thread>

#include "lessonrag/error.hpp"
#include "lessonrag/generation.hpp"

namespace httplib {
class Server;
}

namespace lessonrag {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Transport-independent request handlers. Stores are swapped in once,
/// after loading; until then the service reports "starting".
class LessonService {
 public:
  LessonService(Providers providers, GenerationConfig config);
  ~LessonService();

  LessonService(const LessonService&) = delete;
  LessonService& operator=(const LessonService&) = delete;

  void set_stores(StoreRegistry stores);
  bool ready() const;

  HttpResponse handle_list_subjects() const;
  HttpResponse handle_generate(std::string_view body) const;
  HttpResponse handle_health() const;

  /// Probes the text-generation provider and records the outcome.
  void refresh_provider_status();
  /// Calls refresh_provider_status() now and then every `interval` on a
  /// background thread until the service is destroyed.
  void start_probe_loop(std::chrono::milliseconds interval);

 private:
  std::shared_ptr<const StoreRegistry> snapshot() const;

  Providers providers_;
  GenerationConfig config_;
  mutable std::mutex mu_;
  std::shared_ptr<const StoreRegistry> stores_;
  std::atomic<bool> provider_reachable_{false};
  std::jthread prober_;
};

/// HTTP status for a pipeline failure of the given kind.
int status_for(ErrorKind kind) noexcept;

/// cpp-httplib front end: GET /api/subjects, POST /api/generate,
/// GET /api/health and static files from ui_dir under "/".
class HttpServer {
 public:
  HttpServer(std::shared_ptr<LessonService> service, std::filesystem::path ui_dir, std::string cors_origin = "*");
  ~HttpServer();

  /// Binds and returns the port (an ephemeral one when port == 0).
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. bind() must have succeeded.
  void listen();
  /// bind() + listen() on a background thread; returns once accepting.
  int start(const std::string& host, int port);
  void stop();

 private:
  std::shared_ptr<LessonService> service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace lessonrag
