#pragma once

#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lessonrag/embedding.hpp"

namespace lessonrag {

/// Connection settings for a remote embedding or text-generation provider.
struct ProviderConfig {
  std::string base_url;
  std::string model_name;
  std::string api_key_env;  // name of the variable holding the bearer token
  int timeout_ms = 30000;
  int max_retries = 3;
  std::size_t batch_size = 32;
  int backoff_base_ms = 500;
  std::size_t max_concurrency = 4;

  /// Throws ValidationError for timeout_ms <= 0, batch_size == 0, etc.
  void validate() const;
};

ProviderConfig provider_config_from_json(const nlohmann::json& j);

/// Caps the number of simultaneously outstanding provider requests.
class ConcurrencyLimiter {
 public:
  explicit ConcurrencyLimiter(std::size_t limit);

  class Permit {
   public:
    explicit Permit(ConcurrencyLimiter& owner);
    ~Permit();
    Permit(const Permit&) = delete;
    Permit& operator=(const Permit&) = delete;

   private:
    ConcurrencyLimiter& owner_;
  };

  std::size_t limit() const noexcept { return limit_; }

 private:
  std::size_t limit_;
  std::size_t in_use_ = 0;
  std::mutex mu_;
  std::condition_variable cv_;
};

struct TransportResponse {
  int status = 0;
  std::string body;
};

/// Minimal HTTP POST abstraction so provider clients can be exercised
/// against scripted fakes. Implementations throw a retryable ProviderError
/// when no HTTP response was obtained at all.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual TransportResponse post_json(const std::string& path, const std::string& body,
                                      const std::map<std::string, std::string>& headers,
                                      std::chrono::milliseconds timeout) = 0;
  /// True when the endpoint answers at all (any status).
  virtual bool reachable(std::chrono::milliseconds timeout) = 0;
};

/// cpp-httplib backed transport. base_url may carry a path prefix,
/// e.g. "https://api.example.org/v1".
class HttplibTransport final : public HttpTransport {
 public:
  explicit HttplibTransport(std::string base_url);

  TransportResponse post_json(const std::string& path, const std::string& body,
                              const std::map<std::string, std::string>& headers,
                              std::chrono::milliseconds timeout) override;
  bool reachable(std::chrono::milliseconds timeout) override;

 private:
  std::string scheme_host_port_;
  std::string prefix_;
};

/// Sends `body` to `path`, retrying transport failures and 5xx responses
/// with exponential backoff (base, x2). 4xx is terminal. Returns the response
/// body of the first 2xx answer.
std::string post_with_retries(HttpTransport& transport, ConcurrencyLimiter& limiter,
                              const ProviderConfig& config, const std::string& path,
                              const std::string& body, std::string_view what);

/// Client for `POST {base_url}/embed` with `{model, texts}` -> `{vectors}`.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(ProviderConfig config, std::shared_ptr<HttpTransport> transport = nullptr,
                 std::shared_ptr<ConcurrencyLimiter> limiter = nullptr);

  std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts) override;
  std::string id() const override;

 private:
  ProviderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::shared_ptr<ConcurrencyLimiter> limiter_;
};

/// A text-generation backend.
class LlmProvider {
 public:
  virtual ~LlmProvider() = default;
  virtual std::string complete(std::string_view prompt, int max_tokens) = 0;
  virtual std::string id() const = 0;
  /// Cheap reachability check used by the health endpoint.
  virtual bool probe() { return true; }
};

/// Client for `POST {base_url}/generate` with `{model, prompt, max_tokens}` -> `{text}`.
class HttpLlmProvider final : public LlmProvider {
 public:
  HttpLlmProvider(ProviderConfig config, std::shared_ptr<HttpTransport> transport = nullptr,
                  std::shared_ptr<ConcurrencyLimiter> limiter = nullptr);

  std::string complete(std::string_view prompt, int max_tokens) override;
  std::string id() const override;
  bool probe() override;

 private:
  ProviderConfig config_;
  std::shared_ptr<HttpTransport> transport_;
  std::shared_ptr<ConcurrencyLimiter> limiter_;
};

}  // namespace lessonrag
