#include "lessonrag/providers.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "lessonrag/error.hpp"
#include "lessonrag/logging.hpp"

namespace lessonrag {

namespace {

std::map<std::string, std::string> auth_headers(const ProviderConfig& config) {
  std::map<std::string, std::string> h;
  if (!config.api_key_env.empty()) {
    if (const char* key = std::getenv(config.api_key_env.c_str()); key != nullptr && *key != '\0') {
      h["Authorization"] = std::string("Bearer ") + key;
    }
  }
  return h;
}

std::string snippet(const std::string& body) {
  constexpr std::size_t kMax = 200;
  return body.size() <= kMax ? body : body.substr(0, kMax) + "...";
}

}  // namespace

void ProviderConfig::validate() const {
  if (timeout_ms <= 0) throw ValidationError("timeout_ms", "must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size", "must be >= 1");
  if (max_retries < 0) throw ValidationError("max_retries", "must be >= 0");
  if (backoff_base_ms < 0) throw ValidationError("backoff_base_ms", "must be >= 0");
  if (max_concurrency < 1) throw ValidationError("max_concurrency", "must be >= 1");
}

ProviderConfig provider_config_from_json(const nlohmann::json& j) {
  ProviderConfig c;
  c.base_url = j.value("base_url", c.base_url);
  c.model_name = j.value("model_name", c.model_name);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.timeout_ms = j.value("timeout_ms", c.timeout_ms);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.backoff_base_ms = j.value("backoff_base_ms", c.backoff_base_ms);
  c.max_concurrency = j.value("max_concurrency", c.max_concurrency);
  c.validate();
  return c;
}

ConcurrencyLimiter::ConcurrencyLimiter(std::size_t limit) : limit_(limit) {
  if (limit == 0) throw Error(ErrorKind::invalid_argument, "concurrency limit must be >= 1");
}

ConcurrencyLimiter::Permit::Permit(ConcurrencyLimiter& owner) : owner_(owner) {
  std::unique_lock lock(owner_.mu_);
  owner_.cv_.wait(lock, [&] { return owner_.in_use_ < owner_.limit_; });
  ++owner_.in_use_;
}

ConcurrencyLimiter::Permit::~Permit() {
  {
    std::lock_guard lock(owner_.mu_);
    --owner_.in_use_;
  }
  owner_.cv_.notify_one();
}

HttplibTransport::HttplibTransport(std::string base_url) {
  const auto scheme_end = base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw ValidationError("base_url", "must start with http:// or https://");
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) {
    scheme_host_port_ = base_url;
  } else {
    scheme_host_port_ = base_url.substr(0, path_start);
    prefix_ = base_url.substr(path_start);
    while (prefix_.ends_with('/')) prefix_.pop_back();
  }
}

TransportResponse HttplibTransport::post_json(const std::string& path, const std::string& body,
                                              const std::map<std::string, std::string>& headers,
                                              std::chrono::milliseconds timeout) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers hs;
  for (const auto& [k, v] : headers) hs.emplace(k, v);
  auto res = client.Post(prefix_ + path, hs, body, "application/json");
  if (!res) {
    throw ProviderError("transport error: " + httplib::to_string(res.error()), true);
  }
  return {res->status, res->body};
}

bool HttplibTransport::reachable(std::chrono::milliseconds timeout) {
  httplib::Client client(scheme_host_port_);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  return static_cast<bool>(client.Get(prefix_.empty() ? "/" : prefix_));
}

std::string post_with_retries(HttpTransport& transport, ConcurrencyLimiter& limiter,
                              const ProviderConfig& config, const std::string& path,
                              const std::string& body, std::string_view what) {
  const auto headers = auth_headers(config);
  for (int attempt = 0;; ++attempt) {
    try {
      TransportResponse res;
      {
        ConcurrencyLimiter::Permit permit(limiter);
        res = transport.post_json(path, body, headers, std::chrono::milliseconds(config.timeout_ms));
      }
      if (res.status >= 200 && res.status < 300) {
        if (attempt > 0) logger()->info("{}: succeeded after {} retries", what, attempt);
        return std::move(res.body);
      }
      const bool retryable = res.status >= 500;
      throw ProviderError(std::string(what) + ": provider returned HTTP " + std::to_string(res.status) +
                              ": " + snippet(res.body),
                          retryable, res.status);
    } catch (const ProviderError& e) {
      if (!e.retryable() || attempt >= config.max_retries) {
        if (e.retryable()) {
          throw ProviderError(std::string(e.what()) + " (after " + std::to_string(attempt) + " retries)",
                              true, e.http_status());
        }
        throw;
      }
      const auto delay = std::chrono::milliseconds(static_cast<long long>(config.backoff_base_ms) << attempt);
      logger()->warn("{}: {}; retry {}/{} in {} ms", what, e.what(), attempt + 1, config.max_retries,
                     delay.count());
      std::this_thread::sleep_for(delay);
    }
  }
}

RemoteEmbedder::RemoteEmbedder(ProviderConfig config, std::shared_ptr<HttpTransport> transport,
                               std::shared_ptr<ConcurrencyLimiter> limiter)
    : config_(std::move(config)), transport_(std::move(transport)), limiter_(std::move(limiter)) {
  config_.validate();
  if (!transport_) transport_ = std::make_shared<HttplibTransport>(config_.base_url);
  if (!limiter_) limiter_ = std::make_shared<ConcurrencyLimiter>(config_.max_concurrency);
}

std::vector<EmbeddingVector> RemoteEmbedder::embed_texts(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorKind::invalid_argument, "embed_texts: no texts");
  for (const auto& t : texts) {
    if (t.empty()) throw Error(ErrorKind::invalid_argument, "embed_texts: empty text");
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t begin = 0; begin < texts.size(); begin += config_.batch_size) {
    const std::size_t end = std::min(texts.size(), begin + config_.batch_size);
    nlohmann::json req;
    req["model"] = config_.model_name;
    req["texts"] = std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(begin),
                                            texts.begin() + static_cast<std::ptrdiff_t>(end));
    const std::string body = post_with_retries(*transport_, *limiter_, config_, "/embed", req.dump(), "embed");

    std::vector<EmbeddingVector> batch;
    try {
      const auto res = nlohmann::json::parse(body);
      for (const auto& v : res.at("vectors")) batch.emplace_back(v.get<std::vector<float>>());
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(std::string("embed: malformed provider response: ") + e.what(), false);
    } catch (const Error& e) {
      throw ProviderError(std::string("embed: ") + e.what(), false);
    }
    check_embedding_batch(batch, end - begin);
    if (!out.empty() && batch.front().dim() != out.front().dim()) {
      throw ProviderError("dimension mismatch across batch", false);
    }
    for (auto& v : batch) out.push_back(std::move(v));
  }
  return out;
}

std::string RemoteEmbedder::id() const { return "remote:" + config_.model_name; }

HttpLlmProvider::HttpLlmProvider(ProviderConfig config, std::shared_ptr<HttpTransport> transport,
                                 std::shared_ptr<ConcurrencyLimiter> limiter)
    : config_(std::move(config)), transport_(std::move(transport)), limiter_(std::move(limiter)) {
  config_.validate();
  if (!transport_) transport_ = std::make_shared<HttplibTransport>(config_.base_url);
  if (!limiter_) limiter_ = std::make_shared<ConcurrencyLimiter>(config_.max_concurrency);
}

std::string HttpLlmProvider::complete(std::string_view prompt, int max_tokens) {
  nlohmann::json req;
  req["model"] = config_.model_name;
  req["prompt"] = prompt;
  req["max_tokens"] = max_tokens;
  const std::string body = post_with_retries(*transport_, *limiter_, config_, "/generate", req.dump(), "generate");
  try {
    return nlohmann::json::parse(body).at("text").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("generate: malformed provider response: ") + e.what(), false);
  }
}

std::string HttpLlmProvider::id() const { return "remote:" + config_.model_name; }

bool HttpLlmProvider::probe() {
  try {
    return transport_->reachable(std::chrono::milliseconds(std::min(config_.timeout_ms, 2000)));
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace lessonrag
