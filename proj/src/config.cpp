#include "lessonrag/config.hpp"

#include "lessonrag/error.hpp"
#include "lessonrag/mock_llm.hpp"

namespace lessonrag {

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

AppConfig parse_app_config(std::string_view json_text, const std::filesystem::path& base_dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::format, std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::format, "config: expected a JSON object");

  AppConfig c;
  try {
    if (j.contains("store_dir")) c.store_dir = resolve(base_dir, j["store_dir"].get<std::string>());
    else c.store_dir = base_dir / c.store_dir;
    if (j.contains("ui_dir")) c.ui_dir = resolve(base_dir, j["ui_dir"].get<std::string>());
    else c.ui_dir = base_dir / c.ui_dir;
    if (auto it = j.find("listen"); it != j.end()) {
      c.listen.host = it->value("host", c.listen.host);
      c.listen.port = it->value("port", c.listen.port);
    }
    if (auto it = j.find("embedding"); it != j.end() && !it->is_null()) c.embedding = provider_config_from_json(*it);
    if (auto it = j.find("llm"); it != j.end() && !it->is_null()) c.llm = provider_config_from_json(*it);
    if (auto it = j.find("generation"); it != j.end()) {
      nlohmann::json g = *it;
      if (g.contains("template_path")) {
        g["template_path"] = resolve(base_dir, g["template_path"].get<std::string>()).string();
      }
      c.generation = generation_config_from_json(g);
    }
    if (auto it = j.find("chunking"); it != j.end()) {
      c.chunking.chunk_size = it->value("chunk_size", c.chunking.chunk_size);
      c.chunking.overlap = it->value("overlap", c.chunking.overlap);
    }
    c.offline_dim = j.value("offline_dim", c.offline_dim);
    if (auto it = j.find("batch"); it != j.end()) c.batch = batch_config_from_json(*it);
    c.cors_origin = j.value("cors_origin", c.cors_origin);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("config: ") + e.what());
  }
  if (c.listen.port < 0 || c.listen.port > 65535) throw ValidationError("listen.port", "out of range");
  if (c.chunking.chunk_size == 0 || c.chunking.overlap >= c.chunking.chunk_size) {
    throw ValidationError("chunking", "need chunk_size > overlap >= 0");
  }
  return c;
}

AppConfig load_app_config(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::not_found, "config file not found: " + path.string());
  return parse_app_config(read_file(path), path.parent_path().empty() ? "." : path.parent_path());
}

std::shared_ptr<Embedder> make_embedder(const AppConfig& config, bool offline_embedder) {
  if (offline_embedder) return std::make_shared<DeterministicEmbedder>(config.offline_dim);
  if (!config.embedding) {
    throw Error(ErrorKind::invalid_argument, "no embedding provider configured (use --offline-embedder)");
  }
  return std::make_shared<RemoteEmbedder>(*config.embedding);
}

std::shared_ptr<LlmProvider> make_llm(const AppConfig& config, bool mock_llm) {
  if (mock_llm) return std::make_shared<TemplateMockLlm>();
  if (!config.llm) throw Error(ErrorKind::invalid_argument, "no text-generation provider configured (use --mock-llm)");
  return std::make_shared<HttpLlmProvider>(*config.llm);
}

}  // namespace lessonrag
