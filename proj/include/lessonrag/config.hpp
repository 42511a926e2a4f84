#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "lessonrag/batch.hpp"
#include "lessonrag/corpus.hpp"
#include "lessonrag/generation.hpp"
#include "lessonrag/providers.hpp"

namespace lessonrag {

struct ListenAddress {
  std::string host = "127.0.0.1";
  int port = 8080;
};

/// Application settings shared by the CLI subcommands and the server.
/// Relative paths are resolved against the config file's directory.
struct AppConfig {
  std::filesystem::path store_dir = "stores";
  std::filesystem::path ui_dir = "web/dist";
  ListenAddress listen;
  std::optional<ProviderConfig> embedding;
  std::optional<ProviderConfig> llm;
  GenerationConfig generation;
  ChunkingOptions chunking;
  std::size_t offline_dim = kDefaultOfflineDim;
  BatchProtocolConfig batch;
  std::string cors_origin = "*";
};

AppConfig parse_app_config(std::string_view json_text, const std::filesystem::path& base_dir = ".");
AppConfig load_app_config(const std::filesystem::path& path);

/// Builds the embedder and text generator. The offline and mock flags win
/// over remote settings; a missing remote section without its flag is an
/// error.
std::shared_ptr<Embedder> make_embedder(const AppConfig& config, bool offline_embedder);
std::shared_ptr<LlmProvider> make_llm(const AppConfig& config, bool mock_llm);

}  // namespace lessonrag
