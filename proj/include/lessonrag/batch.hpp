#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "lessonrag/corpus.hpp"
#include "lessonrag/generation.hpp"

namespace lessonrag {

/// Fixed-protocol batch: every `stride`-th TOC entry of each subject, with
/// class size and periods held constant.
struct BatchProtocolConfig {
  std::vector<std::string> subjects;
  std::size_t plans_per_subject = 8;
  std::size_t stride = 2;
  ClassSize class_size = ClassSize::over_60;
  int periods = 1;
  int max_format_retries = 2;
  int breadth_page_limit = 25;
  Level level = Level::S1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
};

BatchProtocolConfig batch_config_from_json(const nlohmann::json& j);

struct BatchRow {
  std::string plan_id;  // "{subject}{NN}", NN from 01
  std::string subject;
  std::string topic;
  int page_start = 0;
  int page_end = 0;
  bool ok = false;
  int retries_used = 0;
  double page_equivalents = 0.0;
  std::vector<std::string> warnings;
  std::string error;
  std::string plan_file;  // empty when generation failed
};

struct BatchResult {
  std::vector<BatchRow> rows;  // subject order of the config, then topic order
  bool all_ok() const;
};

/// Table of contents stored next to each store (toc.json), keyed by the
/// subject in the store's manifest.
std::map<std::string, TableOfContents> load_store_tocs(const std::filesystem::path& store_root);

/// Topics the protocol picks for one subject. Errors name the subject.
std::vector<TopicEntry> batch_topics(const BatchProtocolConfig& config, const std::string& subject,
                                     const TableOfContents& toc);

/// Writes one `{plan_id}.plan.json` per successful plan plus
/// batch_manifest.json. Output bytes do not depend on `parallel`.
BatchResult run_batch(const BatchProtocolConfig& config, const StoreRegistry& stores,
                      const std::map<std::string, TableOfContents>& tocs, const Providers& providers,
                      GenerationConfig generation, const std::filesystem::path& out_dir,
                      std::size_t parallel = 1);

}  // namespace lessonrag
