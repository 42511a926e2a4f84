#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lessonrag/corpus.hpp"
#include "lessonrag/embedding.hpp"
#include "lessonrag/lesson_plan.hpp"
#include "lessonrag/providers.hpp"
#include "lessonrag/vector_store.hpp"

namespace lessonrag {

enum class ClassSize { under_30, from_30_to_60, over_60 };

std::string_view to_string(ClassSize size) noexcept;
/// Accepts "<30", "30-60", ">60" with optional spaces ("> 60").
ClassSize parse_class_size(std::string_view s);

struct LessonRequest {
  Level level = Level::S1;
  std::string subject;
  int periods = 1;
  ClassSize class_size = ClassSize::over_60;
  std::string topic;
};

/// Throws ValidationError naming the offending field.
void validate_request(const LessonRequest& request);

/// Parses `{level, subject, periods, class_size, topic}`; throws
/// ValidationError for missing or ill-typed fields.
LessonRequest request_from_json(const nlohmann::json& j);

struct RetrievalEvidence {
  std::vector<ScoredChunk> scored_chunks;  // descending score
  std::size_t distinct_pages = 0;
  std::size_t total_source_chars = 0;
  std::string query_vector_digest;
};

struct ConfidenceReport {
  std::size_t chunk_count = 0;
  std::size_t distinct_pages = 0;
  std::size_t total_source_chars = 0;
  bool low_evidence = true;
  double page_equivalents = 0.0;
};

struct PlausibilityVerdict {
  double topic_evidence_overlap = 0.0;
  double topic_plan_overlap = 0.0;
  bool suspicious = true;
};

inline constexpr std::string_view kLowEvidenceWarning = "LOW_EVIDENCE";
inline constexpr std::string_view kTopicMismatchWarning = "TOPIC_MISMATCH";

/// Sentence placed in every prompt restricting the model to the supplied
/// context.
inline constexpr std::string_view kContextOnlyInstruction =
    "Use ONLY the information provided in the CONTEXT section to base the lesson plan on; "
    "do not add facts that are not contained in it.";

inline constexpr std::string_view kNoContextBlock = "NO CONTEXT FOUND";

/// Output schema appended to prompts whose template lacks it.
std::string_view output_schema_block() noexcept;

/// Built-in prompt template (same text as templates/lesson_prompt.txt).
std::string_view default_prompt_template() noexcept;

struct GenerationConfig {
  std::size_t k = 6;
  double min_sim = 0.0;
  int max_retries = 2;
  std::size_t chars_per_page = 1800;
  double low_evidence_page_threshold = 1.0;
  double overlap_threshold = 0.2;
  int max_tokens = 2048;
  std::string prompt_template{default_prompt_template()};

  nlohmann::ordered_json to_json() const;  // template omitted
};

GenerationConfig generation_config_from_json(const nlohmann::json& j);

struct GenerationResult {
  LessonPlan plan;
  std::string raw_output;
  RetrievalEvidence evidence;
  ConfidenceReport confidence;
  PlausibilityVerdict plausibility;
  int retries_used = 0;
  std::vector<std::string> warnings;
};

/// Subject -> immutable store. Lookup is exact on the subject identifier.
class StoreRegistry {
 public:
  void add(std::shared_ptr<const VectorStore> store);
  std::shared_ptr<const VectorStore> find(std::string_view subject) const;
  std::vector<std::shared_ptr<const VectorStore>> stores() const;  // ordered by subject
  std::size_t size() const noexcept { return stores_.size(); }

  /// Loads every immediate subdirectory of `root` that holds a manifest.json.
  /// Two directories declaring the same subject is an error.
  static StoreRegistry load_directory(const std::filesystem::path& root);

 private:
  std::map<std::string, std::shared_ptr<const VectorStore>, std::less<>> stores_;
};

struct Providers {
  std::shared_ptr<Embedder> embedder;
  std::shared_ptr<LlmProvider> llm;
};

RetrievalEvidence retrieve_context(const VectorStore& store, const LessonRequest& request, std::size_t k,
                                   double min_sim, Embedder& embedder);

ConfidenceReport compute_confidence(const RetrievalEvidence& evidence, std::size_t chars_per_page,
                                    double low_evidence_page_threshold);

/// "p. 14" or "pp. 10–11".
std::string page_citation(int page_start, int page_end);

std::string assemble_prompt(const LessonRequest& request, const RetrievalEvidence& evidence,
                            std::string_view prompt_template);

struct GeneratedPlan {
  std::string raw_output;
  LessonPlan plan;
  int retries_used = 0;
};

/// Calls the provider with the same prompt until the output parses and
/// validates, at most max_retries + 1 times.
GeneratedPlan generate_plan(LlmProvider& provider, std::string_view prompt, int max_retries,
                            int max_tokens = 2048);

PlausibilityVerdict plausibility_check(std::string_view topic, const RetrievalEvidence& evidence,
                                       const LessonPlan& plan, double overlap_threshold);

/// retrieve -> confidence -> prompt -> generate -> truncate -> plausibility.
/// Errors are rethrown as PipelineError labeled with the failing stage.
GenerationResult run_generation(const StoreRegistry& stores, const LessonRequest& request,
                                const Providers& providers, const GenerationConfig& config);

}  // namespace lessonrag
