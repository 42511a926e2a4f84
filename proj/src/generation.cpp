#include "lessonrag/generation.hpp"

#include <algorithm>
#include <bit>
#include <set>
#include <unordered_set>

#include "lessonrag/error.hpp"
#include "lessonrag/logging.hpp"
#include "lessonrag/sha256.hpp"
#include "lessonrag/text.hpp"

namespace lessonrag {

namespace {

constexpr std::string_view kSchema =
    R"(Write the lesson plan in exactly this format. Keep the three section headings and the procedure row syntax unchanged.
## GENERAL INFORMATION
Topic: <the requested topic>
Subject: <subject>
Level: <level>
Class Size: <class size>
Periods: <number of periods>
Date: ____________
## PREPARATION
Learning Objective: <what learners will be able to do at the end of the lesson>
Materials: <teaching and learning materials>
References: <textbook pages used>
## PROCEDURE
- [introduction|<minutes>] teacher: <teacher activity> | learners: <learner activity>
- [development|<minutes>] teacher: <teacher activity> | learners: <learner activity>
- [wrap_up_and_assessment|<minutes>] teacher: <teacher activity> | learners: <learner activity>
)";

constexpr std::string_view kTemplate =
    R"(You are an experienced teacher preparing a lesson plan for the competence-based lower secondary curriculum in Uganda.
Use ONLY the information provided in the CONTEXT section to base the lesson plan on; do not add facts that are not contained in it.
If the context does not cover the requested topic, say so in the Learning Objective instead of inventing content.

REQUEST
Requested topic: {{topic}}
Requested subject: {{subject}}
Requested level: {{level}}
Requested periods: {{periods}}
Requested class size: {{class_size}}

CONTEXT
{{context}}
END OF CONTEXT

Write the lesson plan in exactly this format. Keep the three section headings and the procedure row syntax unchanged.
## GENERAL INFORMATION
Topic: <the requested topic>
Subject: <subject>
Level: <level>
Class Size: <class size>
Periods: <number of periods>
Date: ____________
## PREPARATION
Learning Objective: <what learners will be able to do at the end of the lesson>
Materials: <teaching and learning materials>
References: <textbook pages used>
## PROCEDURE
- [introduction|<minutes>] teacher: <teacher activity> | learners: <learner activity>
- [development|<minutes>] teacher: <teacher activity> | learners: <learner activity>
- [wrap_up_and_assessment|<minutes>] teacher: <teacher activity> | learners: <learner activity>
)";

constexpr std::string_view kRequiredPlaceholders[] = {"topic", "level", "periods", "class_size", "context"};

std::string vector_digest(const EmbeddingVector& v) {
  Sha256 h;
  for (float f : v.values()) {
    const auto bits = std::bit_cast<std::uint32_t>(f);
    const char le[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                        static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
    h.update(std::string_view(le, 4));
  }
  return h.hex_digest();
}

std::string context_block(const RetrievalEvidence& evidence) {
  if (evidence.scored_chunks.empty()) return std::string(kNoContextBlock);
  std::string out;
  for (std::size_t i = 0; i < evidence.scored_chunks.size(); ++i) {
    const Chunk& c = evidence.scored_chunks[i].chunk;
    if (i > 0) out += "\n\n";
    out += "[Source " + std::to_string(i + 1) + ", " + page_citation(c.page_start, c.page_end) + "]\n";
    out += c.text;
  }
  return out;
}

std::vector<std::string> unique(std::vector<std::string> words) {
  std::sort(words.begin(), words.end());
  words.erase(std::unique(words.begin(), words.end()), words.end());
  return words;
}

double overlap_fraction(const std::vector<std::string>& topic_words, const std::unordered_set<std::string>& pool) {
  if (topic_words.empty()) return 0.0;
  const auto hits = std::count_if(topic_words.begin(), topic_words.end(),
                                  [&](const std::string& w) { return pool.contains(w); });
  return static_cast<double>(hits) / static_cast<double>(topic_words.size());
}

}  // namespace

std::string_view output_schema_block() noexcept { return kSchema; }
std::string_view default_prompt_template() noexcept { return kTemplate; }

std::string_view to_string(ClassSize size) noexcept {
  switch (size) {
    case ClassSize::under_30: return "<30";
    case ClassSize::from_30_to_60: return "30-60";
    case ClassSize::over_60: return ">60";
  }
  return ">60";
}

ClassSize parse_class_size(std::string_view s) {
  std::string compact;
  for (char c : s) {
    if (c != ' ') compact.push_back(c);
  }
  if (compact == "<30") return ClassSize::under_30;
  if (compact == "30-60") return ClassSize::from_30_to_60;
  if (compact == ">60") return ClassSize::over_60;
  throw ValidationError("class_size", "must be one of \"<30\", \"30-60\", \">60\"");
}

void validate_request(const LessonRequest& r) {
  if (text::trim(r.topic).empty()) throw ValidationError("topic", "empty");
  if (text::trim(r.subject).empty()) throw ValidationError("subject", "empty");
  if (r.periods < 1) throw ValidationError("periods", "must be >= 1");
}

LessonRequest request_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("body", "must be a JSON object");
  auto str = [&](const char* field) -> std::string {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) throw ValidationError(field, "missing");
    if (!it->is_string()) throw ValidationError(field, "must be a string");
    return it->get<std::string>();
  };
  LessonRequest r;
  r.level = parse_level(str("level"));
  r.subject = text::trim(str("subject"));
  auto it = j.find("periods");
  if (it == j.end() || it->is_null()) throw ValidationError("periods", "missing");
  if (it->is_number_integer()) {
    r.periods = it->get<int>();
  } else if (it->is_string()) {
    try {
      std::size_t used = 0;
      r.periods = std::stoi(it->get<std::string>(), &used);
      if (used != it->get<std::string>().size()) throw ValidationError("periods", "must be an integer");
    } catch (const std::logic_error&) {
      throw ValidationError("periods", "must be an integer");
    }
  } else {
    throw ValidationError("periods", "must be an integer");
  }
  r.class_size = parse_class_size(str("class_size"));
  r.topic = str("topic");
  validate_request(r);
  r.topic = text::trim(r.topic);
  return r;
}

nlohmann::ordered_json GenerationConfig::to_json() const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["min_sim"] = min_sim;
  j["max_retries"] = max_retries;
  j["chars_per_page"] = chars_per_page;
  j["low_evidence_page_threshold"] = low_evidence_page_threshold;
  j["overlap_threshold"] = overlap_threshold;
  j["max_tokens"] = max_tokens;
  return j;
}

GenerationConfig generation_config_from_json(const nlohmann::json& j) {
  GenerationConfig c;
  c.k = j.value("k", c.k);
  c.min_sim = j.value("min_sim", c.min_sim);
  c.max_retries = j.value("max_retries", c.max_retries);
  c.chars_per_page = j.value("chars_per_page", c.chars_per_page);
  c.low_evidence_page_threshold = j.value("low_evidence_page_threshold", c.low_evidence_page_threshold);
  c.overlap_threshold = j.value("overlap_threshold", c.overlap_threshold);
  c.max_tokens = j.value("max_tokens", c.max_tokens);
  if (auto it = j.find("template_path"); it != j.end() && it->is_string()) {
    c.prompt_template = read_file(it->get<std::string>());
  }
  if (c.k < 1) throw ValidationError("k", "must be >= 1");
  if (c.max_retries < 0) throw ValidationError("max_retries", "must be >= 0");
  if (c.chars_per_page < 1) throw ValidationError("chars_per_page", "must be >= 1");
  return c;
}

void StoreRegistry::add(std::shared_ptr<const VectorStore> store) {
  const std::string subject = store->subject();
  if (!stores_.emplace(subject, std::move(store)).second) {
    throw Error(ErrorKind::invalid_argument, "duplicate store for subject '" + subject + "'");
  }
}

std::shared_ptr<const VectorStore> StoreRegistry::find(std::string_view subject) const {
  auto it = stores_.find(subject);
  return it == stores_.end() ? nullptr : it->second;
}

std::vector<std::shared_ptr<const VectorStore>> StoreRegistry::stores() const {
  std::vector<std::shared_ptr<const VectorStore>> out;
  out.reserve(stores_.size());
  for (const auto& [_, s] : stores_) out.push_back(s);
  return out;
}

StoreRegistry StoreRegistry::load_directory(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw Error(ErrorKind::io, "store directory not found: " + root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "manifest.json")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  StoreRegistry reg;
  std::map<std::string, fs::path> origin;
  for (const auto& d : dirs) {
    auto store = std::make_shared<const VectorStore>(load_store(d));
    auto [it, inserted] = origin.emplace(store->subject(), d);
    if (!inserted) {
      throw Error(ErrorKind::invalid_argument, "duplicate subject '" + store->subject() + "' in '" +
                                                   it->second.string() + "' and '" + d.string() + "'");
    }
    reg.add(std::move(store));
  }
  return reg;
}

RetrievalEvidence retrieve_context(const VectorStore& store, const LessonRequest& request, std::size_t k,
                                   double min_sim, Embedder& embedder) {
  if (store.subject() != request.subject) {
    throw Error(ErrorKind::invalid_argument,
                "store subject '" + store.subject() + "' does not match request subject '" + request.subject + "'");
  }
  const EmbeddingVector query = embedder.embed(text::trim(request.topic));
  RetrievalEvidence ev;
  ev.scored_chunks = store.top_k(query, k, min_sim);
  ev.query_vector_digest = vector_digest(query);
  std::set<int> pages;
  for (const auto& sc : ev.scored_chunks) {
    for (int p = sc.chunk.page_start; p <= sc.chunk.page_end; ++p) pages.insert(p);
    ev.total_source_chars += sc.chunk.char_count;
  }
  ev.distinct_pages = pages.size();
  return ev;
}

ConfidenceReport compute_confidence(const RetrievalEvidence& evidence, std::size_t chars_per_page,
                                    double low_evidence_page_threshold) {
  if (chars_per_page == 0) throw Error(ErrorKind::invalid_argument, "chars_per_page must be > 0");
  ConfidenceReport r;
  r.chunk_count = evidence.scored_chunks.size();
  r.distinct_pages = evidence.distinct_pages;
  r.total_source_chars = evidence.total_source_chars;
  r.page_equivalents = static_cast<double>(evidence.total_source_chars) / static_cast<double>(chars_per_page);
  r.low_evidence = r.page_equivalents < low_evidence_page_threshold;
  return r;
}

std::string page_citation(int page_start, int page_end) {
  if (page_start == page_end) return "p. " + std::to_string(page_start);
  return "pp. " + std::to_string(page_start) + "–" + std::to_string(page_end);
}

std::string assemble_prompt(const LessonRequest& request, const RetrievalEvidence& evidence,
                            std::string_view tmpl) {
  for (std::string_view name : kRequiredPlaceholders) {
    if (tmpl.find("{{" + std::string(name) + "}}") == std::string_view::npos) {
      throw Error(ErrorKind::invalid_argument, "prompt template is missing the {{" + std::string(name) + "}} placeholder");
    }
  }
  const std::map<std::string, std::string, std::less<>> values = {
      {"topic", text::trim(request.topic)},
      {"subject", request.subject},
      {"level", std::string(to_string(request.level))},
      {"periods", std::to_string(request.periods)},
      {"class_size", std::string(to_string(request.class_size))},
      {"context", context_block(evidence)},
  };

  std::string out;
  std::size_t pos = 0;
  while (pos < tmpl.size()) {
    const auto open = tmpl.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = tmpl.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(tmpl.substr(pos, open - pos));
    const auto it = values.find(tmpl.substr(open + 2, close - open - 2));
    if (it != values.end()) {
      out += it->second;
    } else {
      out.append(tmpl.substr(open, close + 2 - open));
    }
    pos = close + 2;
  }
  out.append(tmpl.substr(std::min(pos, tmpl.size())));

  if (tmpl.find(kContextOnlyInstruction) == std::string_view::npos) {
    out = std::string(kContextOnlyInstruction) + "\n\n" + out;
  }
  if (tmpl.find("## GENERAL INFORMATION") == std::string_view::npos ||
      tmpl.find("## PREPARATION") == std::string_view::npos || tmpl.find("## PROCEDURE") == std::string_view::npos) {
    if (!out.ends_with('\n')) out.push_back('\n');
    out += "\n";
    out += kSchema;
  }
  return out;
}

GeneratedPlan generate_plan(LlmProvider& provider, std::string_view prompt, int max_retries, int max_tokens) {
  if (max_retries < 0) throw Error(ErrorKind::invalid_argument, "max_retries must be >= 0");
  std::string last_problem;
  for (int attempt = 0; attempt <= max_retries; ++attempt) {
    std::string raw = provider.complete(prompt, max_tokens);
    try {
      LessonPlan plan = parse_lesson_plan(raw);
      const ValidationReport report = validate_format(plan);
      if (report.valid) return GeneratedPlan{std::move(raw), std::move(plan), attempt};
      last_problem = "plan failed validation";
      for (const auto& s : report.missing_sections) last_problem += "; missing section " + s;
      for (const auto& k : report.missing_keys) last_problem += "; missing key " + k;
      for (const auto& e : report.structural_errors) last_problem += "; " + e;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::format) throw;
      last_problem = e.what();
    }
    logger()->warn("generate: attempt {} produced malformed output ({})", attempt + 1, last_problem);
  }
  throw Error(ErrorKind::format,
              "format failure after " + std::to_string(max_retries) + " retries: " + last_problem);
}

PlausibilityVerdict plausibility_check(std::string_view topic, const RetrievalEvidence& evidence,
                                       const LessonPlan& plan, double overlap_threshold) {
  auto topic_words = unique(text::content_words(topic));
  if (topic_words.empty()) topic_words = unique(text::words(topic));

  std::unordered_set<std::string> evidence_words;
  for (const auto& sc : evidence.scored_chunks) {
    for (auto& w : text::words(sc.chunk.text)) evidence_words.insert(std::move(w));
  }
  std::unordered_set<std::string> plan_words;
  for (auto& w : text::words(plan.general.topic + " " + plan.preparation.learning_objective)) {
    plan_words.insert(std::move(w));
  }

  PlausibilityVerdict v;
  v.topic_evidence_overlap = overlap_fraction(topic_words, evidence_words);
  v.topic_plan_overlap = overlap_fraction(topic_words, plan_words);
  v.suspicious = v.topic_evidence_overlap < overlap_threshold || v.topic_plan_overlap < overlap_threshold;
  return v;
}

GenerationResult run_generation(const StoreRegistry& stores, const LessonRequest& request,
                                const Providers& providers, const GenerationConfig& config) {
  try {
    validate_request(request);
  } catch (const ValidationError& e) {
    throw PipelineError("validate", ErrorKind::validation, e.reason(), e.field());
  }
  if (!providers.embedder || !providers.llm) {
    throw PipelineError("validate", ErrorKind::internal, "providers not configured");
  }

  const auto store = stores.find(request.subject);
  if (!store) {
    throw PipelineError("retrieve", ErrorKind::not_found, "no store for subject '" + request.subject + "'");
  }

  GenerationResult result;
  try {
    result.evidence = retrieve_context(*store, request, config.k, config.min_sim, *providers.embedder);
  } catch (const Error& e) {
    throw PipelineError("retrieve", e.kind(), e.what());
  }
  result.confidence =
      compute_confidence(result.evidence, config.chars_per_page, config.low_evidence_page_threshold);

  std::string prompt;
  try {
    prompt = assemble_prompt(request, result.evidence, config.prompt_template);
  } catch (const Error& e) {
    throw PipelineError("prompt", e.kind(), e.what());
  }

  GeneratedPlan generated;
  try {
    generated = generate_plan(*providers.llm, prompt, config.max_retries, config.max_tokens);
  } catch (const Error& e) {
    throw PipelineError("generate", e.kind(), e.what());
  }
  result.raw_output = std::move(generated.raw_output);
  result.retries_used = generated.retries_used;
  result.plan = truncate_to_first_period(std::move(generated.plan));
  result.plausibility =
      plausibility_check(request.topic, result.evidence, result.plan, config.overlap_threshold);

  if (result.confidence.low_evidence) result.warnings.emplace_back(kLowEvidenceWarning);
  if (result.plausibility.suspicious) result.warnings.emplace_back(kTopicMismatchWarning);

  logger()->info(
      "generation subject='{}' topic='{}' k={} min_sim={} chars_per_page={} threshold={} overlap_threshold={} "
      "chunks={} page_equivalents={:.2f} retries={} warnings={}",
      request.subject, request.topic, config.k, config.min_sim, config.chars_per_page,
      config.low_evidence_page_threshold, config.overlap_threshold, result.confidence.chunk_count,
      result.confidence.page_equivalents, result.retries_used, result.warnings.size());
  return result;
}

}  // namespace lessonrag
