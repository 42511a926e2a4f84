#include "lessonrag/batch.hpp"

#include <atomic>
#include <cstdio>
#include <fstream>
#include <thread>

#include "lessonrag/error.hpp"
#include "lessonrag/logging.hpp"

namespace lessonrag {

namespace {

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorKind::io, "cannot write " + path.string());
  f << content;
  if (!f) throw Error(ErrorKind::io, "write failed: " + path.string());
}

std::string plan_id_for(const std::string& subject, std::size_t index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%02zu", index);
  return subject + buf;
}

struct Job {
  std::string subject;
  TopicEntry topic;
  std::size_t index = 0;  // 1-based within the subject
};

nlohmann::ordered_json plan_document(const std::string& plan_id, const LessonRequest& req,
                                     const GenerationResult& res) {
  nlohmann::ordered_json doc;
  doc["plan_id"] = plan_id;
  nlohmann::ordered_json r;
  r["level"] = to_string(req.level);
  r["subject"] = req.subject;
  r["periods"] = req.periods;
  r["class_size"] = to_string(req.class_size);
  r["topic"] = req.topic;
  doc["request"] = std::move(r);
  doc["plan"] = plan_to_json(res.plan);
  nlohmann::ordered_json c;
  c["chunk_count"] = res.confidence.chunk_count;
  c["distinct_pages"] = res.confidence.distinct_pages;
  c["total_source_chars"] = res.confidence.total_source_chars;
  c["page_equivalents"] = res.confidence.page_equivalents;
  c["low_evidence"] = res.confidence.low_evidence;
  doc["confidence"] = std::move(c);
  auto ev = nlohmann::ordered_json::array();
  for (const auto& sc : res.evidence.scored_chunks) {
    nlohmann::ordered_json e;
    e["chunk_id"] = sc.chunk.chunk_id;
    e["page_start"] = sc.chunk.page_start;
    e["page_end"] = sc.chunk.page_end;
    e["score"] = sc.score;
    ev.push_back(std::move(e));
  }
  doc["evidence"] = std::move(ev);
  doc["warnings"] = res.warnings;
  doc["retries_used"] = res.retries_used;
  return doc;
}

}  // namespace

void BatchProtocolConfig::validate() const {
  if (plans_per_subject < 1) throw ValidationError("plans_per_subject", "must be >= 1");
  if (stride < 1) throw ValidationError("stride", "must be >= 1");
  if (periods < 1) throw ValidationError("periods", "must be >= 1");
  if (max_format_retries < 0) throw ValidationError("max_format_retries", "must be >= 0");
}

nlohmann::ordered_json BatchProtocolConfig::to_json() const {
  nlohmann::ordered_json j;
  j["subjects"] = subjects;
  j["plans_per_subject"] = plans_per_subject;
  j["stride"] = stride;
  j["class_size"] = to_string(class_size);
  j["periods"] = periods;
  j["max_format_retries"] = max_format_retries;
  j["breadth_page_limit"] = breadth_page_limit;
  j["level"] = to_string(level);
  return j;
}

BatchProtocolConfig batch_config_from_json(const nlohmann::json& j) {
  BatchProtocolConfig c;
  c.subjects = j.value("subjects", c.subjects);
  c.plans_per_subject = j.value("plans_per_subject", c.plans_per_subject);
  c.stride = j.value("stride", c.stride);
  if (j.contains("class_size")) c.class_size = parse_class_size(j["class_size"].get<std::string>());
  c.periods = j.value("periods", c.periods);
  c.max_format_retries = j.value("max_format_retries", c.max_format_retries);
  c.breadth_page_limit = j.value("breadth_page_limit", c.breadth_page_limit);
  if (j.contains("level")) c.level = parse_level(j["level"].get<std::string>());
  c.validate();
  return c;
}

bool BatchResult::all_ok() const {
  return std::all_of(rows.begin(), rows.end(), [](const BatchRow& r) { return r.ok; });
}

std::map<std::string, TableOfContents> load_store_tocs(const std::filesystem::path& store_root) {
  namespace fs = std::filesystem;
  std::map<std::string, TableOfContents> out;
  if (!fs::is_directory(store_root)) throw Error(ErrorKind::io, "store directory not found: " + store_root.string());
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(store_root)) {
    if (e.is_directory() && fs::exists(e.path() / "manifest.json")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) {
    if (!fs::exists(d / "toc.json")) continue;
    std::string subject;
    try {
      subject = nlohmann::json::parse(read_file(d / "manifest.json")).at("subject").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::format, "manifest " + (d / "manifest.json").string() + ": " + e.what());
    }
    out[subject] = load_toc(d / "toc.json");
  }
  return out;
}

std::vector<TopicEntry> batch_topics(const BatchProtocolConfig& config, const std::string& subject,
                                     const TableOfContents& toc) {
  try {
    return select_topics(toc, config.plans_per_subject, config.stride, config.breadth_page_limit);
  } catch (const Error& e) {
    throw Error(e.kind(), "subject '" + subject + "': " + e.what());
  }
}

BatchResult run_batch(const BatchProtocolConfig& config, const StoreRegistry& stores,
                      const std::map<std::string, TableOfContents>& tocs, const Providers& providers,
                      GenerationConfig generation, const std::filesystem::path& out_dir, std::size_t parallel) {
  config.validate();
  if (config.subjects.empty()) throw ValidationError("subjects", "empty");
  generation.max_retries = config.max_format_retries;

  std::vector<Job> jobs;
  for (const auto& subject : config.subjects) {
    if (!stores.find(subject)) throw Error(ErrorKind::not_found, "no store for subject '" + subject + "'");
    auto toc = tocs.find(subject);
    if (toc == tocs.end()) throw Error(ErrorKind::not_found, "no table of contents for subject '" + subject + "'");
    const auto topics = batch_topics(config, subject, toc->second);
    for (std::size_t i = 0; i < topics.size(); ++i) jobs.push_back({subject, topics[i], i + 1});
  }
  std::filesystem::create_directories(out_dir);

  std::vector<BatchRow> rows(jobs.size());
  auto work = [&](std::size_t j) {
    const Job& job = jobs[j];
    BatchRow& row = rows[j];
    row.plan_id = plan_id_for(job.subject, job.index);
    row.subject = job.subject;
    row.topic = job.topic.title;
    row.page_start = job.topic.page_start;
    row.page_end = job.topic.page_end;
    LessonRequest req{config.level, job.subject, config.periods, config.class_size, job.topic.title};
    try {
      const GenerationResult res = run_generation(stores, req, providers, generation);
      row.ok = true;
      row.retries_used = res.retries_used;
      row.page_equivalents = res.confidence.page_equivalents;
      row.warnings = res.warnings;
      row.plan_file = row.plan_id + ".plan.json";
      write_file(out_dir / row.plan_file, plan_document(row.plan_id, req, res).dump(2) + "\n");
    } catch (const Error& e) {
      row.ok = false;
      row.error = e.what();
      row.plan_file.clear();
      logger()->error("batch: {} ('{}') failed: {}", row.plan_id, row.topic, e.what());
    }
  };

  const std::size_t threads = std::max<std::size_t>(1, std::min(parallel, jobs.size()));
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) work(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) work(j);
      });
    }
  }

  nlohmann::ordered_json manifest;
  manifest["protocol"] = config.to_json();
  manifest["generation"] = generation.to_json();
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json e;
    e["plan_id"] = r.plan_id;
    e["subject"] = r.subject;
    e["topic"] = r.topic;
    e["page_start"] = r.page_start;
    e["page_end"] = r.page_end;
    e["status"] = r.ok ? "ok" : "failed";
    e["retries_used"] = r.retries_used;
    e["page_equivalents"] = r.page_equivalents;
    e["warnings"] = r.warnings;
    if (!r.ok) e["error"] = r.error;
    e["plan_file"] = r.plan_file.empty() ? nlohmann::ordered_json() : nlohmann::ordered_json(r.plan_file);
    arr.push_back(std::move(e));
  }
  manifest["plans"] = std::move(arr);
  write_file(out_dir / "batch_manifest.json", manifest.dump(2) + "\n");
  return BatchResult{std::move(rows)};
}

}  // namespace lessonrag
