// lessonrag: ingest textbooks, run the batch protocol, evaluate ratings and
// serve the generation API.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>

#include "CLI11.hpp"
#include "lessonrag/batch.hpp"
#include "lessonrag/config.hpp"
#include "lessonrag/error.hpp"
#include "lessonrag/logging.hpp"
#include "lessonrag/report.hpp"
#include "lessonrag/service.hpp"
#include "lessonrag/vector_store.hpp"

namespace fs = std::filesystem;
using namespace lessonrag;

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions {
  std::string config_path;
  bool offline_embedder = false;
  bool mock_llm = false;
  std::string log_level = "info";
};

struct IngestOptions {
  std::string corpus, toc, subject, level = "S1", edition = "student", out;
  std::size_t chunk_size = 0, overlap = 0;
  bool overlap_set = false;
  bool force = false;
};

struct BatchOptions {
  std::string stores, out;
  std::vector<std::string> subjects;
  std::size_t parallel = 1;
};

struct EvaluateOptions {
  std::string plans, ratings, rubric, out;
};

struct ServeOptions {
  std::string stores, ui, host;
  int port = -1;
};

HttpServer* g_server = nullptr;

AppConfig app_config(const GlobalOptions& g) {
  if (g.config_path.empty()) return AppConfig{};
  return load_app_config(g.config_path);
}

int cmd_ingest(const GlobalOptions& g, const IngestOptions& o) {
  if (!fs::exists(o.corpus)) {
    std::cerr << "error: corpus file not found: " << o.corpus << "\n";
    return kExitUsage;
  }
  if (!fs::exists(o.toc)) {
    std::cerr << "error: toc file not found: " << o.toc << "\n";
    return kExitUsage;
  }
  const fs::path out(o.out);
  if (fs::exists(out / "manifest.json") && !o.force) {
    std::cerr << "error: " << out.string() << " already holds a store; pass --force to overwrite\n";
    return kExitFailure;
  }

  const AppConfig cfg = app_config(g);
  ChunkingOptions chunking = cfg.chunking;
  if (o.chunk_size > 0) chunking.chunk_size = o.chunk_size;
  if (o.overlap_set) chunking.overlap = o.overlap;
  if (chunking.overlap >= chunking.chunk_size) throw ValidationError("overlap", "must be smaller than chunk_size");

  const Level level = parse_level(o.level);
  const Edition edition = parse_edition(o.edition);
  const TableOfContents toc = load_toc(o.toc);
  const TextbookDocument doc = load_textbook(o.corpus, o.subject, level, edition);
  std::vector<Chunk> chunks = chunk_document(doc, chunking);

  auto embedder = make_embedder(cfg, g.offline_embedder);
  std::vector<std::string> texts;
  texts.reserve(chunks.size());
  for (const auto& c : chunks) texts.push_back(c.text);
  const auto vectors = embedder->embed_texts(texts);

  IngestMeta meta{level, edition, chunking.chunk_size, chunking.overlap, embedder->id(), {}};
  const VectorStore store = build_store(o.subject, std::move(chunks), vectors, meta);
  const std::string digest = persist_store(store, out);
  {
    std::ofstream f(out / "toc.json", std::ios::binary | std::ios::trunc);
    f << toc_to_json(toc);
    if (!f) throw Error(ErrorKind::io, "cannot write " + (out / "toc.json").string());
  }
  logger()->info("ingest: {} records, digest {}", store.size(), digest);
  std::cout << read_file(out / "manifest.json");
  return 0;
}

int cmd_batch(const GlobalOptions& g, const BatchOptions& o) {
  AppConfig cfg = app_config(g);
  const fs::path stores_dir = o.stores.empty() ? cfg.store_dir : fs::path(o.stores);
  if (!o.subjects.empty()) cfg.batch.subjects = o.subjects;

  const StoreRegistry stores = StoreRegistry::load_directory(stores_dir);
  if (cfg.batch.subjects.empty()) {
    for (const auto& s : stores.stores()) cfg.batch.subjects.push_back(s->subject());
  }
  const auto tocs = load_store_tocs(stores_dir);
  Providers providers{make_embedder(cfg, g.offline_embedder), make_llm(cfg, g.mock_llm)};

  const BatchResult result =
      run_batch(cfg.batch, stores, tocs, providers, cfg.generation, o.out, std::max<std::size_t>(1, o.parallel));
  std::size_t failed = 0;
  for (const auto& r : result.rows) {
    std::cout << r.plan_id << "\t" << (r.ok ? "ok" : "FAILED") << "\t" << r.topic;
    for (const auto& w : r.warnings) std::cout << "\t" << w;
    std::cout << "\n";
    failed += !r.ok;
  }
  std::cout << result.rows.size() - failed << "/" << result.rows.size() << " plans written to " << o.out << "\n";
  return failed == 0 ? 0 : kExitFailure;
}

int cmd_evaluate(const GlobalOptions&, const EvaluateOptions& o) {
  if (!fs::is_directory(o.plans)) {
    std::cerr << "error: plans directory not found: " << o.plans << "\n";
    return kExitUsage;
  }
  if (!fs::exists(o.ratings)) {
    std::cerr << "error: ratings file not found: " << o.ratings << "\n";
    return kExitUsage;
  }
  std::set<std::string> known;
  const std::string suffix = ".plan.json";
  for (const auto& e : fs::directory_iterator(o.plans)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) {
      known.insert(name.substr(0, name.size() - suffix.size()));
    }
  }
  const Rubric rubric = o.rubric.empty() ? default_rubric() : load_rubric(o.rubric);
  const auto ratings = load_ratings_csv(o.ratings);
  const EvaluationReport report = evaluation_report(ratings, rubric, BandTable{}, known);
  write_report(report, o.out);
  std::cout << report_text(report);
  return 0;
}

int cmd_serve(const GlobalOptions& g, const ServeOptions& o) {
  const AppConfig cfg = app_config(g);
  const fs::path stores_dir = o.stores.empty() ? cfg.store_dir : fs::path(o.stores);
  const fs::path ui_dir = o.ui.empty() ? cfg.ui_dir : fs::path(o.ui);
  const std::string host = o.host.empty() ? cfg.listen.host : o.host;
  const int port = o.port >= 0 ? o.port : cfg.listen.port;

  Providers providers{make_embedder(cfg, g.offline_embedder), make_llm(cfg, g.mock_llm)};
  auto service = std::make_shared<LessonService>(providers, cfg.generation);
  HttpServer server(service, ui_dir, cfg.cors_origin);
  const int bound = server.bind(host, port);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });

  std::jthread loader([&] {
    try {
      service->set_stores(StoreRegistry::load_directory(stores_dir));
      logger()->info("serve: stores loaded from {}", stores_dir.string());
    } catch (const std::exception& e) {
      logger()->critical("serve: cannot load stores: {}", e.what());
      server.stop();
    }
  });
  service->start_probe_loop(std::chrono::seconds(30));
  logger()->info("serve: listening on http://{}:{}", host, bound);
  server.listen();
  g_server = nullptr;
  return service->ready() ? 0 : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum-grounded lesson plan generation and evaluation"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--config", g.config_path, "JSON configuration file");
  app.add_flag("--offline-embedder", g.offline_embedder, "Use the built-in hashing embedder");
  app.add_flag("--mock-llm", g.mock_llm, "Use the built-in template generator");
  app.add_option("--log-level", g.log_level, "trace, debug, info, warn, error")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "off"}));

  IngestOptions io;
  auto* ingest = app.add_subcommand("ingest", "Chunk, embed and persist a textbook");
  ingest->add_option("--corpus", io.corpus, "Page-delimited textbook text")->required();
  ingest->add_option("--toc", io.toc, "Table of contents (JSON)")->required();
  ingest->add_option("--subject", io.subject, "Subject identifier")->required();
  ingest->add_option("--level", io.level, "S1..S4");
  ingest->add_option("--edition", io.edition, "student or teacher");
  ingest->add_option("--out", io.out, "Store directory")->required();
  ingest->add_option("--chunk-size", io.chunk_size, "Chunk length in characters");
  auto* overlap = ingest->add_option("--overlap", io.overlap, "Overlap between chunks in characters");
  ingest->add_flag("--force", io.force, "Overwrite an existing store");

  BatchOptions bo;
  auto* batch = app.add_subcommand("batch", "Generate the fixed-protocol plan batch");
  batch->add_option("--stores", bo.stores, "Directory of stores");
  batch->add_option("--subjects", bo.subjects, "Subjects to include");
  batch->add_option("--out", bo.out, "Output directory")->required();
  batch->add_option("--parallel", bo.parallel, "Concurrent generations")->check(CLI::PositiveNumber);

  EvaluateOptions eo;
  auto* evaluate = app.add_subcommand("evaluate", "Score rated plans and write a report");
  evaluate->add_option("--plans", eo.plans, "Directory of .plan.json files")->required();
  evaluate->add_option("--ratings", eo.ratings, "Ratings CSV")->required();
  evaluate->add_option("--rubric", eo.rubric, "Rubric JSON (default: built-in)");
  evaluate->add_option("--out", eo.out, "Report directory")->required();

  ServeOptions so;
  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--stores", so.stores, "Directory of stores");
  serve->add_option("--ui", so.ui, "Static UI directory");
  serve->add_option("--host", so.host, "Listen host");
  serve->add_option("--port", so.port, "Listen port (0: any)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }
  io.overlap_set = overlap->count() > 0;
  logger()->set_level(spdlog::level::from_str(g.log_level));

  try {
    if (ingest->parsed()) return cmd_ingest(g, io);
    if (batch->parsed()) return cmd_batch(g, bo);
    if (evaluate->parsed()) return cmd_evaluate(g, eo);
    if (serve->parsed()) return cmd_serve(g, so);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::not_found ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
