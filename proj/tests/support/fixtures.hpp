#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "lessonrag/corpus.hpp"
#include "lessonrag/generation.hpp"
#include "lessonrag/vector_store.hpp"

namespace fixture {

namespace fs = std::filesystem;

/// Unique scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const noexcept { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

void write_text(const fs::path& path, const std::string& content);

/// Uniform integer in [lo, hi] from raw engine output, so fixtures are the
/// same on every standard library.
int uniform(std::mt19937& rng, int lo, int hi);
/// Uniform real in [-1, 1) with 24 random bits.
float unit_float(std::mt19937& rng);

struct SubjectCorpus {
  std::string subject;
  std::string corpus_text;  // ===PAGE n=== format
  lessonrag::TableOfContents toc;
};

/// Three subjects with 16 TOC entries each. Every topic's pages repeat its
/// title; entry 4 of each subject is broad (28 pages, two subtopics) and
/// History entry 12 ("The people of Kenya") fills less than one page.
std::vector<SubjectCorpus> protocol_corpus();

inline constexpr const char* kThinTopic = "The people of Kenya";
inline constexpr std::size_t kFixtureDim = 256;

lessonrag::ChunkingOptions fixture_chunking();
/// k = 6, min_sim = 0.3; other values at their defaults.
lessonrag::GenerationConfig fixture_generation_config();

/// Builds and persists one store per subject under store_root/<subject>,
/// with toc.json beside it. Returns the registry of built stores.
lessonrag::StoreRegistry ingest_corpus(const std::vector<SubjectCorpus>& corpus, const fs::path& store_root);

/// In-memory store of random vectors. `duplicates` rows are copies of
/// earlier rows so score ties occur.
struct RandomStore {
  std::vector<std::string> ids;
  std::vector<std::vector<float>> rows;
  std::unique_ptr<lessonrag::VectorStore> store;
};

RandomStore random_store(std::mt19937& rng, std::size_t n, std::size_t dim, std::size_t duplicates);
std::vector<float> random_vector(std::mt19937& rng, std::size_t dim);

/// A well-formed plan in markup, with the given topic and objective.
std::string valid_plan_markup(const std::string& topic, const std::string& objective = "");

}  // namespace fixture
