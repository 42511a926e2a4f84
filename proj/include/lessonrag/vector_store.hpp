#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "lessonrag/corpus.hpp"
#include "lessonrag/embedding.hpp"

namespace lessonrag {

inline constexpr std::uint32_t kStoreFormatVersion = 1;

struct StoreManifest {
  std::string subject;
  std::string level;
  std::string edition;
  std::size_t dim = 0;
  std::size_t record_count = 0;
  std::size_t chunk_size = 0;
  std::size_t overlap = 0;
  std::string embedder_id;
  std::string created_at;  // ISO-8601 UTC
  std::uint32_t format_version = kStoreFormatVersion;

  bool operator==(const StoreManifest&) const = default;
};

/// Ingestion parameters recorded in the manifest.
struct IngestMeta {
  Level level = Level::S1;
  Edition edition = Edition::student;
  std::size_t chunk_size = 0;
  std::size_t overlap = 0;
  std::string embedder_id;
  std::string created_at;  // empty: stamped with the current time
};

struct ScoredChunk {
  Chunk chunk;
  double score = 0.0;
};

/// Immutable per-subject index: chunks plus a contiguous row-major float
/// matrix with precomputed inverse norms. Search is an exact linear scan.
class VectorStore {
 public:
  static VectorStore build(std::string subject, std::vector<Chunk> chunks,
                           const std::vector<EmbeddingVector>& vectors, const IngestMeta& meta);

  const StoreManifest& manifest() const noexcept { return manifest_; }
  const std::string& subject() const noexcept { return manifest_.subject; }
  std::size_t dim() const noexcept { return manifest_.dim; }
  std::size_t size() const noexcept { return chunks_.size(); }

  const std::vector<Chunk>& chunks() const noexcept { return chunks_; }
  const Chunk& chunk(std::size_t i) const { return chunks_.at(i); }
  std::span<const float> vector(std::size_t i) const;
  std::span<const float> matrix() const noexcept { return matrix_; }

  /// Up to k records with score >= min_sim, by descending score, ties by
  /// ascending chunk_id. Scores equal to 12 decimal places count as tied.
  std::vector<ScoredChunk> top_k(const EmbeddingVector& query, std::size_t k, double min_sim) const;

  /// Field-exact chunks and manifest, bit-exact vectors.
  bool operator==(const VectorStore& other) const;

 private:
  friend VectorStore load_store(const std::filesystem::path& dir);
  VectorStore() = default;
  void index();

  StoreManifest manifest_;
  std::vector<Chunk> chunks_;
  std::vector<float> matrix_;
  std::vector<double> inv_norms_;
};

VectorStore build_store(std::string subject, std::vector<Chunk> chunks,
                        const std::vector<EmbeddingVector>& vectors, const IngestMeta& meta);

/// Writes manifest.json, chunks.jsonl and vectors.bin into `dir` and returns
/// the hex SHA-256 content digest.
std::string persist_store(const VectorStore& store, const std::filesystem::path& dir);

/// Verifies format version, digest and record count before returning.
VectorStore load_store(const std::filesystem::path& dir);

std::vector<ScoredChunk> top_k(const VectorStore& store, const EmbeddingVector& query, std::size_t k,
                               double min_sim);

/// Serialized forms, exposed for tests and tools.
std::string serialize_vectors(const VectorStore& store);
std::string serialize_chunks(const VectorStore& store);

std::string utc_timestamp_now();

}  // namespace lessonrag
