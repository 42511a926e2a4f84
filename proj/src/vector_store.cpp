#include "lessonrag/vector_store.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <set>

#include "lessonrag/error.hpp"
#include "lessonrag/sha256.hpp"

namespace lessonrag {

namespace {

constexpr char kMagic[4] = {'N', 'L', 'P', 'G'};
constexpr std::size_t kHeaderSize = 16;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

nlohmann::ordered_json manifest_json(const StoreManifest& m) {
  nlohmann::ordered_json j;
  j["format_version"] = m.format_version;
  j["subject"] = m.subject;
  j["level"] = m.level;
  j["edition"] = m.edition;
  j["dim"] = m.dim;
  j["record_count"] = m.record_count;
  j["chunk_size"] = m.chunk_size;
  j["overlap"] = m.overlap;
  j["embedder_id"] = m.embedder_id;
  j["created_at"] = m.created_at;
  return j;
}

constexpr std::string_view kDigestKey = "\"digest\": \"";
constexpr std::size_t kDigestHexLen = 64;

// The digest covers the manifest file as written, with its own value replaced
// by zeros, followed by chunks.jsonl and vectors.bin.
std::string compute_digest(std::string_view manifest_text, std::string_view chunks, std::string_view vectors) {
  const auto key = manifest_text.rfind(kDigestKey);
  if (key == std::string_view::npos || key + kDigestKey.size() + kDigestHexLen > manifest_text.size()) {
    throw Error(ErrorKind::integrity, "manifest has no digest field");
  }
  const std::size_t value = key + kDigestKey.size();
  Sha256 h;
  h.update(manifest_text.substr(0, value));
  h.update(std::string(kDigestHexLen, '0'));
  h.update(manifest_text.substr(value + kDigestHexLen));
  h.update(chunks);
  h.update(vectors);
  return h.hex_digest();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::io, "write failed for '" + path.string() + "'");
}

// Orders candidates best-first: higher score, then smaller chunk_id.
// Scores that agree to 12 decimal places rank as ties, so rounding noise
// between mathematically equal cosines cannot override the chunk_id order.
constexpr double kTieScale = 1e12;

struct Candidate {
  double score;
  std::int64_t key;
  std::size_t index;
};

}  // namespace

std::string utc_timestamp_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

VectorStore VectorStore::build(std::string subject, std::vector<Chunk> chunks,
                               const std::vector<EmbeddingVector>& vectors, const IngestMeta& meta) {
  if (chunks.size() != vectors.size()) {
    throw Error(ErrorKind::invalid_argument, "length mismatch: " + std::to_string(chunks.size()) +
                                                 " chunks vs " + std::to_string(vectors.size()) + " vectors");
  }
  if (chunks.empty()) throw Error(ErrorKind::invalid_argument, "a store needs at least one record");
  const std::size_t dim = vectors.front().dim();
  if (dim == 0) throw Error(ErrorKind::invalid_argument, "zero-dimensional vectors");

  std::set<std::string_view> ids;
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    if (vectors[i].dim() != dim) {
      throw Error(ErrorKind::invalid_argument, "mixed dims: record " + std::to_string(i) + " has dim " +
                                                   std::to_string(vectors[i].dim()) + ", expected " +
                                                   std::to_string(dim));
    }
    if (vectors[i].is_zero()) {
      throw Error(ErrorKind::invalid_argument, "zero vector for chunk '" + chunks[i].chunk_id + "'");
    }
    if (!ids.insert(chunks[i].chunk_id).second) {
      throw Error(ErrorKind::invalid_argument, "duplicate chunk_id '" + chunks[i].chunk_id + "'");
    }
  }

  VectorStore s;
  s.manifest_.subject = std::move(subject);
  s.manifest_.level = std::string(to_string(meta.level));
  s.manifest_.edition = std::string(to_string(meta.edition));
  s.manifest_.dim = dim;
  s.manifest_.record_count = chunks.size();
  s.manifest_.chunk_size = meta.chunk_size;
  s.manifest_.overlap = meta.overlap;
  s.manifest_.embedder_id = meta.embedder_id;
  s.manifest_.created_at = meta.created_at.empty() ? utc_timestamp_now() : meta.created_at;
  s.chunks_ = std::move(chunks);
  s.matrix_.reserve(s.chunks_.size() * dim);
  for (const auto& v : vectors) s.matrix_.insert(s.matrix_.end(), v.values().begin(), v.values().end());
  s.index();
  return s;
}

void VectorStore::index() {
  const std::size_t n = chunks_.size();
  const std::size_t dim = manifest_.dim;
  inv_norms_.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const float* row = matrix_.data() + r * dim;
    double s = 0.0;
    for (std::size_t i = 0; i < dim; ++i) s += static_cast<double>(row[i]) * row[i];
    if (s == 0.0) throw Error(ErrorKind::integrity, "zero vector for chunk '" + chunks_[r].chunk_id + "'");
    inv_norms_[r] = 1.0 / std::sqrt(s);
  }
}

std::span<const float> VectorStore::vector(std::size_t i) const {
  if (i >= chunks_.size()) throw Error(ErrorKind::invalid_argument, "record index out of range");
  return std::span<const float>(matrix_).subspan(i * manifest_.dim, manifest_.dim);
}

std::vector<ScoredChunk> VectorStore::top_k(const EmbeddingVector& query, std::size_t k, double min_sim) const {
  if (k == 0) throw Error(ErrorKind::invalid_argument, "k must be >= 1");
  const std::size_t dim = manifest_.dim;
  if (query.dim() != dim) {
    throw Error(ErrorKind::invalid_argument, "dimension mismatch: query " + std::to_string(query.dim()) +
                                                 ", store " + std::to_string(dim));
  }
  const double qnorm = query.norm();
  if (qnorm == 0.0) throw Error(ErrorKind::invalid_argument, "query is a zero vector");
  const double inv_q = 1.0 / qnorm;

  auto better = [this](const Candidate& a, const Candidate& b) {
    if (a.key != b.key) return a.key > b.key;
    return chunks_[a.index].chunk_id < chunks_[b.index].chunk_id;
  };

  // Bounded heap whose front is the worst retained candidate.
  std::vector<Candidate> heap;
  heap.reserve(std::min(k, chunks_.size()) + 1);
  const float* q = query.values().data();
  const float* row = matrix_.data();
  for (std::size_t r = 0; r < chunks_.size(); ++r, row += dim) {
    double dot = 0.0;
    for (std::size_t i = 0; i < dim; ++i) dot += static_cast<double>(q[i]) * row[i];
    const double score = std::clamp(dot * inv_q * inv_norms_[r], -1.0, 1.0);
    if (score < min_sim) continue;
    const Candidate c{score, std::llround(score * kTieScale), r};
    if (heap.size() < k) {
      heap.push_back(c);
      std::push_heap(heap.begin(), heap.end(), better);
    } else if (better(c, heap.front())) {
      std::pop_heap(heap.begin(), heap.end(), better);
      heap.back() = c;
      std::push_heap(heap.begin(), heap.end(), better);
    }
  }
  std::sort_heap(heap.begin(), heap.end(), better);

  std::vector<ScoredChunk> out;
  out.reserve(heap.size());
  for (const auto& c : heap) out.push_back(ScoredChunk{chunks_[c.index], c.score});
  return out;
}

bool VectorStore::operator==(const VectorStore& other) const {
  if (!(manifest_ == other.manifest_) || !(chunks_ == other.chunks_)) return false;
  if (matrix_.size() != other.matrix_.size()) return false;
  return std::memcmp(matrix_.data(), other.matrix_.data(), matrix_.size() * sizeof(float)) == 0;
}

VectorStore build_store(std::string subject, std::vector<Chunk> chunks,
                        const std::vector<EmbeddingVector>& vectors, const IngestMeta& meta) {
  return VectorStore::build(std::move(subject), std::move(chunks), vectors, meta);
}

std::vector<ScoredChunk> top_k(const VectorStore& store, const EmbeddingVector& query, std::size_t k,
                               double min_sim) {
  return store.top_k(query, k, min_sim);
}

std::string serialize_vectors(const VectorStore& store) {
  const auto m = store.matrix();
  std::string out;
  out.reserve(kHeaderSize + m.size() * 4);
  out.append(kMagic, 4);
  put_u32(out, kStoreFormatVersion);
  put_u32(out, static_cast<std::uint32_t>(store.dim()));
  put_u32(out, static_cast<std::uint32_t>(store.size()));
  for (float f : m) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

std::string serialize_chunks(const VectorStore& store) {
  std::string out;
  for (const auto& c : store.chunks()) {
    out += to_json(c).dump();
    out.push_back('\n');
  }
  return out;
}

std::string persist_store(const VectorStore& store, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, "cannot create '" + dir.string() + "': " + ec.message());

  const fs::path manifest_path = dir / "manifest.json";
  if (fs::exists(manifest_path)) {
    std::uint32_t existing = 0;
    try {
      existing = nlohmann::json::parse(read_file(manifest_path)).at("format_version").get<std::uint32_t>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorKind::integrity, "existing manifest in '" + dir.string() + "' is unreadable");
    }
    if (existing != kStoreFormatVersion) {
      throw Error(ErrorKind::integrity, "existing store in '" + dir.string() + "' has format_version " +
                                            std::to_string(existing));
    }
  }

  const std::string chunks = serialize_chunks(store);
  const std::string vectors = serialize_vectors(store);
  auto mj = manifest_json(store.manifest());
  mj["digest"] = std::string(kDigestHexLen, '0');
  std::string manifest = mj.dump(2) + "\n";
  const std::string digest = compute_digest(manifest, chunks, vectors);
  manifest.replace(manifest.rfind(kDigestKey) + kDigestKey.size(), kDigestHexLen, digest);

  write_file(dir / "chunks.jsonl", chunks);
  write_file(dir / "vectors.bin", vectors);
  write_file(manifest_path, manifest);
  return digest;
}

VectorStore load_store(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw Error(ErrorKind::io, "missing manifest in '" + dir.string() + "'");
  for (const char* name : {"chunks.jsonl", "vectors.bin"}) {
    if (!fs::exists(dir / name)) {
      throw Error(ErrorKind::io, std::string("missing file ") + name + " in '" + dir.string() + "'");
    }
  }

  VectorStore s;
  std::string stored_digest;
  const std::string manifest_text = read_file(manifest_path);
  try {
    const auto j = nlohmann::json::parse(manifest_text);
    s.manifest_.format_version = j.at("format_version").get<std::uint32_t>();
    if (s.manifest_.format_version != kStoreFormatVersion) {
      throw Error(ErrorKind::integrity, "version mismatch: store has format_version " +
                                            std::to_string(s.manifest_.format_version));
    }
    s.manifest_.subject = j.at("subject").get<std::string>();
    s.manifest_.level = j.at("level").get<std::string>();
    s.manifest_.edition = j.at("edition").get<std::string>();
    s.manifest_.dim = j.at("dim").get<std::size_t>();
    s.manifest_.record_count = j.at("record_count").get<std::size_t>();
    s.manifest_.chunk_size = j.at("chunk_size").get<std::size_t>();
    s.manifest_.overlap = j.at("overlap").get<std::size_t>();
    s.manifest_.embedder_id = j.at("embedder_id").get<std::string>();
    s.manifest_.created_at = j.at("created_at").get<std::string>();
    stored_digest = j.at("digest").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::integrity, std::string("malformed manifest: ") + e.what());
  }

  const std::string chunks = read_file(dir / "chunks.jsonl");
  const std::string vectors = read_file(dir / "vectors.bin");
  if (compute_digest(manifest_text, chunks, vectors) != stored_digest) {
    throw Error(ErrorKind::integrity, "digest mismatch in '" + dir.string() + "'");
  }

  if (vectors.size() < kHeaderSize || std::memcmp(vectors.data(), kMagic, 4) != 0) {
    throw Error(ErrorKind::integrity, "vectors.bin: bad header");
  }
  const std::uint32_t version = get_u32(vectors, 4);
  const std::uint32_t dim = get_u32(vectors, 8);
  const std::uint32_t count = get_u32(vectors, 12);
  if (version != kStoreFormatVersion) throw Error(ErrorKind::integrity, "version mismatch in vectors.bin");
  if (dim != s.manifest_.dim || dim == 0) throw Error(ErrorKind::integrity, "vectors.bin: dim disagrees with manifest");
  if (count != s.manifest_.record_count) {
    throw Error(ErrorKind::integrity, "record-count mismatch: vectors.bin has " + std::to_string(count) +
                                          ", manifest says " + std::to_string(s.manifest_.record_count));
  }
  if (vectors.size() != kHeaderSize + static_cast<std::size_t>(count) * dim * 4) {
    throw Error(ErrorKind::integrity, "vectors.bin: size does not match header");
  }
  s.matrix_.resize(static_cast<std::size_t>(count) * dim);
  for (std::size_t i = 0; i < s.matrix_.size(); ++i) {
    s.matrix_[i] = std::bit_cast<float>(get_u32(vectors, kHeaderSize + 4 * i));
    if (!std::isfinite(s.matrix_[i])) throw Error(ErrorKind::integrity, "vectors.bin: non-finite value");
  }

  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::set<std::string> ids;
  while (pos < chunks.size()) {
    std::size_t eol = chunks.find('\n', pos);
    if (eol == std::string::npos) eol = chunks.size();
    ++line_no;
    try {
      Chunk c = chunk_from_json(nlohmann::json::parse(std::string_view(chunks).substr(pos, eol - pos)));
      if (!ids.insert(c.chunk_id).second) {
        throw Error(ErrorKind::integrity, "duplicate chunk_id '" + c.chunk_id + "'");
      }
      s.chunks_.push_back(std::move(c));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::integrity, "chunks.jsonl line " + std::to_string(line_no) + ": " + e.what());
    }
    pos = eol + 1;
  }
  if (s.chunks_.size() != s.manifest_.record_count) {
    throw Error(ErrorKind::integrity, "record-count mismatch: chunks.jsonl has " +
                                          std::to_string(s.chunks_.size()) + " records, manifest says " +
                                          std::to_string(s.manifest_.record_count));
  }
  s.index();
  return s;
}

}  // namespace lessonrag
