#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace lessonrag {

/// Fixed-dimension embedding. All values are finite; construction checks it.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<float> values);

  std::size_t dim() const noexcept { return values_.size(); }
  std::span<const float> values() const noexcept { return values_; }
  float operator[](std::size_t i) const noexcept { return values_[i]; }

  double norm() const noexcept;
  bool is_zero() const noexcept;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<float> values_;
};

/// (a.b) / (|a||b|) in double precision, clamped to [-1, 1].
/// Throws on dimension mismatch or a zero vector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

inline constexpr std::size_t kDefaultOfflineDim = 256;

/// Offline embedder: each run of three consecutive word tokens is hashed
/// (FNV-1a 64) to a bucket in [0, dim) and adds +1 or -1 there depending on
/// hash parity; the result is L2-normalized. Pure function of (text, dim).
EmbeddingVector deterministic_embed(std::string_view text, std::size_t dim = kDefaultOfflineDim);

/// Anything that turns texts into vectors: a remote provider client or the
/// offline hasher.
class Embedder {
 public:
  virtual ~Embedder() = default;

  /// One vector per input, in input order, all of the same dimension.
  virtual std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts) = 0;

  /// Recorded in store manifests, e.g. "offline-word3gram/256".
  virtual std::string id() const = 0;

  EmbeddingVector embed(const std::string& text) { return embed_texts({text}).front(); }
};

class DeterministicEmbedder final : public Embedder {
 public:
  explicit DeterministicEmbedder(std::size_t dim = kDefaultOfflineDim);

  std::vector<EmbeddingVector> embed_texts(const std::vector<std::string>& texts) override;
  std::string id() const override;
  std::size_t dim() const noexcept { return dim_; }

 private:
  std::size_t dim_;
};

/// Throws unless every vector has the same dimension and `expected`
/// vectors are present.
void check_embedding_batch(const std::vector<EmbeddingVector>& vectors, std::size_t expected);

}  // namespace lessonrag
