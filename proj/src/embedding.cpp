#include "lessonrag/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "lessonrag/error.hpp"
#include "lessonrag/text.hpp"

namespace lessonrag {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = kFnvOffset) noexcept {
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= kFnvPrime;
  }
  return h;
}

}  // namespace

EmbeddingVector::EmbeddingVector(std::vector<float> values) : values_(std::move(values)) {
  for (float v : values_) {
    if (!std::isfinite(v)) throw Error(ErrorKind::invalid_argument, "embedding contains a non-finite value");
  }
}

double EmbeddingVector::norm() const noexcept {
  double s = 0.0;
  for (float v : values_) s += static_cast<double>(v) * v;
  return std::sqrt(s);
}

bool EmbeddingVector::is_zero() const noexcept {
  return std::all_of(values_.begin(), values_.end(), [](float v) { return v == 0.0f; });
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorKind::invalid_argument, "dimension mismatch: " + std::to_string(a.dim()) + " vs " +
                                                 std::to_string(b.dim()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    const double y = bv[i];
    dot += x * y;
    na += x * x;
    nb += y * y;
  }
  if (na == 0.0 || nb == 0.0) throw Error(ErrorKind::invalid_argument, "cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

EmbeddingVector deterministic_embed(std::string_view input, std::size_t dim) {
  if (dim < 8) throw Error(ErrorKind::invalid_argument, "offline embedding dim must be >= 8");
  if (input.empty()) throw Error(ErrorKind::invalid_argument, "cannot embed empty text");

  std::vector<double> acc(dim, 0.0);
  auto add = [&](std::uint64_t h) {
    acc[h % dim] += ((h >> 32) & 1u) ? -1.0 : 1.0;
  };

  const auto tokens = text::words(input);
  if (tokens.empty()) {
    add(fnv1a(input));
  } else if (tokens.size() < 3) {
    std::string gram = tokens[0];
    for (std::size_t i = 1; i < tokens.size(); ++i) gram += ' ' + tokens[i];
    add(fnv1a(gram));
  } else {
    for (std::size_t i = 0; i + 2 < tokens.size(); ++i) {
      std::uint64_t h = fnv1a(tokens[i]);
      h = fnv1a(" ", h);
      h = fnv1a(tokens[i + 1], h);
      h = fnv1a(" ", h);
      h = fnv1a(tokens[i + 2], h);
      add(h);
    }
  }

  double norm2 = 0.0;
  for (double v : acc) norm2 += v * v;
  if (norm2 == 0.0) {
    // Every gram cancelled out; fall back to the hash of the raw text so the
    // result stays a unit vector.
    std::fill(acc.begin(), acc.end(), 0.0);
    add(fnv1a(input));
    norm2 = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  std::vector<float> out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = static_cast<float>(acc[i] * inv);
  return EmbeddingVector(std::move(out));
}

DeterministicEmbedder::DeterministicEmbedder(std::size_t dim) : dim_(dim) {
  if (dim < 8) throw Error(ErrorKind::invalid_argument, "offline embedding dim must be >= 8");
}

std::vector<EmbeddingVector> DeterministicEmbedder::embed_texts(const std::vector<std::string>& texts) {
  if (texts.empty()) throw Error(ErrorKind::invalid_argument, "embed_texts: no texts");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(deterministic_embed(t, dim_));
  return out;
}

std::string DeterministicEmbedder::id() const { return "offline-word3gram/" + std::to_string(dim_); }

void check_embedding_batch(const std::vector<EmbeddingVector>& vectors, std::size_t expected) {
  if (vectors.size() != expected) {
    throw ProviderError("count mismatch: expected " + std::to_string(expected) + " vectors, got " +
                            std::to_string(vectors.size()),
                        false);
  }
  for (const auto& v : vectors) {
    if (v.dim() != vectors.front().dim()) throw ProviderError("dimension mismatch across batch", false);
    if (v.dim() == 0) throw ProviderError("provider returned an empty vector", false);
  }
}

}  // namespace lessonrag
