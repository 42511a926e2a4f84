#include <gtest/gtest.h>

#include <cmath>

#include "lessonrag/embedding.hpp"
#include "lessonrag/error.hpp"

using namespace lessonrag;

TEST(DeterministicEmbed, IsUnitLengthAndStable) {
  const auto a = deterministic_embed("The people of Kenya live in many places", 64);
  const auto b = deterministic_embed("The people of Kenya live in many places", 64);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.dim(), 64u);
  EXPECT_NEAR(a.norm(), 1.0, 1e-6);
  EXPECT_NE(a, deterministic_embed("A different sentence entirely about fractions", 64));
}

TEST(DeterministicEmbed, ShortAndSymbolOnlyInputsStillEmbed) {
  EXPECT_NEAR(deterministic_embed("fractions", 32).norm(), 1.0, 1e-6);
  EXPECT_NEAR(deterministic_embed("two words", 32).norm(), 1.0, 1e-6);
  EXPECT_NEAR(deterministic_embed("?!", 32).norm(), 1.0, 1e-6);
  EXPECT_THROW(deterministic_embed("", 32), Error);
  EXPECT_THROW(deterministic_embed("x", 4), Error);
}

TEST(DeterministicEmbed, SharedPhrasesRaiseSimilarity) {
  const auto q = deterministic_embed("working with fractions", 256);
  const auto on = deterministic_embed("working with fractions is fun. working with fractions daily.", 256);
  const auto off = deterministic_embed("colonial rule in uganda was resisted by many", 256);
  EXPECT_GT(cosine_similarity(q, on), cosine_similarity(q, off));
}

TEST(Cosine, KnownValuesAndErrors) {
  const EmbeddingVector a({1, 0}), b({0, 1}), c({2, 0}), d({-1, 0});
  EXPECT_DOUBLE_EQ(cosine_similarity(a, b), 0.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, c), 1.0);
  EXPECT_DOUBLE_EQ(cosine_similarity(a, d), -1.0);
  EXPECT_THROW(cosine_similarity(a, EmbeddingVector({1, 0, 0})), Error);
  EXPECT_THROW(cosine_similarity(a, EmbeddingVector({0, 0})), Error);
}

TEST(EmbeddingVector, RejectsNonFinite) {
  EXPECT_THROW(EmbeddingVector({1.0f, std::nanf("")}), Error);
  EXPECT_THROW(EmbeddingVector({INFINITY}), Error);
}

TEST(DeterministicEmbedder, BatchesInOrder) {
  DeterministicEmbedder e(48);
  const auto v = e.embed_texts({"one two three", "four five six"});
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0], deterministic_embed("one two three", 48));
  EXPECT_EQ(v[1], deterministic_embed("four five six", 48));
  EXPECT_EQ(e.id(), "offline-word3gram/48");
}

TEST(CheckBatch, CountAndDimensionMismatch) {
  std::vector<EmbeddingVector> v{EmbeddingVector({1, 0}), EmbeddingVector({1, 0, 0})};
  EXPECT_THROW(check_embedding_batch(v, 3), ProviderError);
  EXPECT_THROW(check_embedding_batch(v, 2), ProviderError);
  try {
    check_embedding_batch({EmbeddingVector({1, 0})}, 2);
  } catch (const ProviderError& e) {
    EXPECT_FALSE(e.retryable());
    EXPECT_NE(std::string(e.what()).find("count mismatch"), std::string::npos);
  }
}
