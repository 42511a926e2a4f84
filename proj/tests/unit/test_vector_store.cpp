#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <random>

#include "fixtures.hpp"
#include "lessonrag/corpus.hpp"
#include "lessonrag/error.hpp"
#include "lessonrag/vector_store.hpp"
#include "oracles.hpp"

using namespace lessonrag;
namespace fs = std::filesystem;

namespace {

VectorStore tiny_store() {
  std::vector<Chunk> chunks{{"b", "S", "beta", 1, 1, 4}, {"a", "S", "alpha", 2, 2, 5}, {"c", "S", "gamma", 3, 4, 5}};
  std::vector<EmbeddingVector> v{EmbeddingVector({1, 0}), EmbeddingVector({1, 0}), EmbeddingVector({0, 1})};
  return build_store("S", chunks, v, IngestMeta{Level::S1, Edition::student, 100, 10, "test", "2024-01-01T00:00:00Z"});
}

std::string slurp(const fs::path& p) { return read_file(p); }

void spit(const fs::path& p, const std::string& s) { fixture::write_text(p, s); }

}  // namespace

TEST(Build, RejectsInconsistentInput) {
  const IngestMeta meta{Level::S1, Edition::student, 100, 10, "t", "x"};
  std::vector<Chunk> two{{"a", "S", "x", 1, 1, 1}, {"b", "S", "y", 1, 1, 1}};
  EXPECT_THROW(build_store("S", two, {EmbeddingVector({1, 0})}, meta), Error);
  EXPECT_THROW(build_store("S", two, {EmbeddingVector({1, 0}), EmbeddingVector({1, 0, 0})}, meta), Error);
  EXPECT_THROW(build_store("S", two, {EmbeddingVector({1, 0}), EmbeddingVector({0, 0})}, meta), Error);
  std::vector<Chunk> dup{{"a", "S", "x", 1, 1, 1}, {"a", "S", "y", 1, 1, 1}};
  EXPECT_THROW(build_store("S", dup, {EmbeddingVector({1, 0}), EmbeddingVector({0, 1})}, meta), Error);
  EXPECT_THROW(build_store("S", {}, {}, meta), Error);
}

TEST(TopK, TieBreakByChunkId) {
  const auto s = tiny_store();
  const auto r = s.top_k(EmbeddingVector({1, 0}), 3, -1.0);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].chunk.chunk_id, "a");
  EXPECT_EQ(r[1].chunk.chunk_id, "b");
  EXPECT_EQ(r[2].chunk.chunk_id, "c");
  EXPECT_DOUBLE_EQ(r[0].score, 1.0);
  EXPECT_DOUBLE_EQ(r[2].score, 0.0);
}

TEST(TopK, MinSimAndKBounds) {
  const auto s = tiny_store();
  EXPECT_EQ(s.top_k(EmbeddingVector({1, 0}), 10, 0.5).size(), 2u);
  EXPECT_EQ(s.top_k(EmbeddingVector({1, 0}), 1, 0.0).size(), 1u);
  EXPECT_TRUE(s.top_k(EmbeddingVector({-1, 0}), 5, 0.1).empty());
  EXPECT_THROW(s.top_k(EmbeddingVector({1, 0}), 0, 0.0), Error);
  EXPECT_THROW(s.top_k(EmbeddingVector({1, 0, 0}), 1, 0.0), Error);
  EXPECT_THROW(s.top_k(EmbeddingVector({0, 0}), 1, 0.0), Error);
}

TEST(TopKProperty, MatchesBruteForceOracle) {
  std::mt19937 rng(99);
  for (int iter = 0; iter < 30; ++iter) {
    const std::size_t n = fixture::uniform(rng, 1, 300);
    const std::size_t dim = fixture::uniform(rng, 1, 32);
    auto rs = fixture::random_store(rng, n, dim, n / 5);
    const auto q = fixture::random_vector(rng, dim);
    const std::size_t k = fixture::uniform(rng, 1, 20);
    const double min_sim = (rng() % 2) ? -1.0 : 0.1;
    const auto got = rs.store->top_k(EmbeddingVector(q), k, min_sim);
    const auto want = oracle::rank_all(rs.ids, rs.rows, q, k, min_sim);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      EXPECT_EQ(got[i].chunk.chunk_id, want[i].id);
      EXPECT_NEAR(got[i].score, want[i].score, 1e-9);
      if (i > 0) EXPECT_GE(got[i - 1].score, got[i].score);
    }
  }
}

TEST(Persist, RoundTripIsExact) {
  fixture::TempDir d;
  std::mt19937 rng(5);
  auto rs = fixture::random_store(rng, 50, 7, 5);
  const std::string digest = persist_store(*rs.store, d.path());
  EXPECT_EQ(digest.size(), 64u);
  const VectorStore loaded = load_store(d.path());
  EXPECT_TRUE(loaded == *rs.store);
  EXPECT_EQ(loaded.manifest(), rs.store->manifest());
  EXPECT_EQ(serialize_vectors(loaded), slurp(d / "vectors.bin"));

  const std::string vb = slurp(d / "vectors.bin");
  EXPECT_EQ(vb.substr(0, 4), "NLPG");
  EXPECT_EQ(vb.size(), 16u + 50u * 7u * 4u);
  const auto manifest = nlohmann::json::parse(slurp(d / "manifest.json"));
  EXPECT_EQ(manifest["digest"], digest);
  EXPECT_EQ(manifest["record_count"], 50);
  EXPECT_EQ(manifest["embedder_id"], "random/7");
}

TEST(Persist, EveryFileIsCoveredByTheDigest) {
  fixture::TempDir d;
  auto s = tiny_store();
  persist_store(s, d.path());
  for (const char* name : {"manifest.json", "chunks.jsonl", "vectors.bin"}) {
    const std::string original = slurp(d / name);
    for (std::size_t pos : {std::size_t{0}, original.size() / 2, original.size() - 2}) {
      std::string bad = original;
      bad[pos] = static_cast<char>(bad[pos] ^ 0x01);
      spit(d / name, bad);
      try {
        load_store(d.path());
        ADD_FAILURE() << name << " byte " << pos << " flip went unnoticed";
      } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::integrity) << e.what();
      }
    }
    spit(d / name, original);
  }
  EXPECT_NO_THROW(load_store(d.path()));
}

TEST(Persist, DataFileCorruptionReportsDigestMismatch) {
  fixture::TempDir d;
  persist_store(tiny_store(), d.path());
  std::string v = slurp(d / "vectors.bin");
  v[20] = static_cast<char>(v[20] ^ 0x40);
  spit(d / "vectors.bin", v);
  try {
    load_store(d.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("digest mismatch"), std::string::npos) << e.what();
  }
}

TEST(Persist, VersionMismatchAndMissingFiles) {
  fixture::TempDir d;
  persist_store(tiny_store(), d.path());
  std::string m = slurp(d / "manifest.json");
  const auto at = m.find("\"format_version\": 1");
  ASSERT_NE(at, std::string::npos);
  m.replace(at, 19, "\"format_version\": 2");
  spit(d / "manifest.json", m);
  try {
    load_store(d.path());
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("version mismatch"), std::string::npos) << e.what();
  }
  EXPECT_THROW(persist_store(tiny_store(), d.path()), Error);  // refuses to mix versions

  fixture::TempDir e;
  EXPECT_THROW(load_store(e.path()), Error);
  persist_store(tiny_store(), e.path());
  fs::remove(e / "vectors.bin");
  EXPECT_THROW(load_store(e.path()), Error);
}

TEST(Persist, OverwriteSameVersionSucceeds) {
  fixture::TempDir d;
  persist_store(tiny_store(), d.path());
  EXPECT_NO_THROW(persist_store(tiny_store(), d.path()));
  EXPECT_TRUE(load_store(d.path()) == tiny_store());
}

namespace {

std::string message_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Examples, BuildLoadAndSearchMessages) {
  const IngestMeta meta{Level::S1, Edition::student, 100, 10, "t", "x"};
  EXPECT_EQ(build_store("S", {{"a", "S", "x", 1, 1, 1}}, {EmbeddingVector({1, 0})}, meta).manifest().record_count, 1u);
  std::vector<Chunk> ten;
  std::vector<EmbeddingVector> nine;
  for (int i = 0; i < 10; ++i) ten.push_back({"c" + std::to_string(i), "S", "t", 1, 1, 1});
  for (int i = 0; i < 9; ++i) nine.emplace_back(std::vector<float>{1, 0});
  EXPECT_NE(message_of([&] { build_store("S", ten, nine, meta); }).find("length mismatch"), std::string::npos);

  fixture::TempDir empty;
  EXPECT_NE(message_of([&] { load_store(empty.path()); }).find("missing manifest"), std::string::npos);

  const auto s = tiny_store();
  const auto one = s.top_k(EmbeddingVector({0, 1}), 1, -1.0);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].chunk.chunk_id, "c");
  EXPECT_DOUBLE_EQ(one[0].score, 1.0);
  EXPECT_TRUE(s.top_k(EmbeddingVector({1, 1}), 3, 0.99).empty());
}

TEST(Persist, TwiceGivesIdenticalDigest) {
  fixture::TempDir a, b;
  EXPECT_EQ(persist_store(tiny_store(), a.path()), persist_store(tiny_store(), b.path()));
  EXPECT_EQ(persist_store(tiny_store(), a.path()), persist_store(load_store(a.path()), b.path()));
}

TEST(TopKProperty, SmallerKIsAPrefix) {
  std::mt19937 rng(41);
  for (int iter = 0; iter < 20; ++iter) {
    auto rs = fixture::random_store(rng, 500, 64, 50);
    const EmbeddingVector q(fixture::random_vector(rng, 64));
    const auto big = rs.store->top_k(q, 40, -1.0);
    for (std::size_t k : {1u, 5u, 10u, 39u}) {
      const auto small = rs.store->top_k(q, k, -1.0);
      ASSERT_EQ(small.size(), k);
      for (std::size_t i = 0; i < k; ++i) EXPECT_EQ(small[i].chunk.chunk_id, big[i].chunk.chunk_id);
    }
  }
}
