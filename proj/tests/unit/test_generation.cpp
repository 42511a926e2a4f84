#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "lessonrag/corpus.hpp"
#include "lessonrag/error.hpp"
#include "lessonrag/generation.hpp"
#include "lessonrag/mock_llm.hpp"

using namespace lessonrag;

namespace {

class GenerationFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fixture::TempDir();
    stores_ = new StoreRegistry(fixture::ingest_corpus(fixture::protocol_corpus(), dir_->path()));
  }
  static void TearDownTestSuite() {
    delete stores_;
    delete dir_;
  }

  static LessonRequest request(const std::string& subject, const std::string& topic) {
    return LessonRequest{Level::S1, subject, 1, ClassSize::over_60, topic};
  }
  static Providers mock() {
    return {std::make_shared<DeterministicEmbedder>(fixture::kFixtureDim), std::make_shared<TemplateMockLlm>()};
  }

  static fixture::TempDir* dir_;
  static StoreRegistry* stores_;
};

fixture::TempDir* GenerationFixture::dir_ = nullptr;
StoreRegistry* GenerationFixture::stores_ = nullptr;

RetrievalEvidence evidence_of(std::vector<std::pair<std::string, std::pair<int, int>>> items) {
  RetrievalEvidence ev;
  std::set<int> distinct;
  for (auto& [text, pages] : items) {
    ev.scored_chunks.push_back({Chunk{"id", "History", text, pages.first, pages.second, text.size()}, 0.9});
    ev.total_source_chars += text.size();
    for (int p = pages.first; p <= pages.second; ++p) distinct.insert(p);
  }
  ev.distinct_pages = distinct.size();
  return ev;
}

}  // namespace

TEST(ClassSize, ParsesAllForms) {
  EXPECT_EQ(parse_class_size(">60"), ClassSize::over_60);
  EXPECT_EQ(parse_class_size("> 60"), ClassSize::over_60);
  EXPECT_EQ(parse_class_size("30-60"), ClassSize::from_30_to_60);
  EXPECT_EQ(parse_class_size("<30"), ClassSize::under_30);
  EXPECT_THROW(parse_class_size("100"), ValidationError);
}

TEST(Request, FromJsonValidatesFields) {
  const auto r = request_from_json(
      {{"level", "S1"}, {"subject", "History"}, {"periods", 2}, {"class_size", ">60"}, {"topic", "  Kenya "}});
  EXPECT_EQ(r.periods, 2);
  EXPECT_EQ(r.topic, "Kenya");
  auto field_of = [](const nlohmann::json& j) {
    try {
      request_from_json(j);
    } catch (const ValidationError& e) {
      return e.field();
    }
    return std::string("none");
  };
  const nlohmann::json ok = {{"level", "S1"}, {"subject", "H"}, {"periods", 1}, {"class_size", ">60"}, {"topic", "t"}};
  auto with = [&](const char* k, nlohmann::json v) {
    auto j = ok;
    j[k] = v;
    return j;
  };
  EXPECT_EQ(field_of(ok), "none");
  EXPECT_EQ(field_of(with("topic", "   ")), "topic");
  EXPECT_EQ(field_of(with("periods", 0)), "periods");
  EXPECT_EQ(field_of(with("periods", "x")), "periods");
  EXPECT_EQ(field_of(with("class_size", "huge")), "class_size");
  EXPECT_EQ(field_of(with("level", "S9")), "level");
  EXPECT_EQ(field_of(with("subject", 3)), "subject");
  EXPECT_EQ(field_of(nlohmann::json::array()), "body");
}

TEST(Template, BuiltInMatchesShippedFile) {
  const std::string file = read_file(std::string(LESSONRAG_SOURCE_DIR) + "/templates/lesson_prompt.txt");
  EXPECT_EQ(file, default_prompt_template());
}

TEST(Prompt, ContainsInstructionContextAndCitations) {
  LessonRequest r{Level::S1, "History", 1, ClassSize::over_60, "The people of Kenya"};
  const auto ev = evidence_of({{"Kenya has many peoples.", {14, 14}}, {"They farm and trade.", {10, 11}}});
  const std::string p = assemble_prompt(r, ev, default_prompt_template());
  EXPECT_NE(p.find(kContextOnlyInstruction), std::string::npos);
  EXPECT_NE(p.find("[Source 1, p. 14]\nKenya has many peoples."), std::string::npos);
  EXPECT_NE(p.find("[Source 2, pp. 10\xE2\x80\x93" "11]"), std::string::npos);
  EXPECT_NE(p.find("Requested topic: The people of Kenya"), std::string::npos);
  EXPECT_NE(p.find("Requested class size: >60"), std::string::npos);
  EXPECT_NE(p.find("## PROCEDURE"), std::string::npos);
  EXPECT_EQ(p.find("{{"), std::string::npos);
}

TEST(Prompt, EmptyEvidenceSaysSoAndSubstitutionIsSinglePass) {
  LessonRequest r{Level::S2, "ICT", 3, ClassSize::under_30, "{{context}}"};
  const std::string p = assemble_prompt(r, RetrievalEvidence{}, default_prompt_template());
  EXPECT_NE(p.find(kNoContextBlock), std::string::npos);
  EXPECT_NE(p.find("Requested topic: {{context}}"), std::string::npos);
  EXPECT_NE(p.find("Requested periods: 3"), std::string::npos);
}

TEST(Prompt, MinimalTemplateGainsInstructionAndSchema) {
  LessonRequest r{Level::S1, "History", 1, ClassSize::over_60, "Kenya"};
  const std::string p = assemble_prompt(r, RetrievalEvidence{}, "{{topic}} {{level}} {{periods}} {{class_size}} {{context}}");
  EXPECT_EQ(p.rfind(kContextOnlyInstruction, 0), 0u);
  EXPECT_NE(p.find(output_schema_block()), std::string::npos);
  EXPECT_THROW(assemble_prompt(r, RetrievalEvidence{}, "{{topic}} {{level}} {{periods}} {{class_size}}"), Error);
}

TEST(Citation, SingleAndRange) {
  EXPECT_EQ(page_citation(14, 14), "p. 14");
  EXPECT_EQ(page_citation(10, 11), "pp. 10\xE2\x80\x93" "11");
}

TEST(Confidence, ThresholdIsStrict) {
  const auto thin = evidence_of({{std::string(1799, 'x'), {1, 1}}});
  EXPECT_TRUE(compute_confidence(thin, 1800, 1.0).low_evidence);
  const auto full = evidence_of({{std::string(1800, 'x'), {1, 1}}});
  const auto c = compute_confidence(full, 1800, 1.0);
  EXPECT_FALSE(c.low_evidence);
  EXPECT_DOUBLE_EQ(c.page_equivalents, 1.0);
  EXPECT_TRUE(compute_confidence(RetrievalEvidence{}, 1800, 1.0).low_evidence);
  EXPECT_THROW(compute_confidence(full, 0, 1.0), Error);
}

TEST(Retry, MalformedThenValid) {
  ScriptedLlm llm({"no headings here", fixture::valid_plan_markup("Kenya")});
  const auto g = generate_plan(llm, "prompt", 2);
  EXPECT_EQ(g.retries_used, 1);
  EXPECT_EQ(llm.calls(), 2u);
  EXPECT_TRUE(validate_format(g.plan).valid);
}

TEST(Retry, StructurallyInvalidCountsAsMalformed) {
  const std::string missing_wrap_up =
      "## GENERAL INFORMATION\nTopic: a\nSubject: b\nLevel: S1\nClass Size: >60\nPeriods: 1\nDate: _\n"
      "## PREPARATION\nLearning Objective: x\nMaterials: y\nReferences: z\n## PROCEDURE\n"
      "- [introduction|5] teacher: a | learners: b\n";
  ScriptedLlm llm({missing_wrap_up, fixture::valid_plan_markup("Kenya")});
  EXPECT_EQ(generate_plan(llm, "p", 1).retries_used, 1);
}

TEST(Retry, AlwaysMalformedFailsAfterMaxRetriesPlusOne) {
  for (int max_retries : {0, 1, 2, 4}) {
    ScriptedLlm llm({"garbage"});
    try {
      generate_plan(llm, "prompt", max_retries);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::format);
    }
    EXPECT_EQ(llm.calls(), static_cast<std::size_t>(max_retries + 1));
  }
}

TEST(Retry, ProviderErrorsPropagateImmediately) {
  ScriptedLlm llm({std::string(ScriptedLlm::kFail)});
  EXPECT_THROW(generate_plan(llm, "p", 3), ProviderError);
  EXPECT_EQ(llm.calls(), 1u);
}

TEST(Plausibility, FlagsOffTopicPlans) {
  const auto ev = evidence_of({{"The people of Kenya live in many regions of Kenya.", {61, 61}}});
  const auto on = parse_lesson_plan(fixture::valid_plan_markup("The people of Kenya"));
  EXPECT_FALSE(plausibility_check("The people of Kenya", ev, on, 0.2).suspicious);
  const auto off = parse_lesson_plan(fixture::valid_plan_markup("Mukasa", "Learners should describe Mukasa"));
  const auto v = plausibility_check("The people of Kenya", ev, off, 0.2);
  EXPECT_TRUE(v.suspicious);
  EXPECT_DOUBLE_EQ(v.topic_plan_overlap, 0.0);
  EXPECT_DOUBLE_EQ(v.topic_evidence_overlap, 1.0);
}

TEST(Plausibility, StopWordOnlyTopicFallsBackToAllWords) {
  const auto ev = evidence_of({{"it is what it is", {1, 1}}});
  const auto plan = parse_lesson_plan(fixture::valid_plan_markup("What it is"));
  EXPECT_FALSE(plausibility_check("What it is", ev, plan, 0.2).suspicious);
}

TEST_F(GenerationFixture, RetrievalStaysInTheRequestedStore) {
  DeterministicEmbedder e(fixture::kFixtureDim);
  const auto store = stores_->find("Mathematics");
  ASSERT_TRUE(store);
  const auto ev = retrieve_context(*store, request("Mathematics", "Working with fractions"), 6, 0.3, e);
  ASSERT_EQ(ev.scored_chunks.size(), 6u);
  for (const auto& sc : ev.scored_chunks) EXPECT_EQ(sc.chunk.subject, "Mathematics");
  EXPECT_EQ(ev.query_vector_digest.size(), 64u);
  EXPECT_THROW(retrieve_context(*store, request("History", "x y z"), 6, 0.3, e), Error);
}

TEST_F(GenerationFixture, EndToEndWithMockProviders) {
  const auto res = run_generation(*stores_, request("History", "Colonial rule in Uganda"), mock(),
                                  fixture::fixture_generation_config());
  EXPECT_TRUE(validate_format(res.plan).valid);
  EXPECT_EQ(res.plan.general.topic, "Colonial rule in Uganda");
  EXPECT_TRUE(res.warnings.empty());
  EXPECT_EQ(res.retries_used, 0);
  EXPECT_FALSE(res.confidence.low_evidence);
  EXPECT_NE(res.plan.preparation.references.find("p"), std::string::npos);
}

TEST_F(GenerationFixture, ThinTopicIsLowEvidence) {
  const auto res = run_generation(*stores_, request("History", fixture::kThinTopic), mock(),
                                  fixture::fixture_generation_config());
  EXPECT_TRUE(res.confidence.low_evidence);
  EXPECT_LT(res.confidence.page_equivalents, 1.0);
  EXPECT_EQ(res.warnings, std::vector<std::string>{std::string(kLowEvidenceWarning)});
}

TEST_F(GenerationFixture, OffTopicPlanIsTopicMismatch) {
  auto llm = std::make_shared<ScriptedLlm>(
      std::vector<std::string>{fixture::valid_plan_markup("Mukasa", "Learners should describe Mukasa")});
  Providers p{std::make_shared<DeterministicEmbedder>(fixture::kFixtureDim), llm};
  const auto res = run_generation(*stores_, request("History", "Colonial rule in Uganda"), p,
                                  fixture::fixture_generation_config());
  EXPECT_EQ(res.warnings, std::vector<std::string>{std::string(kTopicMismatchWarning)});
}

TEST_F(GenerationFixture, MultiPeriodOutputIsTruncated) {
  auto req = request("ICT", "Computer care and safety");
  req.periods = 3;
  const auto res = run_generation(*stores_, req, mock(), fixture::fixture_generation_config());
  EXPECT_NE(res.raw_output.find("PERIOD 3"), std::string::npos);
  EXPECT_TRUE(res.plan.extra_periods.empty());
}

TEST_F(GenerationFixture, ErrorsCarryTheirStage) {
  auto stage_of = [&](const LessonRequest& r, const Providers& p) {
    try {
      run_generation(*stores_, r, p, fixture::fixture_generation_config());
    } catch (const PipelineError& e) {
      return std::pair{e.stage(), e.kind()};
    }
    return std::pair{std::string("none"), ErrorKind::internal};
  };
  EXPECT_EQ(stage_of(request("Physics", "Forces and motion"), mock()),
            std::pair(std::string("retrieve"), ErrorKind::not_found));
  EXPECT_EQ(stage_of(request("History", " "), mock()), std::pair(std::string("validate"), ErrorKind::validation));
  Providers bad{std::make_shared<DeterministicEmbedder>(fixture::kFixtureDim),
                std::make_shared<ScriptedLlm>(std::vector<std::string>{"junk"})};
  EXPECT_EQ(stage_of(request("History", "Road to independence"), bad),
            std::pair(std::string("generate"), ErrorKind::format));
  Providers failing{std::make_shared<DeterministicEmbedder>(fixture::kFixtureDim),
                    std::make_shared<ScriptedLlm>(std::vector<std::string>{std::string(ScriptedLlm::kFail)})};
  EXPECT_EQ(stage_of(request("History", "Road to independence"), failing),
            std::pair(std::string("generate"), ErrorKind::provider));
}

TEST(MockLlm, OutputIsDeterministicAndValid) {
  LessonRequest r{Level::S1, "History", 1, ClassSize::over_60, "Trade | routes"};
  const auto ev = evidence_of({{"Caravans | crossed\nthe land.", {3, 4}}});
  const std::string prompt = assemble_prompt(r, ev, default_prompt_template());
  TemplateMockLlm llm;
  const std::string a = llm.complete(prompt, 100);
  EXPECT_EQ(a, llm.complete(prompt, 100));
  const auto plan = parse_lesson_plan(a);
  EXPECT_TRUE(validate_format(plan).valid);
  EXPECT_EQ(plan.preparation.references, "pp. 3\xE2\x80\x93" "4");
  EXPECT_EQ(plan.general.class_size, ">60");
}

TEST(Confidence, DirectArithmetic) {
  const auto three = evidence_of({{std::string(600, 'a'), {1, 1}}, {std::string(600, 'b'), {2, 2}},
                                  {std::string(600, 'c'), {2, 3}}});
  const auto c = compute_confidence(three, 1800, 1.0);
  EXPECT_EQ(c.chunk_count, 3u);
  EXPECT_EQ(c.distinct_pages, 3u);
  EXPECT_DOUBLE_EQ(c.page_equivalents, 1.0);
  EXPECT_FALSE(c.low_evidence);
  const auto half = compute_confidence(evidence_of({{std::string(900, 'a'), {7, 7}}}), 1800, 1.0);
  EXPECT_DOUBLE_EQ(half.page_equivalents, 0.5);
  EXPECT_TRUE(half.low_evidence);
  const auto none = compute_confidence(RetrievalEvidence{}, 1800, 1.0);
  EXPECT_EQ(none.chunk_count, 0u);
  EXPECT_DOUBLE_EQ(none.page_equivalents, 0.0);
}

TEST(Plausibility, NoSharedWordsAnywhere) {
  const auto ev = evidence_of({{"alpha beta gamma", {1, 1}}});
  const auto plan = parse_lesson_plan(fixture::valid_plan_markup("Delta", "Learners should explain delta"));
  const auto v = plausibility_check("Kenya", ev, plan, 0.2);
  EXPECT_DOUBLE_EQ(v.topic_evidence_overlap, 0.0);
  EXPECT_DOUBLE_EQ(v.topic_plan_overlap, 0.0);
  EXPECT_TRUE(v.suspicious);
}

TEST(Retry, ValidFirstTry) {
  ScriptedLlm llm({fixture::valid_plan_markup("Kenya")});
  EXPECT_EQ(generate_plan(llm, "p", 2).retries_used, 0);
  EXPECT_EQ(llm.calls(), 1u);
}

TEST_F(GenerationFixture, ExactChunkTextRanksFirst) {
  DeterministicEmbedder e(fixture::kFixtureDim);
  const auto store = stores_->find("ICT");
  const Chunk& target = store->chunk(17);
  const auto ev = retrieve_context(*store, request("ICT", target.text), 6, 0.0, e);
  ASSERT_FALSE(ev.scored_chunks.empty());
  EXPECT_EQ(ev.scored_chunks.front().chunk.chunk_id, target.chunk_id);
  EXPECT_NEAR(ev.scored_chunks.front().score, 1.0, 1e-9);
}

TEST_F(GenerationFixture, NothingAboveThresholdGivesEmptyEvidence) {
  DeterministicEmbedder e(fixture::kFixtureDim);
  const auto ev = retrieve_context(*stores_->find("History"), request("History", "zebra quantum saxophone"), 6, 0.3, e);
  EXPECT_TRUE(ev.scored_chunks.empty());
  EXPECT_EQ(ev.total_source_chars, 0u);
}

TEST_F(GenerationFixture, UnknownSubjectMessage) {
  try {
    run_generation(*stores_, request("Physics", "Forces"), mock(), fixture::fixture_generation_config());
    FAIL();
  } catch (const PipelineError& e) {
    EXPECT_NE(std::string(e.what()).find("no store for subject"), std::string::npos) << e.what();
  }
}

// Evidence fidelity, warning completeness, retry accounting and determinism
// over every fixture topic.
TEST_F(GenerationFixture, PipelineInvariants) {
  const auto corpus = fixture::protocol_corpus();
  for (const auto& sc : corpus) {
    const auto store = stores_->find(sc.subject);
    std::set<std::string> texts;
    for (const auto& c : store->chunks()) texts.insert(c.text);
    for (const auto& entry : sc.toc.entries) {
      auto llm = std::make_shared<ScriptedLlm>(
          std::vector<std::string>{"junk", fixture::valid_plan_markup(entry.title)});
      Providers p{std::make_shared<DeterministicEmbedder>(fixture::kFixtureDim), llm};
      const auto req = request(sc.subject, entry.title);
      const auto res = run_generation(*stores_, req, p, fixture::fixture_generation_config());
      EXPECT_EQ(llm->calls(), static_cast<std::size_t>(res.retries_used + 1));
      for (const auto& s : res.evidence.scored_chunks) {
        EXPECT_TRUE(texts.contains(s.chunk.text));
        EXPECT_NE(llm->last_prompt().find(s.chunk.text), std::string::npos);
      }
      if (res.confidence.low_evidence) {
        EXPECT_NE(std::find(res.warnings.begin(), res.warnings.end(), kLowEvidenceWarning), res.warnings.end());
      }
      if (res.plausibility.suspicious) {
        EXPECT_NE(std::find(res.warnings.begin(), res.warnings.end(), kTopicMismatchWarning), res.warnings.end());
      }
      const auto again = run_generation(*stores_, req, mock(), fixture::fixture_generation_config());
      EXPECT_EQ(again.raw_output, run_generation(*stores_, req, mock(), fixture::fixture_generation_config()).raw_output);
    }
  }
}
