#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unistd.h>

#include "lessonrag/text.hpp"

namespace fixture {

using namespace lessonrag;

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("lessonrag-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << content;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

int uniform(std::mt19937& rng, int lo, int hi) {
  const auto span = static_cast<std::uint32_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

float unit_float(std::mt19937& rng) {
  return static_cast<float>(static_cast<double>(rng() >> 8) / 8388608.0 - 1.0);
}

namespace {

struct Entry {
  std::string title;
  std::vector<std::string> subtopics;  // broad entries only
};

const std::vector<std::pair<std::string, std::vector<Entry>>>& subjects() {
  static const std::vector<std::pair<std::string, std::vector<Entry>>> s = {
      {"History",
       {{"Origins of early humans", {}},
        {"Stone age tool making", {}},
        {"Early iron working communities", {}},
        {"Migration of Bantu speakers", {}},
        {"Kingdoms of the interlacustrine region", {"Rise of Buganda kingdom", "Bunyoro Kitara empire"}},
        {"Long distance trade routes", {}},
        {"Arrival of coastal traders", {}},
        {"Colonial rule in Uganda", {}},
        {"Resistance against colonial rule", {}},
        {"Road to independence", {}},
        {"Post independence governance", {}},
        {"Regional cooperation in Africa", {}},
        {kThinTopic, {}},
        {"Culture and heritage sites", {}},
        {"Sources of historical information", {}},
        {"Timeline and chronology skills", {}}}},
      {"Mathematics",
       {{"Number bases and conversion", {}},
        {"Working with fractions", {}},
        {"Decimals and percentages", {}},
        {"Ratio and proportion", {}},
        {"Algebraic expressions and equations", {"Simplifying algebraic expressions", "Solving linear equations"}},
        {"Coordinate geometry basics", {}},
        {"Angles and parallel lines", {}},
        {"Properties of triangles", {}},
        {"Perimeter and area of shapes", {}},
        {"Volume of solid shapes", {}},
        {"Collecting statistical data", {}},
        {"Bar charts and pie charts", {}},
        {"Probability of simple events", {}},
        {"Sets and Venn diagrams", {}},
        {"Patterns and sequences", {}},
        {"Business arithmetic and interest", {}}}},
      {"ICT",
       {{"Introduction to computers", {}},
        {"Parts of a computer system", {}},
        {"Computer care and safety", {}},
        {"Using the keyboard and mouse", {}},
        {"Word processing skills", {"Creating a new document", "Formatting text in documents"}},
        {"Electronic spreadsheet basics", {}},
        {"Computer networks and internet", {}},
        {"Electronic mail communication", {}},
        {"Digital citizenship and ethics", {}},
        {"Presentation software skills", {}},
        {"File management on computers", {}},
        {"Computer viruses and protection", {}},
        {"Data and information processing", {}},
        {"Programming with simple algorithms", {}},
        {"Emerging technologies in society", {}},
        {"Careers in computing fields", {}}}},
  };
  return s;
}

std::vector<std::string> filler_words() {
  static const std::vector<std::string> base = {
      "learners", "observe", "describe", "example", "activity", "discuss", "record", "notes",    "group",
      "teacher",  "explain", "question", "answer",  "study",    "local",   "area",   "village",  "school",
      "map",      "picture", "list",     "write",   "read",     "compare", "identify", "several", "various",
      "many",     "during",  "around",   "change",  "show",     "find",    "use",    "make",     "think",
      "talk",     "look",    "draw",     "name",    "give",     "state",   "market", "river",    "season",
      "family",   "friend",  "garden",   "morning", "evening",  "story",   "lesson", "exercise", "practice"};
  std::set<std::string> title_words;
  for (const auto& [_, entries] : subjects()) {
    for (const auto& e : entries) {
      for (auto& w : text::words(e.title)) title_words.insert(w);
      for (const auto& s : e.subtopics) {
        for (auto& w : text::words(s)) title_words.insert(w);
      }
    }
  }
  std::vector<std::string> out;
  for (const auto& w : base) {
    if (!title_words.contains(w) && !text::is_stop_word(w)) out.push_back(w);
  }
  return out;
}

std::string page_about(std::mt19937& rng, const std::string& title, std::size_t target_chars,
                       const std::vector<std::string>& filler) {
  std::string page;
  while (page.size() < target_chars) {
    if (!page.empty()) page += ' ';
    page += title;
    for (int i = 0; i < 5; ++i) page += ' ' + filler[rng() % filler.size()];
    page += '.';
  }
  return page;
}

}  // namespace

std::vector<SubjectCorpus> protocol_corpus() {
  std::mt19937 rng(20240607u);
  const auto filler = filler_words();
  std::vector<SubjectCorpus> out;
  for (const auto& [subject, entries] : subjects()) {
    SubjectCorpus sc;
    sc.subject = subject;
    std::ostringstream corpus;
    int page = 1;
    auto emit = [&](const std::string& title, int pages, std::size_t chars) {
      const int first = page;
      for (int p = 0; p < pages; ++p) {
        corpus << "===PAGE " << page << "===\n" << page_about(rng, title, chars, filler) << "\n";
        ++page;
      }
      return std::pair{first, page - 1};
    };
    for (const auto& e : entries) {
      TopicEntry te;
      te.title = e.title;
      if (!e.subtopics.empty()) {
        te.page_start = page;
        for (const auto& s : e.subtopics) {
          const auto [a, b] = emit(s, 14, 1500);
          te.subtopics.push_back(TopicEntry{s, a, b, {}});
        }
        te.page_end = page - 1;
      } else if (e.title == kThinTopic) {
        std::tie(te.page_start, te.page_end) = emit(e.title, 1, 400);
      } else {
        std::tie(te.page_start, te.page_end) = emit(e.title, 3, 1500);
      }
      sc.toc.entries.push_back(std::move(te));
    }
    sc.corpus_text = corpus.str();
    out.push_back(std::move(sc));
  }
  return out;
}

ChunkingOptions fixture_chunking() { return ChunkingOptions{600, 100}; }

GenerationConfig fixture_generation_config() {
  GenerationConfig c;
  c.k = 6;
  c.min_sim = 0.3;
  return c;
}

StoreRegistry ingest_corpus(const std::vector<SubjectCorpus>& corpus, const fs::path& store_root) {
  StoreRegistry reg;
  DeterministicEmbedder embedder(kFixtureDim);
  for (const auto& sc : corpus) {
    const TextbookDocument doc = parse_textbook(sc.corpus_text, sc.subject, Level::S1, Edition::student);
    auto chunks = chunk_document(doc, fixture_chunking());
    std::vector<std::string> texts;
    for (const auto& c : chunks) texts.push_back(c.text);
    const auto vectors = embedder.embed_texts(texts);
    IngestMeta meta{Level::S1, Edition::student, fixture_chunking().chunk_size, fixture_chunking().overlap,
                    embedder.id(), "2024-01-01T00:00:00Z"};
    auto store = std::make_shared<const VectorStore>(build_store(sc.subject, std::move(chunks), vectors, meta));
    const fs::path dir = store_root / sc.subject;
    persist_store(*store, dir);
    write_text(dir / "toc.json", toc_to_json(sc.toc));
    reg.add(std::move(store));
  }
  return reg;
}

std::vector<float> random_vector(std::mt19937& rng, std::size_t dim) {
  std::vector<float> v(dim);
  bool nonzero = false;
  while (!nonzero) {
    for (auto& x : v) {
      x = unit_float(rng);
      nonzero = nonzero || x != 0.0f;
    }
  }
  return v;
}

RandomStore random_store(std::mt19937& rng, std::size_t n, std::size_t dim, std::size_t duplicates) {
  RandomStore rs;
  std::vector<Chunk> chunks;
  std::vector<EmbeddingVector> vectors;
  for (std::size_t i = 0; i < n; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "rnd-%06u", static_cast<unsigned>(rng() % 1000000u));
    std::string cid = std::string(id) + "-" + std::to_string(i);
    std::vector<float> row;
    if (i > 0 && i + duplicates >= n) {
      row = rs.rows[rng() % i];
    } else {
      row = random_vector(rng, dim);
    }
    rs.ids.push_back(cid);
    rs.rows.push_back(row);
    const int page = uniform(rng, 1, 400);
    std::string body = "chunk text " + std::to_string(i) + " \xC3\xA9t\xC3\xA9 \"quoted\"\n";
    chunks.push_back(Chunk{cid, "Random", body, page, page + uniform(rng, 0, 2), text::codepoint_count(body)});
    vectors.emplace_back(std::move(row));
  }
  IngestMeta meta{Level::S2, Edition::teacher, 1200, 200, "random/" + std::to_string(dim), "2024-05-01T12:00:00Z"};
  rs.store = std::make_unique<VectorStore>(build_store("Random", std::move(chunks), vectors, meta));
  return rs;
}

std::string valid_plan_markup(const std::string& topic, const std::string& objective) {
  std::ostringstream o;
  o << "## GENERAL INFORMATION\n"
    << "Topic: " << topic << "\n"
    << "Subject: History\nLevel: S1\nClass Size: >60\nPeriods: 1\nDate: ____________\n"
    << "## PREPARATION\n"
    << "Learning Objective: " << (objective.empty() ? "Learners should be able to explain " + topic : objective) << "\n"
    << "Materials: textbook, chalkboard\nReferences: p. 4\n"
    << "## PROCEDURE\n"
    << "- [introduction|5] teacher: Introduces the topic | learners: Listen\n"
    << "- [development|30] teacher: Explains | learners: Discuss in groups\n"
    << "- [wrap_up_and_assessment|5] teacher: Asks questions | learners: Answer\n";
  return o.str();
}

}  // namespace fixture
