#include "lessonrag/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lessonrag/error.hpp"
#include "lessonrag/text.hpp"

namespace lessonrag {

namespace {

constexpr std::string_view kPagePrefix = "===PAGE";

// Returns the page number for a well-formed `===PAGE n===` line, 0 for a line
// that is not a delimiter at all, and throws for a malformed delimiter.
int parse_delimiter(std::string_view line, std::size_t line_no) {
  if (!line.starts_with(kPagePrefix)) return 0;
  auto malformed = [&] {
    return Error(ErrorKind::format,
                 "malformed page delimiter at line " + std::to_string(line_no) + ": '" +
                     std::string(line) + "'");
  };
  std::string_view rest = line.substr(kPagePrefix.size());
  if (!rest.starts_with(' ') || !rest.ends_with("===")) throw malformed();
  std::string_view digits = rest.substr(1, rest.size() - 4);
  if (digits.empty()) throw malformed();
  int value = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
  if (ec != std::errc() || ptr != digits.data() + digits.size() || value <= 0) throw malformed();
  return value;
}

TopicEntry topic_from_json(const nlohmann::json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::format, "toc: " + where + " is not an object");
  TopicEntry e;
  try {
    e.title = j.at("title").get<std::string>();
    e.page_start = j.at("page_start").get<int>();
    e.page_end = j.at("page_end").get<int>();
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorKind::format, "toc: " + where + ": " + ex.what());
  }
  if (text::trim(e.title).empty()) throw Error(ErrorKind::format, "toc: " + where + ": empty title");
  if (e.page_start < 1 || e.page_end < e.page_start) {
    throw Error(ErrorKind::format, "toc: " + where + " ('" + e.title + "'): invalid page range");
  }
  if (auto it = j.find("subtopics"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(ErrorKind::format, "toc: " + where + ": subtopics must be an array");
    for (std::size_t i = 0; i < it->size(); ++i) {
      TopicEntry sub = topic_from_json((*it)[i], where + ".subtopics[" + std::to_string(i) + "]");
      if (sub.page_start < e.page_start || sub.page_end > e.page_end) {
        throw Error(ErrorKind::format, "toc: subtopic '" + sub.title +
                                           "' is outside the page range of '" + e.title + "'");
      }
      e.subtopics.push_back(std::move(sub));
    }
  }
  return e;
}

}  // namespace

std::string_view to_string(Level level) noexcept {
  switch (level) {
    case Level::S1: return "S1";
    case Level::S2: return "S2";
    case Level::S3: return "S3";
    case Level::S4: return "S4";
  }
  return "S1";
}

std::string_view to_string(Edition edition) noexcept {
  return edition == Edition::teacher ? "teacher" : "student";
}

Level parse_level(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  if (v == "s1") return Level::S1;
  if (v == "s2") return Level::S2;
  if (v == "s3") return Level::S3;
  if (v == "s4") return Level::S4;
  throw ValidationError("level", "unknown level '" + std::string(s) + "'");
}

Edition parse_edition(std::string_view s) {
  const std::string v = text::to_lower(text::trim(s));
  if (v == "student") return Edition::student;
  if (v == "teacher") return Edition::teacher;
  throw ValidationError("edition", "unknown edition '" + std::string(s) + "'");
}

std::string TextbookDocument::joined_text() const {
  std::string out;
  for (const auto& p : pages) {
    if (p.text.empty()) continue;
    if (!out.empty()) out.push_back('\n');
    out += p.text;
  }
  return out;
}

nlohmann::ordered_json to_json(const Chunk& c) {
  nlohmann::ordered_json j;
  j["chunk_id"] = c.chunk_id;
  j["subject"] = c.subject;
  j["text"] = c.text;
  j["page_start"] = c.page_start;
  j["page_end"] = c.page_end;
  j["char_count"] = c.char_count;
  return j;
}

Chunk chunk_from_json(const nlohmann::json& j) {
  Chunk c;
  c.chunk_id = j.at("chunk_id").get<std::string>();
  c.subject = j.at("subject").get<std::string>();
  c.text = j.at("text").get<std::string>();
  c.page_start = j.at("page_start").get<int>();
  c.page_end = j.at("page_end").get<int>();
  c.char_count = j.at("char_count").get<std::size_t>();
  return c;
}

nlohmann::ordered_json to_json(const TopicEntry& e) {
  nlohmann::ordered_json j;
  j["title"] = e.title;
  j["page_start"] = e.page_start;
  j["page_end"] = e.page_end;
  j["subtopics"] = nlohmann::ordered_json::array();
  for (const auto& s : e.subtopics) j["subtopics"].push_back(to_json(s));
  return j;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::io, "read failed for '" + path.string() + "'");
  return std::move(ss).str();
}

TextbookDocument parse_textbook(std::string_view content, std::string subject, Level level,
                                Edition edition) {
  if (text::trim(subject).empty()) throw Error(ErrorKind::invalid_argument, "subject must not be empty");
  if (!text::is_valid_utf8(content)) throw Error(ErrorKind::format, "corpus is not valid UTF-8");

  TextbookDocument doc;
  doc.subject = std::move(subject);
  doc.level = level;
  doc.edition = edition;

  std::string current;
  bool in_page = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  auto flush = [&] {
    if (in_page) doc.pages.back().text = text::normalize_whitespace(current);
    current.clear();
  };

  while (pos <= content.size()) {
    std::size_t eol = content.find('\n', pos);
    if (eol == std::string_view::npos) eol = content.size();
    std::string_view line = content.substr(pos, eol - pos);
    if (line.ends_with('\r')) line.remove_suffix(1);
    ++line_no;
    pos = eol + 1;

    const int page = parse_delimiter(line, line_no);
    if (page > 0) {
      if (!in_page && !text::trim(current).empty()) {
        throw Error(ErrorKind::format, "malformed page delimiter: text before the first '===PAGE n===' line");
      }
      flush();
      if (!doc.pages.empty() && page <= doc.pages.back().number) {
        throw Error(ErrorKind::format, "non-monotonic pages: page " + std::to_string(page) +
                                           " follows page " + std::to_string(doc.pages.back().number) +
                                           " (line " + std::to_string(line_no) + ")");
      }
      doc.pages.push_back(Page{page, {}});
      in_page = true;
      continue;
    }
    current.append(line);
    current.push_back('\n');
  }
  if (!in_page && !text::trim(current).empty()) {
    throw Error(ErrorKind::format, "malformed page delimiter: no '===PAGE n===' line found");
  }
  flush();

  if (doc.pages.empty() || doc.joined_text().empty()) throw Error(ErrorKind::format, "empty corpus");
  return doc;
}

TextbookDocument load_textbook(const std::filesystem::path& path, std::string subject, Level level,
                               Edition edition) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::io, "corpus file not found: " + path.string());
  return parse_textbook(read_file(path), std::move(subject), level, edition);
}

TableOfContents parse_toc(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& ex) {
    throw Error(ErrorKind::format, std::string("toc: invalid JSON: ") + ex.what());
  }
  if (!j.is_array()) throw Error(ErrorKind::format, "toc: top level must be an array");
  TableOfContents toc;
  for (std::size_t i = 0; i < j.size(); ++i) {
    toc.entries.push_back(topic_from_json(j[i], "entry[" + std::to_string(i) + "]"));
  }
  if (toc.entries.empty()) throw Error(ErrorKind::format, "toc: no entries");
  return toc;
}

TableOfContents load_toc(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorKind::io, "toc file not found: " + path.string());
  return parse_toc(read_file(path));
}

std::string toc_to_json(const TableOfContents& toc) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& e : toc.entries) j.push_back(to_json(e));
  return j.dump(2) + "\n";
}

std::vector<Chunk> chunk_document(const TextbookDocument& doc, const ChunkingOptions& options) {
  if (options.chunk_size <= options.overlap) {
    throw Error(ErrorKind::invalid_argument, "chunk_size must be greater than overlap");
  }

  // Byte offset where each page's contribution starts; the '\n' joining two
  // pages is attributed to the earlier page.
  std::string joined;
  std::vector<std::size_t> seg_start;
  std::vector<int> seg_page;
  for (const auto& p : doc.pages) {
    if (p.text.empty()) continue;
    if (!joined.empty()) joined.push_back('\n');
    seg_start.push_back(joined.size());
    seg_page.push_back(p.number);
    joined += p.text;
  }
  if (joined.empty()) return {};

  auto page_of = [&](std::size_t byte) {
    auto it = std::upper_bound(seg_start.begin(), seg_start.end(), byte);
    return seg_page[static_cast<std::size_t>(it - seg_start.begin()) - 1];
  };

  const auto offsets = text::codepoint_offsets(joined);
  const std::size_t n = offsets.size() - 1;
  const std::size_t step = options.chunk_size - options.overlap;

  std::vector<Chunk> chunks;
  chunks.reserve(n / step + 1);
  for (std::size_t start = 0;; start += step) {
    const std::size_t end = std::min(start + options.chunk_size, n);
    const std::size_t b0 = offsets[start];
    const std::size_t b1 = offsets[end];

    Chunk c;
    char id[32];
    std::snprintf(id, sizeof id, "-%06zu", chunks.size());
    c.chunk_id = doc.subject + id;
    c.subject = doc.subject;
    c.text = joined.substr(b0, b1 - b0);
    c.page_start = page_of(b0);
    c.page_end = page_of(b1 - 1);
    c.char_count = end - start;
    chunks.push_back(std::move(c));
    if (end == n) break;
  }
  return chunks;
}

std::vector<TopicEntry> select_topics(const TableOfContents& toc, std::size_t count, std::size_t stride,
                                      int breadth_page_limit) {
  if (count == 0) throw Error(ErrorKind::invalid_argument, "count must be >= 1");
  if (stride == 0) throw Error(ErrorKind::invalid_argument, "stride must be >= 1");
  const std::size_t last = (count - 1) * stride;
  if (last >= toc.entries.size()) {
    throw Error(ErrorKind::invalid_argument,
                "table of contents has " + std::to_string(toc.entries.size()) + " entries; " +
                    std::to_string(count) + " topics at stride " + std::to_string(stride) +
                    " need at least " + std::to_string(last + 1));
  }
  std::vector<TopicEntry> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const TopicEntry& e = toc.entries[i * stride];
    if (e.page_span() > breadth_page_limit && !e.subtopics.empty()) {
      out.push_back(e.subtopics.front());
    } else {
      out.push_back(e);
    }
  }
  return out;
}

}  // namespace lessonrag
