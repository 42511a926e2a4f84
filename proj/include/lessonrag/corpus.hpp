#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lessonrag {

enum class Level { S1, S2, S3, S4 };
enum class Edition { student, teacher };

std::string_view to_string(Level level) noexcept;
std::string_view to_string(Edition edition) noexcept;
Level parse_level(std::string_view s);
Edition parse_edition(std::string_view s);

struct Page {
  int number = 0;
  std::string text;

  bool operator==(const Page&) const = default;
};

/// A textbook loaded from its page-delimited plain-text extraction.
/// Page numbers are strictly increasing; page text is whitespace-normalized.
struct TextbookDocument {
  std::string subject;
  Level level = Level::S1;
  Edition edition = Edition::student;
  std::vector<Page> pages;

  /// Page texts joined by '\n'. Pages with empty text contribute nothing.
  std::string joined_text() const;
};

/// The retrieval unit. char_count is measured in code points.
struct Chunk {
  std::string chunk_id;
  std::string subject;
  std::string text;
  int page_start = 0;
  int page_end = 0;
  std::size_t char_count = 0;

  bool operator==(const Chunk&) const = default;
};

nlohmann::ordered_json to_json(const Chunk& chunk);
Chunk chunk_from_json(const nlohmann::json& j);

struct TopicEntry {
  std::string title;
  int page_start = 0;
  int page_end = 0;
  std::vector<TopicEntry> subtopics;

  int page_span() const noexcept { return page_end - page_start + 1; }
  bool operator==(const TopicEntry&) const = default;
};

struct TableOfContents {
  std::vector<TopicEntry> entries;
};

nlohmann::ordered_json to_json(const TopicEntry& entry);

struct ChunkingOptions {
  std::size_t chunk_size = 1200;
  std::size_t overlap = 200;
};

/// Parses the `===PAGE n===` corpus format. Text before the first delimiter
/// must be blank.
TextbookDocument parse_textbook(std::string_view content, std::string subject, Level level,
                                Edition edition);
TextbookDocument load_textbook(const std::filesystem::path& path, std::string subject,
                               Level level, Edition edition);

TableOfContents parse_toc(std::string_view json_text);
TableOfContents load_toc(const std::filesystem::path& path);
std::string toc_to_json(const TableOfContents& toc);

/// Fixed-window chunking over the joined document text. Window i covers
/// code points [i*step, i*step + chunk_size) with step = chunk_size - overlap;
/// the last window ends at the end of the text.
std::vector<Chunk> chunk_document(const TextbookDocument& doc, const ChunkingOptions& options);

/// Picks entries 0, stride, 2*stride, ... up to `count`. An entry spanning more
/// than breadth_page_limit pages that has subtopics is replaced by its first
/// subtopic.
std::vector<TopicEntry> select_topics(const TableOfContents& toc, std::size_t count,
                                      std::size_t stride, int breadth_page_limit = 25);

std::string read_file(const std::filesystem::path& path);

}  // namespace lessonrag
