#include "lessonrag/mock_llm.hpp"

#include <sstream>
#include <thread>

#include "lessonrag/error.hpp"
#include "lessonrag/text.hpp"

namespace lessonrag {

namespace {

struct Source {
  std::string citation;  // "p. 4" or "pp. 4–5"
  std::string text;
};

struct ParsedPrompt {
  std::string topic, subject, level, periods = "1", class_size;
  std::vector<Source> sources;
};

std::string field_after(std::string_view line, std::string_view label) {
  return line.starts_with(label) ? text::trim(line.substr(label.size())) : std::string();
}

ParsedPrompt parse_prompt(std::string_view prompt) {
  ParsedPrompt p;
  bool in_context = false;
  std::istringstream in{std::string(prompt)};
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = text::trim(line);
    if (t == "CONTEXT") {
      in_context = true;
      continue;
    }
    if (t == "END OF CONTEXT") {
      in_context = false;
      continue;
    }
    if (in_context) {
      if (t.starts_with("[Source ") && t.ends_with(']')) {
        const auto comma = t.find(", ");
        p.sources.push_back({comma == std::string::npos ? "" : t.substr(comma + 2, t.size() - comma - 3), ""});
      } else if (!p.sources.empty() && !t.empty()) {
        auto& body = p.sources.back().text;
        if (!body.empty()) body.push_back(' ');
        body += t;
      }
      continue;
    }
    if (auto v = field_after(t, "Requested topic:"); !v.empty()) p.topic = v;
    if (auto v = field_after(t, "Requested subject:"); !v.empty()) p.subject = v;
    if (auto v = field_after(t, "Requested level:"); !v.empty()) p.level = v;
    if (auto v = field_after(t, "Requested periods:"); !v.empty()) p.periods = v;
    if (auto v = field_after(t, "Requested class size:"); !v.empty()) p.class_size = v;
  }
  return p;
}

// Keeps generated text on one line and free of the row separator.
std::string sanitize(std::string_view s, std::size_t max_bytes) {
  std::string out;
  for (char c : s) {
    if (c == '|' || c == '\n' || c == '\r') c = ' ';
    out.push_back(c);
  }
  out = text::normalize_whitespace(out);
  if (out.size() > max_bytes) {
    std::size_t cut = max_bytes;
    while (cut > 0 && (static_cast<unsigned char>(out[cut]) & 0xC0) == 0x80) --cut;
    out.resize(cut);
    out += "...";
  }
  return out;
}

void write_period(std::ostringstream& out, const ParsedPrompt& p, int index) {
  const std::string topic = sanitize(p.topic, 200);
  std::string refs;
  for (const auto& s : p.sources) {
    if (!refs.empty()) refs += ", ";
    refs += s.citation;
  }
  out << "## PREPARATION\n"
      << "Learning Objective: Learners should be able to explain " << topic;
  if (index > 1) out << " (part " << index << ")";
  out << ".\n"
      << "Materials: " << (p.subject.empty() ? "Textbook" : p.subject + " textbook") << ", chalkboard, exercise books\n"
      << "References: " << (refs.empty() ? "none" : refs) << "\n"
      << "## PROCEDURE\n";
  const std::string excerpt = p.sources.empty() ? std::string("the topic as introduced in class")
                                                 : sanitize(p.sources.front().text, 240);
  out << "- [introduction|5] teacher: Introduces " << topic
      << " and asks what learners already know. | learners: Share what they know about " << topic << ".\n"
      << "- [development|30] teacher: Explains, drawing on the source: " << excerpt
      << " | learners: Take notes and discuss in groups.\n"
      << "- [wrap_up_and_assessment|5] teacher: Asks review questions on " << topic
      << ". | learners: Answer questions and summarise the lesson.\n";
}

}  // namespace

std::string TemplateMockLlm::complete(std::string_view prompt, int /*max_tokens*/) {
  const ParsedPrompt p = parse_prompt(prompt);
  int periods = 1;
  try {
    periods = std::max(1, std::stoi(p.periods));
  } catch (const std::logic_error&) {
  }
  std::ostringstream out;
  out << "## GENERAL INFORMATION\n"
      << "Topic: " << sanitize(p.topic, 200) << "\n"
      << "Subject: " << p.subject << "\n"
      << "Level: " << p.level << "\n"
      << "Class Size: " << p.class_size << "\n"
      << "Periods: " << periods << "\n"
      << "Date: ____________\n";
  write_period(out, p, 1);
  for (int i = 2; i <= periods; ++i) {
    out << "## PERIOD " << i << "\n";
    write_period(out, p, i);
  }
  return out.str();
}

ScriptedLlm::ScriptedLlm(std::vector<std::string> responses, std::chrono::milliseconds delay)
    : responses_(std::move(responses)), delay_(delay) {
  if (responses_.empty()) throw Error(ErrorKind::invalid_argument, "ScriptedLlm needs at least one response");
}

std::string ScriptedLlm::complete(std::string_view prompt, int /*max_tokens*/) {
  const std::size_t n = calls_.fetch_add(1);
  {
    std::lock_guard lock(mu_);
    last_prompt_ = prompt;
  }
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  const std::string& r = responses_[std::min(n, responses_.size() - 1)];
  if (r == kFail) throw ProviderError("scripted provider failure", false, 503);
  return r;
}

std::string ScriptedLlm::last_prompt() const {
  std::lock_guard lock(mu_);
  return last_prompt_;
}

}  // namespace lessonrag
