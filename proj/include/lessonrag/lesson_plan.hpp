#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace lessonrag {

enum class Phase { introduction, development, wrap_up_and_assessment };

std::string_view to_string(Phase phase) noexcept;
/// Accepts "introduction", "development", "wrap_up_and_assessment",
/// "Wrap-up and Assessment" and the older "conclusion".
Phase parse_phase(std::string_view s);
std::string_view phase_heading(Phase phase) noexcept;

struct ProcedureStep {
  Phase phase = Phase::introduction;
  int minutes = 0;
  std::string teacher_activity;
  std::string learner_activity;

  bool operator==(const ProcedureStep&) const = default;
};

struct GeneralInformation {
  std::string topic;
  std::string subject;
  std::string level;
  std::string class_size;
  std::string periods;
  std::string date_placeholder;

  bool operator==(const GeneralInformation&) const = default;
};

struct Preparation {
  std::string learning_objective;
  std::string materials;
  std::string references;

  bool operator==(const Preparation&) const = default;
};

struct PeriodBlock {
  Preparation preparation;
  std::vector<ProcedureStep> procedure;

  bool operator==(const PeriodBlock&) const = default;
};

/// General Information / Preparation / Procedure. The first period lives in
/// `preparation` and `procedure`; any further periods the model produced go to
/// `extra_periods`. Keys the parser does not know are kept in `auxiliary`
/// as "section.key" -> value.
struct LessonPlan {
  GeneralInformation general;
  Preparation preparation;
  std::vector<ProcedureStep> procedure;
  std::vector<PeriodBlock> extra_periods;
  std::map<std::string, std::string> auxiliary;

  bool operator==(const LessonPlan&) const = default;
};

struct ValidationReport {
  bool valid = true;
  std::vector<std::string> missing_sections;
  std::vector<std::string> missing_keys;
  std::vector<std::string> structural_errors;
};

/// Parses the line-oriented markup:
///
///   ## GENERAL INFORMATION
///   Topic: ...
///   ## PREPARATION
///   Learning Objective: ...
///   ## PROCEDURE
///   - [introduction|10] teacher: ... | learners: ...
///
/// Throws Error(ErrorKind::format) when a mandatory heading is missing or a
/// procedure row is malformed.
LessonPlan parse_lesson_plan(std::string_view raw);

ValidationReport validate_format(const LessonPlan& plan);

/// Drops every period after the first. Idempotent.
LessonPlan truncate_to_first_period(LessonPlan plan);

enum class RenderMode { display_markup, plain_text, archival_json };

std::string render_plan(const LessonPlan& plan, RenderMode mode);

/// Emits the raw markup accepted by parse_lesson_plan.
std::string to_markup(const LessonPlan& plan);

nlohmann::ordered_json plan_to_json(const LessonPlan& plan);
LessonPlan plan_from_json(const nlohmann::json& j);
/// Reader for the archival (.plan.json) form.
LessonPlan parse_archival_plan(std::string_view json_text);

std::string html_escape(std::string_view s);

}  // namespace lessonrag
