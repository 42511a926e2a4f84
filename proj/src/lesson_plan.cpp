#include "lessonrag/lesson_plan.hpp"

#include <algorithm>
#include <cctype>
#include <array>
#include <charconv>
#include <optional>
#include <sstream>

#include "lessonrag/error.hpp"
#include "lessonrag/text.hpp"

namespace lessonrag {

namespace {

std::string normalize_key(std::string_view raw) {
  std::string out;
  bool pending = false;
  for (char ch : raw) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      if (pending && !out.empty()) out.push_back('_');
      pending = false;
      out.push_back(static_cast<char>(std::tolower(c)));
    } else {
      pending = true;
    }
  }
  return out;
}

std::string upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

bool iequals_prefix(std::string_view s, std::string_view prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i]))) {
      return false;
    }
  }
  return true;
}

std::size_t ifind(std::string_view s, std::string_view needle) {
  if (needle.size() > s.size()) return std::string_view::npos;
  for (std::size_t i = 0; i + needle.size() <= s.size(); ++i) {
    if (iequals_prefix(s.substr(i), needle)) return i;
  }
  return std::string_view::npos;
}

std::string* general_field(GeneralInformation& g, const std::string& key) {
  if (key == "topic" || key == "title" || key == "lesson_topic") return &g.topic;
  if (key == "subject") return &g.subject;
  if (key == "level" || key == "class" || key == "student_level") return &g.level;
  if (key == "class_size" || key == "number_of_learners") return &g.class_size;
  if (key == "periods" || key == "number_of_periods" || key == "period") return &g.periods;
  if (key == "date" || key == "date_placeholder") return &g.date_placeholder;
  return nullptr;
}

std::string* preparation_field(Preparation& p, const std::string& key) {
  if (key == "learning_objective" || key == "learning_objectives" || key == "key_unit_competence") {
    return &p.learning_objective;
  }
  if (key == "materials" || key == "teaching_materials" || key == "learning_materials" ||
      key == "teaching_and_learning_materials") {
    return &p.materials;
  }
  if (key == "references" || key == "reference") return &p.references;
  return nullptr;
}

enum class Section { none, general, preparation, procedure, other };

ProcedureStep parse_row(std::string_view line, std::size_t line_no) {
  auto fail = [&](const std::string& why) {
    return Error(ErrorKind::format, "procedure row at line " + std::to_string(line_no) + ": " + why);
  };
  std::string_view rest = line.substr(1);  // drop '-' or '*'
  while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  if (!rest.starts_with('[')) throw fail("expected '[phase|minutes]'");
  const auto close = rest.find(']');
  if (close == std::string_view::npos) throw fail("unterminated '['");
  const std::string_view tag = rest.substr(1, close - 1);
  const auto bar = tag.find('|');
  if (bar == std::string_view::npos) throw fail("expected '[phase|minutes]'");

  ProcedureStep step;
  try {
    step.phase = parse_phase(tag.substr(0, bar));
  } catch (const Error&) {
    throw fail("unknown phase '" + text::trim(tag.substr(0, bar)) + "'");
  }
  std::string minutes = text::trim(tag.substr(bar + 1));
  for (std::string_view suffix : {"minutes", "mins", "min"}) {
    if (minutes.size() > suffix.size() && minutes.ends_with(suffix)) {
      minutes = text::trim(std::string_view(minutes).substr(0, minutes.size() - suffix.size()));
      break;
    }
  }
  auto [ptr, ec] = std::from_chars(minutes.data(), minutes.data() + minutes.size(), step.minutes);
  if (minutes.empty() || ec != std::errc() || ptr != minutes.data() + minutes.size()) {
    throw fail("minutes must be an integer");
  }

  std::string_view body = rest.substr(close + 1);
  const std::string trimmed = text::trim(body);
  body = trimmed;
  if (!iequals_prefix(body, "teacher:")) throw fail("expected 'teacher:'");
  body.remove_prefix(8);
  const auto sep = ifind(body, "| learners:");
  if (sep == std::string_view::npos) throw fail("expected '| learners:'");
  step.teacher_activity = text::trim(body.substr(0, sep));
  step.learner_activity = text::trim(body.substr(sep + 11));
  return step;
}

void require_object(const nlohmann::json& j, const char* what) {
  if (!j.is_object()) throw Error(ErrorKind::format, std::string("plan json: '") + what + "' must be an object");
}

std::string str_field(const nlohmann::json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return {};
  if (!it->is_string()) throw Error(ErrorKind::format, std::string("plan json: '") + key + "' must be a string");
  return it->get<std::string>();
}

nlohmann::ordered_json prep_json(const Preparation& p) {
  nlohmann::ordered_json j;
  j["learning_objective"] = p.learning_objective;
  j["materials"] = p.materials;
  j["references"] = p.references;
  return j;
}

nlohmann::ordered_json steps_json(const std::vector<ProcedureStep>& steps) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& s : steps) {
    nlohmann::ordered_json j;
    j["phase"] = to_string(s.phase);
    j["minutes"] = s.minutes;
    j["teacher_activity"] = s.teacher_activity;
    j["learner_activity"] = s.learner_activity;
    arr.push_back(std::move(j));
  }
  return arr;
}

Preparation prep_from_json(const nlohmann::json& j) {
  require_object(j, "preparation");
  return Preparation{str_field(j, "learning_objective"), str_field(j, "materials"), str_field(j, "references")};
}

std::vector<ProcedureStep> steps_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw Error(ErrorKind::format, "plan json: 'procedure' must be an array");
  std::vector<ProcedureStep> out;
  for (const auto& s : j) {
    require_object(s, "procedure step");
    ProcedureStep step;
    step.phase = parse_phase(str_field(s, "phase"));
    if (!s.contains("minutes") || !s["minutes"].is_number_integer()) {
      throw Error(ErrorKind::format, "plan json: step minutes must be an integer");
    }
    step.minutes = s["minutes"].get<int>();
    step.teacher_activity = str_field(s, "teacher_activity");
    step.learner_activity = str_field(s, "learner_activity");
    out.push_back(std::move(step));
  }
  return out;
}

struct LabeledField {
  const char* label;
  const std::string* value;
};

std::array<LabeledField, 6> general_fields(const GeneralInformation& g) {
  return {{{"Topic", &g.topic},
           {"Subject", &g.subject},
           {"Level", &g.level},
           {"Class Size", &g.class_size},
           {"Periods", &g.periods},
           {"Date", &g.date_placeholder}}};
}

std::array<LabeledField, 3> preparation_fields(const Preparation& p) {
  return {{{"Learning Objective", &p.learning_objective},
           {"Materials", &p.materials},
           {"References", &p.references}}};
}

void html_fields(std::ostringstream& out, const auto& fields) {
  out << "<dl>\n";
  for (const auto& f : fields) {
    out << "<dt>" << f.label << "</dt><dd>" << html_escape(*f.value) << "</dd>\n";
  }
  out << "</dl>\n";
}

void html_steps(std::ostringstream& out, const std::vector<ProcedureStep>& steps) {
  out << "<table>\n<thead><tr><th>Phase</th><th>Minutes</th><th>Teacher activity</th>"
         "<th>Learner activity</th></tr></thead>\n<tbody>\n";
  for (const auto& s : steps) {
    out << "<tr><td>" << phase_heading(s.phase) << "</td><td>" << s.minutes << "</td><td>"
        << html_escape(s.teacher_activity) << "</td><td>" << html_escape(s.learner_activity) << "</td></tr>\n";
  }
  out << "</tbody>\n</table>\n";
}

void text_fields(std::ostringstream& out, const auto& fields) {
  for (const auto& f : fields) out << "  " << f.label << ": " << *f.value << "\n";
}

void text_steps(std::ostringstream& out, const std::vector<ProcedureStep>& steps) {
  for (const auto& s : steps) {
    out << "  " << phase_heading(s.phase) << " (" << s.minutes << " min)\n"
        << "    Teacher: " << s.teacher_activity << "\n"
        << "    Learners: " << s.learner_activity << "\n";
  }
}

void markup_steps(std::ostringstream& out, const std::vector<ProcedureStep>& steps) {
  for (const auto& s : steps) {
    out << "- [" << to_string(s.phase) << "|" << s.minutes << "] teacher: " << s.teacher_activity
        << " | learners: " << s.learner_activity << "\n";
  }
}

}  // namespace

std::string_view to_string(Phase phase) noexcept {
  switch (phase) {
    case Phase::introduction: return "introduction";
    case Phase::development: return "development";
    case Phase::wrap_up_and_assessment: return "wrap_up_and_assessment";
  }
  return "introduction";
}

std::string_view phase_heading(Phase phase) noexcept {
  switch (phase) {
    case Phase::introduction: return "Introduction";
    case Phase::development: return "Development";
    case Phase::wrap_up_and_assessment: return "Wrap-up and Assessment";
  }
  return "Introduction";
}

Phase parse_phase(std::string_view s) {
  const std::string k = normalize_key(s);
  if (k == "introduction" || k == "intro") return Phase::introduction;
  if (k == "development" || k == "lesson_development") return Phase::development;
  if (k == "wrap_up_and_assessment" || k == "wrap_up" || k == "conclusion") return Phase::wrap_up_and_assessment;
  throw Error(ErrorKind::format, "unknown procedure phase '" + std::string(s) + "'");
}

std::string html_escape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

LessonPlan parse_lesson_plan(std::string_view raw) {
  if (text::trim(raw).empty()) throw Error(ErrorKind::format, "empty plan text");

  LessonPlan plan;
  Section section = Section::none;
  std::string other_name;
  bool seen_general = false, seen_preparation = false, seen_procedure = false;
  // Period currently being filled: 0 is the first period.
  std::size_t period = 0;
  bool period_has_procedure = false;
  bool period_has_content = false;
  std::string* last_value = nullptr;

  auto current_prep = [&]() -> Preparation& {
    return period == 0 ? plan.preparation : plan.extra_periods[period - 1].preparation;
  };
  auto current_steps = [&]() -> std::vector<ProcedureStep>& {
    return period == 0 ? plan.procedure : plan.extra_periods[period - 1].procedure;
  };
  auto start_new_period = [&] {
    plan.extra_periods.emplace_back();
    period = plan.extra_periods.size();
    period_has_procedure = false;
    period_has_content = false;
  };
  auto aux_key = [&](std::string_view sec, const std::string& key) {
    std::string prefix = period == 0 ? "" : "period" + std::to_string(period + 1) + ".";
    return prefix + std::string(sec) + "." + key;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= raw.size()) {
    std::size_t eol = raw.find('\n', pos);
    if (eol == std::string_view::npos) eol = raw.size();
    const std::string line = text::trim(raw.substr(pos, eol - pos));
    pos = eol + 1;
    ++line_no;
    if (line.empty() || line.starts_with("```")) continue;

    if (line.starts_with('#')) {
      std::string_view h = line;
      while (!h.empty() && h.front() == '#') h.remove_prefix(1);
      const std::string heading = upper(text::trim(h));
      last_value = nullptr;
      if (heading.starts_with("PERIOD")) {
        if (period_has_content) start_new_period();
        section = Section::none;
      } else if (heading == "GENERAL INFORMATION") {
        section = Section::general;
        seen_general = true;
      } else if (heading == "PREPARATION") {
        if (period_has_procedure) start_new_period();
        section = Section::preparation;
        seen_preparation = true;
        period_has_content = true;
      } else if (heading == "PROCEDURE") {
        if (period_has_procedure) start_new_period();
        section = Section::procedure;
        seen_procedure = true;
        period_has_procedure = true;
        period_has_content = true;
      } else {
        section = Section::other;
        other_name = normalize_key(heading);
        if (other_name.empty()) other_name = "section";
      }
      continue;
    }

    if (section == Section::procedure && (line.starts_with('-') || line.starts_with('*')) &&
        line.find('[') != std::string::npos && line.find('[') < 4) {
      current_steps().push_back(parse_row(line, line_no));
      last_value = nullptr;
      continue;
    }

    const auto colon = line.find(':');
    std::string key = colon == std::string::npos ? std::string() : normalize_key(line.substr(0, colon));
    if (colon != std::string::npos && !key.empty() && colon < 48 && section != Section::procedure) {
      std::string value = text::trim(std::string_view(line).substr(colon + 1));
      std::string* slot = nullptr;
      if (section == Section::general && period == 0) {
        slot = general_field(plan.general, key);
        if (slot == nullptr) slot = &plan.auxiliary[aux_key("general_information", key)];
      } else if (section == Section::preparation) {
        slot = preparation_field(current_prep(), key);
        if (slot == nullptr) slot = &plan.auxiliary[aux_key("preparation", key)];
      } else {
        const std::string sec = section == Section::other     ? other_name
                                : section == Section::general ? "general_information"
                                                              : "preamble";
        slot = &plan.auxiliary[aux_key(sec, key)];
      }
      *slot = value;
      last_value = slot;
      continue;
    }

    // Continuation of the previous value, or free text.
    if (last_value != nullptr) {
      if (!last_value->empty()) last_value->push_back(' ');
      *last_value += line;
    } else {
      const std::string sec = section == Section::procedure ? "procedure"
                              : section == Section::other   ? other_name
                              : section == Section::none    ? "preamble"
                              : section == Section::general ? "general_information"
                                                            : "preparation";
      std::string& note = plan.auxiliary[aux_key(sec, "text")];
      if (!note.empty()) note.push_back(' ');
      note += line;
    }
  }

  std::vector<std::string> missing;
  if (!seen_general) missing.emplace_back("GENERAL INFORMATION");
  if (!seen_preparation) missing.emplace_back("PREPARATION");
  if (!seen_procedure) missing.emplace_back("PROCEDURE");
  if (!missing.empty()) {
    std::string msg = "missing section heading(s):";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorKind::format, msg);
  }
  return plan;
}

ValidationReport validate_format(const LessonPlan& plan) {
  ValidationReport r;
  const auto& g = plan.general;
  const auto gfields = std::array<std::pair<const char*, const std::string*>, 6>{{{"topic", &g.topic},
                                                                                   {"subject", &g.subject},
                                                                                   {"level", &g.level},
                                                                                   {"class_size", &g.class_size},
                                                                                   {"periods", &g.periods},
                                                                                   {"date_placeholder", &g.date_placeholder}}};
  const auto& p = plan.preparation;
  const auto pfields = std::array<std::pair<const char*, const std::string*>, 3>{
      {{"learning_objective", &p.learning_objective}, {"materials", &p.materials}, {"references", &p.references}}};

  auto check = [&](const char* section, const auto& fields) {
    const bool all_empty = std::all_of(fields.begin(), fields.end(),
                                       [](const auto& f) { return text::trim(*f.second).empty(); });
    if (all_empty) {
      r.missing_sections.emplace_back(section);
      return;
    }
    for (const auto& [name, value] : fields) {
      if (text::trim(*value).empty()) r.missing_keys.emplace_back(name);
    }
  };
  check("general_information", gfields);
  check("preparation", pfields);

  if (plan.procedure.empty()) {
    r.structural_errors.emplace_back("procedure has no steps");
  } else {
    for (std::size_t i = 0; i < plan.procedure.size(); ++i) {
      if (plan.procedure[i].minutes <= 0) {
        r.structural_errors.push_back("procedure step " + std::to_string(i + 1) + ": minutes must be positive");
      }
    }
    for (Phase ph : {Phase::introduction, Phase::development, Phase::wrap_up_and_assessment}) {
      const bool present = std::any_of(plan.procedure.begin(), plan.procedure.end(),
                                       [ph](const ProcedureStep& s) { return s.phase == ph; });
      if (!present) r.structural_errors.push_back("procedure has no '" + std::string(to_string(ph)) + "' step");
    }
  }
  r.valid = r.missing_sections.empty() && r.missing_keys.empty() && r.structural_errors.empty();
  return r;
}

LessonPlan truncate_to_first_period(LessonPlan plan) {
  plan.extra_periods.clear();
  std::erase_if(plan.auxiliary, [](const auto& kv) {
    const std::string& k = kv.first;
    return k.size() > 6 && k.starts_with("period") && std::isdigit(static_cast<unsigned char>(k[6]));
  });
  return plan;
}

nlohmann::ordered_json plan_to_json(const LessonPlan& plan) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json g;
  g["topic"] = plan.general.topic;
  g["subject"] = plan.general.subject;
  g["level"] = plan.general.level;
  g["class_size"] = plan.general.class_size;
  g["periods"] = plan.general.periods;
  g["date_placeholder"] = plan.general.date_placeholder;
  j["general_information"] = std::move(g);
  j["preparation"] = prep_json(plan.preparation);
  j["procedure"] = steps_json(plan.procedure);
  j["extra_periods"] = nlohmann::ordered_json::array();
  for (const auto& p : plan.extra_periods) {
    nlohmann::ordered_json pj;
    pj["preparation"] = prep_json(p.preparation);
    pj["procedure"] = steps_json(p.procedure);
    j["extra_periods"].push_back(std::move(pj));
  }
  j["auxiliary"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : plan.auxiliary) j["auxiliary"][k] = v;
  return j;
}

LessonPlan plan_from_json(const nlohmann::json& j) {
  require_object(j, "plan");
  LessonPlan plan;
  if (auto it = j.find("general_information"); it != j.end()) {
    require_object(*it, "general_information");
    plan.general = GeneralInformation{str_field(*it, "topic"),      str_field(*it, "subject"),
                                      str_field(*it, "level"),      str_field(*it, "class_size"),
                                      str_field(*it, "periods"),    str_field(*it, "date_placeholder")};
  }
  if (auto it = j.find("preparation"); it != j.end()) plan.preparation = prep_from_json(*it);
  if (auto it = j.find("procedure"); it != j.end()) plan.procedure = steps_from_json(*it);
  if (auto it = j.find("extra_periods"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorKind::format, "plan json: 'extra_periods' must be an array");
    for (const auto& p : *it) {
      require_object(p, "extra period");
      PeriodBlock block;
      if (auto pp = p.find("preparation"); pp != p.end()) block.preparation = prep_from_json(*pp);
      if (auto ps = p.find("procedure"); ps != p.end()) block.procedure = steps_from_json(*ps);
      plan.extra_periods.push_back(std::move(block));
    }
  }
  if (auto it = j.find("auxiliary"); it != j.end()) {
    require_object(*it, "auxiliary");
    for (const auto& [k, v] : it->items()) {
      if (!v.is_string()) throw Error(ErrorKind::format, "plan json: auxiliary values must be strings");
      plan.auxiliary[k] = v.get<std::string>();
    }
  }
  return plan;
}

LessonPlan parse_archival_plan(std::string_view json_text) {
  try {
    return plan_from_json(nlohmann::json::parse(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("plan json: ") + e.what());
  }
}

std::string to_markup(const LessonPlan& plan) {
  std::ostringstream out;
  out << "## GENERAL INFORMATION\n";
  for (const auto& f : general_fields(plan.general)) out << f.label << ": " << *f.value << "\n";
  out << "## PREPARATION\n";
  for (const auto& f : preparation_fields(plan.preparation)) out << f.label << ": " << *f.value << "\n";
  out << "## PROCEDURE\n";
  markup_steps(out, plan.procedure);
  for (std::size_t i = 0; i < plan.extra_periods.size(); ++i) {
    out << "# PERIOD " << i + 2 << "\n## PREPARATION\n";
    for (const auto& f : preparation_fields(plan.extra_periods[i].preparation)) {
      out << f.label << ": " << *f.value << "\n";
    }
    out << "## PROCEDURE\n";
    markup_steps(out, plan.extra_periods[i].procedure);
  }
  return out.str();
}

std::string render_plan(const LessonPlan& plan, RenderMode mode) {
  std::ostringstream out;
  switch (mode) {
    case RenderMode::archival_json:
      return plan_to_json(plan).dump(2) + "\n";

    case RenderMode::display_markup:
      out << "<article class=\"lesson-plan\">\n";
      out << "<section class=\"general-information\">\n<h2>General Information</h2>\n";
      html_fields(out, general_fields(plan.general));
      out << "</section>\n<section class=\"preparation\">\n<h2>Preparation</h2>\n";
      html_fields(out, preparation_fields(plan.preparation));
      out << "</section>\n<section class=\"procedure\">\n<h2>Procedure</h2>\n";
      html_steps(out, plan.procedure);
      out << "</section>\n";
      for (std::size_t i = 0; i < plan.extra_periods.size(); ++i) {
        out << "<section class=\"period\">\n<h2>Period " << i + 2 << "</h2>\n<h3>Preparation</h3>\n";
        html_fields(out, preparation_fields(plan.extra_periods[i].preparation));
        out << "<h3>Procedure</h3>\n";
        html_steps(out, plan.extra_periods[i].procedure);
        out << "</section>\n";
      }
      out << "</article>\n";
      return out.str();

    case RenderMode::plain_text:
      out << "GENERAL INFORMATION\n";
      text_fields(out, general_fields(plan.general));
      out << "\nPREPARATION\n";
      text_fields(out, preparation_fields(plan.preparation));
      out << "\nPROCEDURE\n";
      text_steps(out, plan.procedure);
      for (std::size_t i = 0; i < plan.extra_periods.size(); ++i) {
        out << "\nPERIOD " << i + 2 << "\nPREPARATION\n";
        text_fields(out, preparation_fields(plan.extra_periods[i].preparation));
        out << "PROCEDURE\n";
        text_steps(out, plan.extra_periods[i].procedure);
      }
      return out.str();
  }
  return {};
}

}  // namespace lessonrag
