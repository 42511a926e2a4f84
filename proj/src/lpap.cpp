#include "lessonrag/lpap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <set>

#include "lessonrag/corpus.hpp"
#include "lessonrag/error.hpp"
#include "lessonrag/text.hpp"

namespace lessonrag {

namespace {

constexpr std::string_view kDefaultRubricJson = R"([
  {"item_id": "P01", "text": "Topic is stated", "kind": "presence", "max_points": 2, "presence_check": "general.topic"},
  {"item_id": "P02", "text": "Subject is stated", "kind": "presence", "max_points": 2, "presence_check": "general.subject"},
  {"item_id": "P03", "text": "Student level is stated", "kind": "presence", "max_points": 2, "presence_check": "general.level"},
  {"item_id": "P04", "text": "Class size is stated", "kind": "presence", "max_points": 2, "presence_check": "general.class_size"},
  {"item_id": "P05", "text": "Number of periods is stated", "kind": "presence", "max_points": 2, "presence_check": "general.periods"},
  {"item_id": "P06", "text": "Learning Objective is stated", "kind": "presence", "max_points": 2, "presence_check": "preparation.learning_objective"},
  {"item_id": "P07", "text": "Teaching and learning materials are listed", "kind": "presence", "max_points": 2, "presence_check": "preparation.materials"},
  {"item_id": "P08", "text": "Procedure has Introduction, Development and Wrap-up and Assessment", "kind": "presence", "max_points": 2, "presence_check": "procedure.phases"},
  {"item_id": "Q01", "text": "Learning Objective is specific and measurable", "kind": "quality", "max_points": 2},
  {"item_id": "Q02", "text": "Learning Objective matches the Topic", "kind": "quality", "max_points": 2},
  {"item_id": "Q03", "text": "Content is factually accurate", "kind": "quality", "max_points": 2},
  {"item_id": "Q04", "text": "Content suits the student level", "kind": "quality", "max_points": 2},
  {"item_id": "Q05", "text": "Materials are suitable and available in a typical classroom", "kind": "quality", "max_points": 2},
  {"item_id": "Q06", "text": "References point to the relevant textbook pages", "kind": "quality", "max_points": 2},
  {"item_id": "Q07", "text": "Introduction builds on prior knowledge", "kind": "quality", "max_points": 2},
  {"item_id": "Q08", "text": "Development activities are learner-centred", "kind": "quality", "max_points": 2},
  {"item_id": "Q09", "text": "Activities support the Learning Objective", "kind": "quality", "max_points": 2},
  {"item_id": "Q10", "text": "Time allocation across phases is realistic", "kind": "quality", "max_points": 2},
  {"item_id": "Q11", "text": "Activities are feasible for the class size", "kind": "quality", "max_points": 2},
  {"item_id": "Q12", "text": "Wrap-up and Assessment checks the Learning Objective", "kind": "quality", "max_points": 2},
  {"item_id": "Q13", "text": "Competences and values are addressed", "kind": "quality", "max_points": 2},
  {"item_id": "Q14", "text": "Language is clear and suits the learners", "kind": "quality", "max_points": 2}
]
)";

bool presence_satisfied(const LessonPlan& plan, std::string_view check) {
  auto filled = [](const std::string& s) { return !text::trim(s).empty(); };
  const auto& g = plan.general;
  const auto& p = plan.preparation;
  if (check == "general.topic") return filled(g.topic);
  if (check == "general.subject") return filled(g.subject);
  if (check == "general.level") return filled(g.level);
  if (check == "general.class_size") return filled(g.class_size);
  if (check == "general.periods") return filled(g.periods);
  if (check == "general.date") return filled(g.date_placeholder);
  if (check == "preparation.learning_objective") return filled(p.learning_objective);
  if (check == "preparation.materials") return filled(p.materials);
  if (check == "preparation.references") return filled(p.references);
  if (check == "procedure.phases") {
    for (Phase ph : {Phase::introduction, Phase::development, Phase::wrap_up_and_assessment}) {
      if (std::none_of(plan.procedure.begin(), plan.procedure.end(),
                       [ph](const ProcedureStep& s) { return s.phase == ph && s.minutes > 0; })) {
        return false;
      }
    }
    return true;
  }
  throw Error(ErrorKind::invalid_argument, "unknown presence check '" + std::string(check) + "'");
}

// Paired values in item_id order; both raters must cover the same items.
template <typename T>
std::pair<std::vector<T>, std::vector<T>> paired(const RaterScore& a, const RaterScore& b) {
  if (a.scores.size() != b.scores.size()) {
    throw ValidationError("scores", "raters '" + a.rater_id + "' and '" + b.rater_id + "' cover different items");
  }
  std::pair<std::vector<T>, std::vector<T>> out;
  auto ib = b.scores.begin();
  for (const auto& [item, va] : a.scores) {
    if (ib->first != item) {
      throw ValidationError("scores", "raters '" + a.rater_id + "' and '" + b.rater_id + "' cover different items");
    }
    out.first.push_back(static_cast<T>(va));
    out.second.push_back(static_cast<T>(ib->second));
    ++ib;
  }
  return out;
}

void check_same_length(std::size_t a, std::size_t b) {
  if (a != b) throw Error(ErrorKind::invalid_argument, "paired samples differ in length");
  if (a == 0) throw Error(ErrorKind::invalid_argument, "paired samples are empty");
}

}  // namespace

std::string_view to_string(ItemKind kind) noexcept {
  return kind == ItemKind::presence ? "presence" : "quality";
}

std::string_view to_string(QualityBand band) noexcept {
  switch (band) {
    case QualityBand::inadequate: return "inadequate";
    case QualityBand::fair: return "fair";
    case QualityBand::good: return "good";
    case QualityBand::very_good: return "very_good";
    case QualityBand::excellent: return "excellent";
  }
  return "inadequate";
}

Rubric::Rubric(std::vector<RubricItem> items) : items_(std::move(items)) {
  if (items_.empty()) throw ValidationError("rubric", "no items");
  std::set<std::string> seen;
  for (const auto& item : items_) {
    if (item.item_id.empty()) throw ValidationError("item_id", "empty");
    if (!seen.insert(item.item_id).second) throw ValidationError("item_id", "duplicate '" + item.item_id + "'");
    if (item.max_points < 1) throw ValidationError(item.item_id, "max_points must be >= 1");
    max_total_ += item.max_points;
  }
}

const RubricItem* Rubric::find(std::string_view item_id) const {
  auto it = std::find_if(items_.begin(), items_.end(), [&](const RubricItem& i) { return i.item_id == item_id; });
  return it == items_.end() ? nullptr : &*it;
}

std::size_t Rubric::quality_item_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(items_.begin(), items_.end(), [](const RubricItem& i) { return i.kind == ItemKind::quality; }));
}

const Rubric& default_rubric() {
  static const Rubric rubric = parse_rubric(kDefaultRubricJson);
  return rubric;
}

Rubric parse_rubric(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::format, std::string("rubric: ") + e.what());
  }
  if (!j.is_array()) throw Error(ErrorKind::format, "rubric: expected a JSON array");
  std::vector<RubricItem> items;
  for (const auto& e : j) {
    if (!e.is_object()) throw Error(ErrorKind::format, "rubric: items must be objects");
    RubricItem item;
    try {
      item.item_id = e.at("item_id").get<std::string>();
      item.text = e.value("text", std::string());
      const std::string kind = e.at("kind").get<std::string>();
      if (kind == "presence") {
        item.kind = ItemKind::presence;
      } else if (kind == "quality") {
        item.kind = ItemKind::quality;
      } else {
        throw Error(ErrorKind::format, "rubric: item '" + item.item_id + "' has unknown kind '" + kind + "'");
      }
      item.max_points = e.value("max_points", 2);
      item.presence_check = e.value("presence_check", std::string());
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorKind::format, std::string("rubric: ") + ex.what());
    }
    items.push_back(std::move(item));
  }
  return Rubric(std::move(items));
}

Rubric load_rubric(const std::filesystem::path& path) { return parse_rubric(read_file(path)); }

std::string rubric_to_json(const Rubric& rubric) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& i : rubric.items()) {
    nlohmann::ordered_json e;
    e["item_id"] = i.item_id;
    e["text"] = i.text;
    e["kind"] = to_string(i.kind);
    e["max_points"] = i.max_points;
    if (!i.presence_check.empty()) e["presence_check"] = i.presence_check;
    arr.push_back(std::move(e));
  }
  return arr.dump(2) + "\n";
}

void check_rater_score(const RaterScore& score, const Rubric& rubric) {
  const std::string who = "plan '" + score.plan_id + "' rater '" + score.rater_id + "'";
  for (const auto& [item, value] : score.scores) {
    const RubricItem* ri = rubric.find(item);
    if (!ri) throw ValidationError(item, who + ": unknown rubric item");
    if (value < 0 || value > ri->max_points) {
      throw ValidationError(item, who + ": score " + std::to_string(value) + " outside [0, " +
                                      std::to_string(ri->max_points) + "]");
    }
  }
  for (const auto& ri : rubric.items()) {
    if (!score.scores.contains(ri.item_id)) throw ValidationError(ri.item_id, who + ": item not scored");
  }
}

QualityBand classify_band(double percentage, const BandTable& b) {
  if (percentage > b.excellent_above) return QualityBand::excellent;
  if (percentage > b.very_good_above) return QualityBand::very_good;
  if (percentage >= b.good_from) return QualityBand::good;
  if (percentage >= b.fair_from) return QualityBand::fair;
  return QualityBand::inadequate;
}

double score_percentage(double total_points, const Rubric& rubric) {
  if (!(total_points >= 0.0) || total_points > rubric.max_total()) {
    throw Error(ErrorKind::invalid_argument, "total points " + std::to_string(total_points) + " outside [0, " +
                                                 std::to_string(rubric.max_total()) + "]");
  }
  return 100.0 * total_points / rubric.max_total();
}

double quality_only_percentage(const std::map<std::string, double>& scores, const Rubric& rubric) {
  double got = 0.0;
  int max = 0;
  for (const auto& item : rubric.items()) {
    if (item.kind != ItemKind::quality) continue;
    auto it = scores.find(item.item_id);
    if (it == scores.end()) throw ValidationError(item.item_id, "item not scored");
    got += it->second;
    max += item.max_points;
  }
  if (max == 0) throw Error(ErrorKind::invalid_argument, "rubric has no quality items");
  return 100.0 * got / max;
}

EvaluationRecord average_raters(const std::vector<RaterScore>& scores, const Rubric& rubric, const BandTable& bands) {
  if (scores.empty()) throw Error(ErrorKind::invalid_argument, "no rater scores");
  EvaluationRecord rec;
  rec.plan_id = scores.front().plan_id;
  rec.rater_count = scores.size();
  for (const auto& s : scores) {
    if (s.plan_id != rec.plan_id) {
      throw Error(ErrorKind::invalid_argument, "scores mix plans '" + rec.plan_id + "' and '" + s.plan_id + "'");
    }
    check_rater_score(s, rubric);
  }
  for (const auto& item : rubric.items()) {
    double sum = 0.0;
    for (const auto& s : scores) sum += s.scores.at(item.item_id);
    const double mean = sum / static_cast<double>(scores.size());
    rec.averaged_scores[item.item_id] = mean;
    rec.total_points += mean;
  }
  rec.percentage = score_percentage(std::min<double>(rec.total_points, rubric.max_total()), rubric);
  rec.quality_only_percentage = rubric.quality_item_count() > 0 ? quality_only_percentage(rec.averaged_scores, rubric) : 0.0;
  rec.band = classify_band(rec.percentage, bands);
  return rec;
}

std::map<std::string, int> score_presence_items(const LessonPlan& plan, const Rubric& rubric) {
  std::map<std::string, int> out;
  for (const auto& item : rubric.items()) {
    if (item.kind != ItemKind::presence) continue;
    if (item.presence_check.empty()) {
      throw Error(ErrorKind::invalid_argument, "presence item '" + item.item_id + "' has no presence_check");
    }
    out[item.item_id] = presence_satisfied(plan, item.presence_check) ? item.max_points : 0;
  }
  return out;
}

double percent_agreement(std::span<const int> a, std::span<const int> b) {
  check_same_length(a.size(), b.size());
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i] == b[i];
  return 100.0 * static_cast<double>(same) / static_cast<double>(a.size());
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = rank;
    i = j + 1;
  }
  return ranks;
}

double spearman_correlation(std::span<const double> a, std::span<const double> b) {
  check_same_length(a.size(), b.size());
  if (a.size() < 3) throw Error(ErrorKind::invalid_argument, "spearman needs at least 3 items");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double n = static_cast<double>(ra.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) throw Error(ErrorKind::invalid_argument, "spearman undefined for constant scores");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

double cohen_kappa(std::span<const int> a, std::span<const int> b) {
  check_same_length(a.size(), b.size());
  std::map<int, std::size_t> ca, cb;
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ++ca[a[i]];
    ++cb[b[i]];
    same += a[i] == b[i];
  }
  const double n = static_cast<double>(a.size());
  const double po = static_cast<double>(same) / n;
  double pe = 0.0;
  for (const auto& [cat, count] : ca) {
    auto it = cb.find(cat);
    if (it != cb.end()) pe += (static_cast<double>(count) / n) * (static_cast<double>(it->second) / n);
  }
  if (pe >= 1.0) throw Error(ErrorKind::invalid_argument, "kappa undefined: chance agreement is 1");
  return (po - pe) / (1.0 - pe);
}

double percent_agreement(const RaterScore& a, const RaterScore& b) {
  const auto [x, y] = paired<int>(a, b);
  return percent_agreement(std::span<const int>(x), std::span<const int>(y));
}

double spearman_correlation(const RaterScore& a, const RaterScore& b) {
  const auto [x, y] = paired<double>(a, b);
  return spearman_correlation(std::span<const double>(x), std::span<const double>(y));
}

double cohen_kappa(const RaterScore& a, const RaterScore& b) {
  const auto [x, y] = paired<int>(a, b);
  return cohen_kappa(std::span<const int>(x), std::span<const int>(y));
}

WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  check_same_length(x.size(), y.size());
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (!std::isfinite(d)) throw Error(ErrorKind::invalid_argument, "non-finite sample");
    if (d != 0.0) diffs.push_back(d);
  }
  WilcoxonResult r;
  r.n_effective = diffs.size();
  if (diffs.empty()) return r;

  std::vector<double> abs_d(diffs.size());
  std::transform(diffs.begin(), diffs.end(), abs_d.begin(), [](double d) { return std::fabs(d); });
  const auto ranks = average_ranks(abs_d);
  for (std::size_t i = 0; i < diffs.size(); ++i) (diffs[i] > 0 ? r.t_plus : r.t_minus) += ranks[i];
  r.w = std::min(r.t_plus, r.t_minus);
  const std::size_t n = diffs.size();

  if (n <= kWilcoxonExactLimit) {
    // Doubled ranks are integers; count sign assignments by their T+ sum.
    std::vector<int> doubled(n);
    int total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      doubled[i] = static_cast<int>(std::lround(ranks[i] * 2.0));
      total += doubled[i];
    }
    std::vector<std::uint64_t> ways(static_cast<std::size_t>(total) + 1, 0);
    ways[0] = 1;
    for (int dr : doubled) {
      for (int s = total; s >= dr; --s) ways[s] += ways[s - dr];
    }
    const int w2 = static_cast<int>(std::lround(r.w * 2.0));
    std::uint64_t extreme = 0;
    for (int s = 0; s <= total; ++s) {
      if (std::min(s, total - s) <= w2) extreme += ways[s];
    }
    r.p_value = static_cast<double>(extreme) / std::ldexp(1.0, static_cast<int>(n));
    r.exact = true;
    return r;
  }

  r.exact = false;
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  std::vector<double> sorted = abs_d;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i + 1);
    var -= (t * t * t - t) / 48.0;
    i = j + 1;
  }
  const double z = (r.w - mean) / std::sqrt(var);
  r.p_value = std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
  return r;
}

}  // namespace lessonrag
