#include "lessonrag/report.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lessonrag/corpus.hpp"
#include "lessonrag/error.hpp"
#include "lessonrag/text.hpp"

namespace lessonrag {

namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = line.find(',', pos);
    out.push_back(text::trim(line.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::string fmt(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v, 4) : "n/a"; }

}  // namespace

std::vector<RaterScore> parse_ratings_csv(std::string_view csv) {
  std::map<std::pair<std::string, std::string>, RaterScore> grouped;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    auto eol = csv.find('\n', pos);
    if (eol == std::string_view::npos) eol = csv.size();
    std::string_view line = csv.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (line.ends_with('\r')) line.remove_suffix(1);
    if (text::trim(line).empty()) continue;
    const std::string where = "ratings line " + std::to_string(line_no);
    const auto fields = split_csv_line(line);
    if (!header_seen) {
      if (fields != std::vector<std::string>{"plan_id", "rater_id", "item_id", "score"}) {
        throw Error(ErrorKind::format, where + ": expected header 'plan_id,rater_id,item_id,score'");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 4) {
      throw Error(ErrorKind::format, where + ": expected 4 fields, got " + std::to_string(fields.size()));
    }
    for (std::size_t i = 0; i < 3; ++i) {
      if (fields[i].empty()) throw Error(ErrorKind::format, where + ": empty field");
    }
    int score = 0;
    const std::string& s = fields[3];
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), score);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
      throw Error(ErrorKind::format, where + ": score '" + s + "' is not an integer");
    }
    RaterScore& rs = grouped[{fields[0], fields[1]}];
    rs.plan_id = fields[0];
    rs.rater_id = fields[1];
    if (!rs.scores.emplace(fields[2], score).second) {
      throw Error(ErrorKind::format, where + ": duplicate score for item '" + fields[2] + "'");
    }
  }
  if (!header_seen) throw Error(ErrorKind::format, "ratings: empty file");
  std::vector<RaterScore> out;
  out.reserve(grouped.size());
  for (auto& [_, rs] : grouped) out.push_back(std::move(rs));
  return out;
}

std::vector<RaterScore> load_ratings_csv(const std::filesystem::path& path) {
  return parse_ratings_csv(read_file(path));
}

std::string subject_of(std::string_view plan_id) {
  std::size_t end = plan_id.size();
  while (end > 0 && plan_id[end - 1] >= '0' && plan_id[end - 1] <= '9') --end;
  return std::string(plan_id.substr(0, end));
}

std::optional<int> lesson_index_of(std::string_view plan_id) {
  const std::string_view digits = plan_id.substr(subject_of(plan_id).size());
  int v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (digits.empty() || ec != std::errc()) return std::nullopt;
  return v;
}

Quartiles quartiles(std::vector<double> values) {
  Quartiles q;
  q.count = values.size();
  if (values.empty()) return q;
  std::sort(values.begin(), values.end());
  auto at = [&](double f) {
    const double h = f * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
  };
  q.min = values.front();
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  q.max = values.back();
  return q;
}

EvaluationReport evaluation_report(const std::vector<RaterScore>& ratings, const Rubric& rubric,
                                   const BandTable& bands, const std::optional<std::set<std::string>>& known_plans) {
  std::map<std::string, std::vector<RaterScore>> by_plan;
  for (const auto& r : ratings) {
    if (known_plans && !known_plans->contains(r.plan_id)) {
      throw Error(ErrorKind::not_found, "ratings reference unknown plan '" + r.plan_id + "'");
    }
    by_plan[r.plan_id].push_back(r);
  }
  if (by_plan.empty()) throw Error(ErrorKind::invalid_argument, "no ratings");

  EvaluationReport rep;
  for (auto& [plan_id, scores] : by_plan) {
    std::sort(scores.begin(), scores.end(),
              [](const RaterScore& a, const RaterScore& b) { return a.rater_id < b.rater_id; });
    rep.records.push_back(average_raters(scores, rubric, bands));
    ++rep.band_counts[rep.records.back().band];
    for (std::size_t i = 0; i < scores.size(); ++i) {
      for (std::size_t j = i + 1; j < scores.size(); ++j) {
        PairAgreement pa{plan_id, scores[i].rater_id, scores[j].rater_id,
                         percent_agreement(scores[i], scores[j]), std::nullopt, std::nullopt};
        try {
          pa.spearman = spearman_correlation(scores[i], scores[j]);
        } catch (const Error&) {
        }
        try {
          pa.kappa = cohen_kappa(scores[i], scores[j]);
        } catch (const Error&) {
        }
        rep.agreements.push_back(std::move(pa));
      }
    }
  }

  std::map<std::string, std::vector<const EvaluationRecord*>> by_subject;
  for (const auto& rec : rep.records) by_subject[subject_of(rec.plan_id)].push_back(&rec);
  for (const auto& [subject, recs] : by_subject) {
    std::vector<double> pct;
    double quality = 0.0;
    for (const auto* r : recs) {
      pct.push_back(r->percentage);
      quality += r->quality_only_percentage;
    }
    const Quartiles q = quartiles(pct);
    double sum = 0.0;
    for (double p : pct) sum += p;
    rep.subjects.push_back({subject, recs.size(), sum / static_cast<double>(recs.size()), q.median, q.min, q.max,
                            quality / static_cast<double>(recs.size())});
  }

  for (auto a = by_subject.begin(); a != by_subject.end(); ++a) {
    for (auto b = std::next(a); b != by_subject.end(); ++b) {
      std::map<int, double> xa, xb;
      for (const auto* r : a->second) {
        if (auto i = lesson_index_of(r->plan_id)) xa[*i] = r->percentage;
      }
      for (const auto* r : b->second) {
        if (auto i = lesson_index_of(r->plan_id)) xb[*i] = r->percentage;
      }
      std::vector<double> x, y;
      for (const auto& [idx, v] : xa) {
        if (auto it = xb.find(idx); it != xb.end()) {
          x.push_back(v);
          y.push_back(it->second);
        }
      }
      if (x.empty()) continue;
      rep.comparisons.push_back({a->first, b->first, x.size(), wilcoxon_signed_rank(x, y)});
    }
  }
  return rep;
}

std::string report_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "plan_id,subject,raters,total_points,percentage,quality_only_percentage,band\n";
  for (const auto& r : report.records) {
    out << r.plan_id << ',' << subject_of(r.plan_id) << ',' << r.rater_count << ',' << fmt(r.total_points, 4) << ','
        << fmt(r.percentage, 4) << ',' << fmt(r.quality_only_percentage, 4) << ',' << to_string(r.band) << '\n';
  }
  return out.str();
}

std::string report_text(const EvaluationReport& report) {
  std::ostringstream out;
  out << "LESSON PLAN EVALUATION\n\n";
  out << "Plans\n";
  for (const auto& r : report.records) {
    out << "  " << r.plan_id << "  " << fmt(r.percentage) << "%  quality-only " << fmt(r.quality_only_percentage)
        << "%  " << to_string(r.band) << "  (" << r.rater_count << (r.rater_count == 1 ? " rater)\n" : " raters)\n");
  }

  out << "\nBand counts\n";
  for (QualityBand b : {QualityBand::excellent, QualityBand::very_good, QualityBand::good, QualityBand::fair,
                        QualityBand::inadequate}) {
    auto it = report.band_counts.find(b);
    out << "  " << to_string(b) << ": " << (it == report.band_counts.end() ? 0 : it->second) << "\n";
  }

  out << "\nInter-rater agreement (rater pairs)\n";
  if (report.agreements.empty()) {
    out << "  n/a (fewer than two raters per plan)\n";
  } else {
    for (const auto& a : report.agreements) {
      out << "  " << a.plan_id << "  " << a.rater_a << " vs " << a.rater_b << "  agreement " << fmt(a.percent_agreement)
          << "%  spearman " << fmt_opt(a.spearman) << "  kappa " << fmt_opt(a.kappa) << "\n";
    }
    std::vector<double> pa, sp, ka;
    for (const auto& a : report.agreements) {
      pa.push_back(a.percent_agreement);
      if (a.spearman) sp.push_back(*a.spearman);
      if (a.kappa) ka.push_back(*a.kappa);
    }
    out << "\n  quartiles          min      q1  median      q3     max     n\n";
    auto row = [&](const char* name, const std::vector<double>& v) {
      const Quartiles q = quartiles(v);
      char buf[160];
      if (q.count == 0) {
        std::snprintf(buf, sizeof buf, "  %-16s %s\n", name, "n/a");
      } else {
        std::snprintf(buf, sizeof buf, "  %-16s %7.3f %7.3f %7.3f %7.3f %7.3f %5zu\n", name, q.min, q.q1, q.median,
                      q.q3, q.max, q.count);
      }
      out << buf;
    };
    row("agreement %", pa);
    row("spearman", sp);
    row("kappa", ka);
  }

  out << "\nSubjects\n";
  for (const auto& s : report.subjects) {
    out << "  " << s.subject << "  plans " << s.plans << "  mean " << fmt(s.mean) << "%  median " << fmt(s.median)
        << "%  min " << fmt(s.min) << "%  max " << fmt(s.max) << "%  quality-only mean " << fmt(s.mean_quality_only)
        << "%\n";
  }

  out << "\nSubject comparisons (Wilcoxon signed-rank, two-sided; plans paired by lesson index)\n";
  if (report.comparisons.empty()) {
    out << "  n/a\n";
  } else {
    for (const auto& c : report.comparisons) {
      out << "  " << c.subject_a << " vs " << c.subject_b << "  pairs " << c.pairs << "  n_effective "
          << c.test.n_effective << "  W " << fmt(c.test.w, 1) << "  p " << fmt(c.test.p_value, 6)
          << (c.test.exact ? " (exact)" : " (normal approx.)") << "\n";
    }
  }
  return out.str();
}

void write_report(const EvaluationReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto write = [&](const char* name, const std::string& content) {
    std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::io, "cannot write " + (dir / name).string());
    f << content;
    if (!f) throw Error(ErrorKind::io, "write failed: " + (dir / name).string());
  };
  write("report.csv", report_csv(report));
  write("report.txt", report_text(report));
}

}  // namespace lessonrag
