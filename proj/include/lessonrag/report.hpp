#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "lessonrag/lpap.hpp"

namespace lessonrag {

/// Reads `plan_id,rater_id,item_id,score` rows, grouped into one RaterScore
/// per (plan, rater) and ordered by plan then rater. Errors name the line.
std::vector<RaterScore> parse_ratings_csv(std::string_view csv);
std::vector<RaterScore> load_ratings_csv(const std::filesystem::path& path);

/// "History07" -> "History".
std::string subject_of(std::string_view plan_id);
/// "History07" -> 7; nullopt without a numeric suffix.
std::optional<int> lesson_index_of(std::string_view plan_id);

struct PairAgreement {
  std::string plan_id;
  std::string rater_a;
  std::string rater_b;
  double percent_agreement = 0.0;
  std::optional<double> spearman;  // empty when undefined (constant scores)
  std::optional<double> kappa;     // empty when chance agreement is 1
};

struct SubjectSummary {
  std::string subject;
  std::size_t plans = 0;
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean_quality_only = 0.0;
};

struct SubjectComparison {
  std::string subject_a;
  std::string subject_b;
  std::size_t pairs = 0;
  WilcoxonResult test;
};

struct Quartiles {
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
  std::size_t count = 0;
};

/// Linear interpolation between order statistics. Empty input gives count 0.
Quartiles quartiles(std::vector<double> values);

struct EvaluationReport {
  std::vector<EvaluationRecord> records;  // by plan_id
  std::vector<PairAgreement> agreements;  // by plan_id, then rater pair
  std::vector<SubjectSummary> subjects;   // by subject
  std::vector<SubjectComparison> comparisons;
  std::map<QualityBand, std::size_t> band_counts;
};

/// Scores every plan, computes pairwise agreement for all rater pairs of each
/// plan and compares subjects pairwise by lesson index. When `known_plans`
/// is given, ratings for any other plan are rejected.
EvaluationReport evaluation_report(const std::vector<RaterScore>& ratings, const Rubric& rubric,
                                   const BandTable& bands = {},
                                   const std::optional<std::set<std::string>>& known_plans = std::nullopt);

std::string report_csv(const EvaluationReport& report);
std::string report_text(const EvaluationReport& report);

/// Writes report.csv and report.txt into `dir`, creating it if needed.
void write_report(const EvaluationReport& report, const std::filesystem::path& dir);

}  // namespace lessonrag
