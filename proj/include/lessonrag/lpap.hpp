#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lessonrag/lesson_plan.hpp"

namespace lessonrag {

enum class ItemKind { presence, quality };

std::string_view to_string(ItemKind kind) noexcept;

struct RubricItem {
  std::string item_id;
  std::string text;
  ItemKind kind = ItemKind::quality;
  int max_points = 2;
  /// For presence items: the plan element whose existence earns the points,
  /// e.g. "general.topic", "preparation.materials" or "procedure.phases".
  std::string presence_check;

  bool operator==(const RubricItem&) const = default;
};

class Rubric {
 public:
  /// Throws ValidationError for an empty list, duplicate ids or max_points < 1.
  explicit Rubric(std::vector<RubricItem> items);

  const std::vector<RubricItem>& items() const noexcept { return items_; }
  int max_total() const noexcept { return max_total_; }
  const RubricItem* find(std::string_view item_id) const;
  std::size_t quality_item_count() const noexcept;

  bool operator==(const Rubric&) const = default;

 private:
  std::vector<RubricItem> items_;
  int max_total_ = 0;
};

/// 22 items worth 2 points each (8 presence, 14 quality), 44 points in total.
const Rubric& default_rubric();

/// JSON array of `{item_id, text, kind, max_points[, presence_check]}`.
Rubric parse_rubric(std::string_view json_text);
Rubric load_rubric(const std::filesystem::path& path);
std::string rubric_to_json(const Rubric& rubric);

struct RaterScore {
  std::string plan_id;
  std::string rater_id;
  std::map<std::string, int> scores;  // item_id -> points
};

/// Throws ValidationError unless every rubric item is scored within
/// [0, max_points] and no unknown items appear.
void check_rater_score(const RaterScore& score, const Rubric& rubric);

enum class QualityBand { inadequate, fair, good, very_good, excellent };

std::string_view to_string(QualityBand band) noexcept;

/// inadequate < fair_from <= fair < good_from <= good <= very_good_above
/// < very_good <= excellent_above < excellent.
struct BandTable {
  double fair_from = 50.0;
  double good_from = 65.0;
  double very_good_above = 80.0;
  double excellent_above = 90.0;
};

QualityBand classify_band(double percentage, const BandTable& bands = {});

struct EvaluationRecord {
  std::string plan_id;
  std::map<std::string, double> averaged_scores;
  double total_points = 0.0;
  double percentage = 0.0;
  double quality_only_percentage = 0.0;
  QualityBand band = QualityBand::inadequate;
  std::size_t rater_count = 0;
};

/// Per-item mean over raters of one plan. All raters must cover the rubric.
EvaluationRecord average_raters(const std::vector<RaterScore>& scores, const Rubric& rubric,
                                const BandTable& bands = {});

/// 100 * total / max_total. Throws for a total outside [0, max_total].
double score_percentage(double total_points, const Rubric& rubric);

/// Percentage over quality items only. Throws when the rubric has none.
double quality_only_percentage(const std::map<std::string, double>& scores, const Rubric& rubric);

/// Points for each presence item, read off the plan itself.
std::map<std::string, int> score_presence_items(const LessonPlan& plan, const Rubric& rubric);

// Rater-pair statistics. Both raters must score the same item set; values
// are compared item by item in item_id order.
double percent_agreement(const RaterScore& a, const RaterScore& b);
double spearman_correlation(const RaterScore& a, const RaterScore& b);
double cohen_kappa(const RaterScore& a, const RaterScore& b);

double percent_agreement(std::span<const int> a, std::span<const int> b);
/// Pearson correlation of average ranks. Throws when either side is constant.
double spearman_correlation(std::span<const double> a, std::span<const double> b);
/// Throws when chance agreement is 1.
double cohen_kappa(std::span<const int> a, std::span<const int> b);

/// Average ranks (1-based) with ties sharing the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

struct WilcoxonResult {
  double w = 0.0;         // min(T+, T-)
  double t_plus = 0.0;
  double t_minus = 0.0;
  double p_value = 1.0;   // two-sided
  std::size_t n_effective = 0;
  bool exact = true;
};

inline constexpr std::size_t kWilcoxonExactLimit = 20;

/// Paired two-sided signed-rank test. Zero differences are dropped; tied
/// absolute differences share average ranks. Exact null distribution for
/// n_effective <= 20, normal approximation with tie correction above.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

}  // namespace lessonrag
