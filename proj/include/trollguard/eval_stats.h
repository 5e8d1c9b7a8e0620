#ifndef TROLLGUARD_EVAL_STATS_H_
#define TROLLGUARD_EVAL_STATS_H_

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace trollguard {

struct TestResult {
  double statistic = 0.0;  // chi-square for Friedman, Z for Wilcoxon
  std::optional<int> df;   // Friedman only
  double p_value = 1.0;
  std::size_t n = 0;
  std::string method;
  std::optional<double> w_plus;  // Wilcoxon only
};

inline constexpr const char* kFriedman = "friedman";
inline constexpr const char* kWilcoxonExact = "wilcoxon-exact";
inline constexpr const char* kWilcoxonNormal = "wilcoxon-normal";

// Largest number of nonzero differences for which the exact null
// distribution is enumerated.
inline constexpr std::size_t kWilcoxonExactMaxN = 15;

// 1-based ranks, ties share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct FriedmanResult {
  TestResult test;
  std::vector<double> mean_ranks;  // per column, rank 1 = smallest score
};

// scores[i][j]: block i, treatment j. Throws kDegenerateInput for N < 2,
// k < 2 or ragged rows.
FriedmanResult friedman(const std::vector<std::vector<double>>& scores);

// d = x - y. Z > 0 when x tends to exceed y. Throws kNoNonzeroDifferences
// when every difference is zero, kInvalidArgument on length mismatch.
TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y);

// Exact two-sided p for the observed W+ given the (possibly tied) ranks.
double wilcoxon_exact_p(std::span<const double> ranks, double w_plus);

// Throw kDomainError for x < 0, df < 1 or non-finite input.
double chi2_sf(double x, int df);
double normal_sf(double z);

// --- Significance report -----------------------------------------------------

enum class ScoreDimension { kPreference, kConstructiveness, kSupportiveness };

std::string_view name(ScoreDimension d);
ScoreDimension parse_score_dimension(std::string_view text);

// Paired scores: rows are (sample, evaluator) observations, one column per model.
struct ScoreMatrix {
  std::vector<std::string> models;
  std::vector<std::string> row_keys;
  std::vector<std::vector<double>> rows;
};

// Columns named sample, sample_id, evaluator or evaluator_id are row keys;
// every other column is a model.
ScoreMatrix parse_scores_csv(std::string_view csv);
ScoreMatrix load_scores_csv(const std::string& path);

struct ModelSummary {
  std::string model;
  std::size_t n = 0;
  double mean_rank = 0.0;
  double mean = 0.0;
  double std = 0.0;
};

struct PairwiseResult {
  std::string model_i;
  std::string model_j;
  TestResult test;
};

struct SignificanceReport {
  ScoreDimension dimension = ScoreDimension::kPreference;
  std::vector<ModelSummary> models;
  TestResult omnibus;
  // All i < j pairs in column order.
  std::vector<PairwiseResult> pairwise;
};

SignificanceReport significance_report(const ScoreMatrix& scores, ScoreDimension dimension);

nlohmann::json to_json(const TestResult& r);
nlohmann::json to_json(const SignificanceReport& r);

}  // namespace trollguard

#endif  // TROLLGUARD_EVAL_STATS_H_
