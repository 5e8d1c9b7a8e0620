#ifndef TROLLGUARD_EVAL_METRICS_H_
#define TROLLGUARD_EVAL_METRICS_H_

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "trollguard/corpus.h"
#include "trollguard/prs_recommender.h"
#include "trollguard/taxonomy.h"

namespace trollguard {

// Probability vector over named cells. Construction validates
// nonnegativity and a unit sum (1e-9).
class Distribution {
 public:
  Distribution(std::vector<std::string> labels, std::vector<double> probs);
  // Normalizes nonnegative counts; throws kEmptyInput when they sum to 0.
  static Distribution from_counts(std::vector<std::string> labels, std::span<const double> counts);

  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }
  double operator[](std::size_t i) const { return probs_[i]; }
  // Probability of the named cell; throws kInvalidArgument if absent.
  double at(std::string_view label) const;

 private:
  std::vector<std::string> labels_;
  std::vector<double> probs_;
};

using LabelPair = std::pair<TrollingStrategy, ResponseStrategy>;

// Fine: 42 cells "TS/RS" in taxonomy order. Coarse: 4 cells
// "Overt/Nudging", "Overt/Confrontational", "Covert/Nudging", "Covert/Confrontational".
Distribution joint_distribution(const std::vector<LabelPair>& pairs, Granularity g);

// Sums fine cells into their coarse quadrants.
Distribution collapse_to_coarse(const Distribution& fine);

std::vector<std::string> joint_labels(Granularity g);

// All divergences use log base 2.
double kl(std::span<const double> p, std::span<const double> q);
double jsd(std::span<const double> p, std::span<const double> q);
double hellinger(std::span<const double> p, std::span<const double> q);

// Label-checked variants; mismatched label lists throw kInvalidArgument.
double kl(const Distribution& p, const Distribution& q);
double jsd(const Distribution& p, const Distribution& q);
double hellinger(const Distribution& p, const Distribution& q);

struct DistancePair {
  double jsd = 0.0;
  double hd = 0.0;
};

struct AlignmentReport {
  DistancePair coarse;
  DistancePair fine;
};

AlignmentReport alignment_report(const std::vector<LabelPair>& model_pairs,
                                 const std::vector<LabelPair>& human_pairs);

struct WinMatrix {
  std::vector<std::string> models;
  std::vector<std::vector<double>> win;   // win[i][j]: i ranked above j
  std::vector<std::vector<double>> ties;  // ties[i][j]
  std::size_t records = 0;
};

// win[i][j] = #(rank_i < rank_j) / #records. Models are ordered as in the
// first record; every record must rank exactly that set.
WinMatrix rank_to_win_matrix(const std::vector<EvaluationRecord>& records);

enum class LikertDimension { kConstructiveness, kSupportiveness };
std::string_view name(LikertDimension d);
LikertDimension parse_likert_dimension(std::string_view text);

struct LikertStats {
  std::string model;
  double mean = 0.0;
  double std = 0.0;  // sample (n - 1) standard deviation
  std::size_t n = 0;
};

// Per model, in first-seen order. Scores outside 1..5 throw kOutOfRangeScore.
std::vector<LikertStats> likert_summary(const std::vector<EvaluationRecord>& records,
                                        LikertDimension dimension);

struct PerceivedHistogram {
  std::vector<std::string> models;
  // histogram[model][ts] = RS distribution, absent when no record has that TS.
  std::map<std::string, std::array<std::optional<std::array<double, kNumRS>>, kNumTS>> rows;
  std::map<std::string, std::array<std::size_t, kNumTS>> counts;
};

// Records without a TS are skipped; kEmptyInput if nothing remains.
PerceivedHistogram perceived_rs_histogram(const std::vector<EvaluationRecord>& records);

// JSON-Lines of (TS, RS) labels. TS from "ts" or "ts_label"; RS from "rs",
// "preferred_rs", "perceived_rs", "prs" or "declared_rs" (first present).
// Lines where either is null or absent are counted in `skipped` and ignored.
std::vector<LabelPair> parse_label_pairs(std::string_view jsonl, std::size_t* skipped = nullptr);
std::vector<LabelPair> load_label_pairs(const std::string& path, std::size_t* skipped = nullptr);

// --- Plot-ready CSV -----------------------------------------------------------

std::string win_matrix_csv(const WinMatrix& m);
std::string likert_csv(const std::vector<LikertStats>& stats);
std::string perceived_histogram_csv(const PerceivedHistogram& h);

}  // namespace trollguard

#endif  // TROLLGUARD_EVAL_METRICS_H_
