#ifndef TROLLGUARD_PRS_RECOMMENDER_H_
#define TROLLGUARD_PRS_RECOMMENDER_H_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <variant>

#include "trollguard/taxonomy.h"

namespace trollguard {

struct Sample;

// 6 x 7 counts of (trolling strategy, preferred response strategy).
class ContingencyTable {
 public:
  using Row = std::array<std::int64_t, kNumRS>;

  ContingencyTable() = default;
  explicit ContingencyTable(std::array<Row, kNumTS> counts, std::string provenance = {});

  std::int64_t at(TrollingStrategy ts, ResponseStrategy rs) const {
    return counts_[index_of(ts)][index_of(rs)];
  }
  const Row& row(TrollingStrategy ts) const { return counts_[index_of(ts)]; }
  const std::array<Row, kNumTS>& counts() const { return counts_; }

  void add(TrollingStrategy ts, ResponseStrategy rs, std::int64_t n = 1);

  std::int64_t row_total(TrollingStrategy ts) const;
  std::int64_t grand_total() const;

  const std::string& provenance() const { return provenance_; }
  void set_provenance(std::string p) { provenance_ = std::move(p); }

  // CSV with a header row of RS names and one row per TS, labels first.
  static ContingencyTable from_csv(std::string_view csv, std::string provenance = {});
  static ContingencyTable load_csv(const std::string& path);
  std::string to_csv() const;

  // The table shipped with the project (data/preference_table.csv).
  static ContingencyTable builtin();

  friend bool operator==(const ContingencyTable& a, const ContingencyTable& b) {
    return a.counts_ == b.counts_;
  }

 private:
  std::array<Row, kNumTS> counts_{};
  std::string provenance_;
};

using PreferenceDistribution = std::array<double, kNumRS>;

// Most frequent RS in the ts row; ties go to the lowest ordinal.
// Throws kEmptyRow if the row is all zeros.
ResponseStrategy map_predict(TrollingStrategy ts, const ContingencyTable& table);

// Nudging when the nudging mass is >= the confrontational mass.
CoarseRS coarse_predict(TrollingStrategy ts, const ContingencyTable& table);

// Additively smoothed row: (count + alpha) / (row_total + 7 alpha).
PreferenceDistribution preference_distribution(TrollingStrategy ts,
                                               const ContingencyTable& table,
                                               double alpha);

enum class Granularity { kFine, kCoarse };

// Accuracy a MAP predictor reaches against the table's own labels.
double self_consistency_accuracy(const ContingencyTable& table, Granularity g);

struct EmpiricalBackend {
  ContingencyTable table;
  double alpha = 1.0;
};

// Posts {subreddit, title, post, comment, ts} as JSON to `endpoint` and reads
// back a strategy name. `post` may be swapped out (tests, custom clients);
// when empty, a plain HTTP client is used.
struct ExternalBackend {
  using Poster = std::function<std::string(const std::string& url, const std::string& body)>;
  std::string endpoint;
  Poster post;
  double timeout_seconds = 30.0;
};

using PredictorBackend = std::variant<EmpiricalBackend, ExternalBackend>;

ResponseStrategy predict(const Sample& sample, TrollingStrategy ts,
                         const PredictorBackend& backend);

std::string external_request_body(const Sample& sample, TrollingStrategy ts);
ResponseStrategy parse_external_reply(std::string_view body);

}  // namespace trollguard

#endif  // TROLLGUARD_PRS_RECOMMENDER_H_
