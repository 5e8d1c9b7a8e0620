#ifndef TROLLGUARD_CORPUS_H_
#define TROLLGUARD_CORPUS_H_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "trollguard/prs_recommender.h"
#include "trollguard/taxonomy.h"

namespace trollguard {

struct ThreadContext {
  std::string subreddit;
  std::string title;
  std::string body;

  friend bool operator==(const ThreadContext&, const ThreadContext&) = default;
};

struct Comment {
  std::string id;
  std::string text;
  std::int64_t score = 0;
  bool is_root = true;

  friend bool operator==(const Comment&, const Comment&) = default;
};

// A candidate counter-response shown to annotators. Preference tasks label
// candidates by strategy; evaluation tasks label them by generating model.
struct Candidate {
  std::optional<ResponseStrategy> rs;
  std::optional<std::string> model;
  std::string text;

  friend bool operator==(const Candidate&, const Candidate&) = default;
};

struct Sample {
  std::string id;
  ThreadContext context;
  Comment troll_comment;
  std::optional<TrollingStrategy> ts_label;
  std::vector<Candidate> candidate_crs;
  std::optional<ResponseStrategy> preferred_rs;
  std::optional<std::string> annotator_id;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct AnnotationRecord {
  std::string sample_id;
  std::string annotator_id;
  std::optional<TrollingStrategy> ts_label;
  std::optional<ResponseStrategy> preferred_rs;
  bool skipped = false;
  std::optional<std::string> skip_reason;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

struct EvaluationEntry {
  std::string model_id;
  int rank = 0;
  int constructiveness = 0;
  int supportiveness = 0;
  ResponseStrategy perceived_rs = ResponseStrategy::kEngage;

  friend bool operator==(const EvaluationEntry&, const EvaluationEntry&) = default;
};

struct EvaluationRecord {
  std::string sample_id;
  std::string evaluator_id;
  // TS of the evaluated sample, carried along for perceived-RS breakdowns.
  std::optional<TrollingStrategy> ts_label;
  std::vector<EvaluationEntry> entries;

  friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

enum class FilterReason { kOk, kTooShort, kTooLong, kDeleted, kExternalMedia };

std::string_view name(FilterReason r);

struct FilterVerdict {
  bool keep = true;
  FilterReason reason = FilterReason::kOk;

  friend bool operator==(const FilterVerdict&, const FilterVerdict&) = default;
};

inline constexpr std::size_t kMinTextLength = 12;
inline constexpr std::size_t kMaxTextLength = 512;

// Keep iff 12 <= length <= 512 (Unicode scalar values), not a deletion
// tombstone, and free of links or embedded media.
FilterVerdict ingest_filter(std::string_view text);

// --- JSON-Lines persistence -------------------------------------------------

nlohmann::json to_json(const Sample& s);
Sample sample_from_json(const nlohmann::json& j);

nlohmann::json to_json(const AnnotationRecord& r);
AnnotationRecord annotation_from_json(const nlohmann::json& j);

nlohmann::json to_json(const EvaluationRecord& r);
EvaluationRecord evaluation_from_json(const nlohmann::json& j);

// Malformed lines raise kMalformedRecord with the 1-based line number set.
std::vector<Sample> parse_dataset(std::string_view jsonl);
std::string serialize_dataset(const std::vector<Sample>& samples);
std::vector<Sample> load_dataset(const std::string& path);
void save_dataset(const std::vector<Sample>& samples, const std::string& path);

std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl);
std::vector<AnnotationRecord> load_annotations(const std::string& path);
std::string serialize_annotations(const std::vector<AnnotationRecord>& records);

std::vector<EvaluationRecord> parse_evaluations(std::string_view jsonl);
std::vector<EvaluationRecord> load_evaluations(const std::string& path);
std::string serialize_evaluations(const std::vector<EvaluationRecord>& records);

// Counts (ts_label, preferred_rs) over non-skipped records. Skipped records
// are rejected with kPreconditionViolation.
ContingencyTable build_contingency(const std::vector<AnnotationRecord>& records);

// --- Thread dump ingestion ---------------------------------------------------

struct IngestOptions {
  // Root comments with a score at or below this are treated as downvoted.
  std::int64_t max_score = -1;
  bool require_root = true;
};

struct IngestReport {
  std::size_t threads = 0;
  std::size_t comments_seen = 0;
  std::size_t kept = 0;
  std::map<std::string, std::size_t> dropped;  // reason -> count
};

// Dump format: one thread per line,
//   {"subreddit", "title", "selftext" | "body", "comments": [
//      {"id", "body", "score", "is_root" | "parent_id"}]}
// Post bodies and comments both go through ingest_filter.
std::vector<Sample> ingest_dump(std::string_view jsonl, const IngestOptions& options,
                                IngestReport* report = nullptr);

}  // namespace trollguard

#endif  // TROLLGUARD_CORPUS_H_
