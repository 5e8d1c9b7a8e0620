#ifndef TROLLGUARD_ANNOTATION_STORE_H_
#define TROLLGUARD_ANNOTATION_STORE_H_

#include <array>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "trollguard/corpus.h"
#include "trollguard/prs_recommender.h"

namespace trollguard {

enum class TaskKind { kPreferenceAnnotation, kModelEvaluation };
enum class TaskStatus { kOpen, kAssigned, kDone, kSkipped };

std::string_view name(TaskKind k);
std::string_view name(TaskStatus s);
// Accepts "preference" / "evaluation" as well as the full kind names.
TaskKind parse_task_kind(std::string_view text);

inline constexpr std::size_t kPreferenceCandidates = 7;
inline constexpr std::size_t kEvaluationCandidates = 3;
inline constexpr std::size_t kDefaultQuota = 200;

struct Task {
  std::string id;
  TaskKind kind = TaskKind::kPreferenceAnnotation;
  Sample sample;
  TaskStatus status = TaskStatus::kOpen;
  std::optional<std::string> assignee;
  // Warm-up tasks are handed out before all others.
  bool warmup = false;
};

using SubmissionPayload = std::variant<AnnotationRecord, EvaluationRecord>;

struct Submission {
  std::string task_id;
  std::string annotator_id;
  SubmissionPayload payload;
  std::string submitted_at;  // filled by the store when empty
};

// Accepted skip reasons for preference tasks.
inline constexpr std::array<std::string_view, 3> kSkipReasons = {"unclear", "non-English",
                                                                 "not-trolling"};

struct AnnotatorProgress {
  std::size_t assigned = 0;  // ever assigned, counts against the quota
  std::size_t done = 0;
  std::size_t skipped = 0;
};

struct Progress {
  std::map<std::string, std::size_t> by_status;
  std::map<std::string, AnnotatorProgress> annotators;
  std::size_t quota = kDefaultQuota;
};

nlohmann::json to_json(const Task& t);
Task task_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Progress& p);
// Payload shape follows the task kind; label parse errors surface as
// kValidationFailure.
Submission submission_from_json(const nlohmann::json& j, TaskKind kind);

// Task assignment and submission state, persisted as an append-only event
// journal (annotations.log.jsonl) plus an optional snapshot. All mutations
// serialize through one writer; reads run concurrently.
class AnnotationStore {
 public:
  struct Options {
    // Empty means in-memory only.
    std::string data_dir;
    std::size_t quota = kDefaultQuota;
    // Snapshot after this many journal events; 0 disables snapshots.
    std::size_t snapshot_every = 0;
    std::function<std::string()> now;
  };

  static constexpr const char* kJournalFile = "annotations.log.jsonl";
  static constexpr const char* kSnapshotFile = "annotations.snapshot.json";

  // Loads the snapshot (if any) and replays the journal after it.
  explicit AnnotationStore(Options options);
  ~AnnotationStore();
  AnnotationStore(const AnnotationStore&) = delete;
  AnnotationStore& operator=(const AnnotationStore&) = delete;

  // One Open task per sample and replica. Throws kCandidateCountMismatch
  // before creating anything if any sample has the wrong candidate count.
  std::vector<Task> create_tasks(const std::vector<Sample>& samples, TaskKind kind,
                                 std::size_t replicas = 1, bool warmup = false);

  // FIFO over Open tasks whose sample the annotator has not seen.
  // kQuotaExceeded once the annotator has been assigned `quota` tasks,
  // kNoTasksAvailable when nothing fits.
  Task next_task(const std::string& annotator_id);

  // Validates and records; returns the resulting status (Done or Skipped).
  TaskStatus submit(const Submission& submission);

  std::optional<Task> task(const std::string& id) const;
  std::vector<Task> tasks() const;
  Progress progress() const;

  // Done submissions only, in submission order.
  std::vector<AnnotationRecord> export_annotations() const;
  std::vector<EvaluationRecord> export_evaluations() const;
  std::string export_jsonl(TaskKind kind) const;

  // (TS, preferred RS) counts maintained as preference submissions arrive.
  ContingencyTable contingency() const;

  void snapshot();
  std::size_t journal_events() const;

 private:
  struct State {
    std::vector<Task> tasks;
    std::map<std::string, std::size_t, std::less<>> index;
    std::map<std::string, std::set<std::string>> seen;  // annotator -> sample ids
    std::map<std::string, AnnotatorProgress> annotators;
    std::vector<Submission> submissions;
    ContingencyTable counts;
  };

  void replay();
  void append(const nlohmann::json& event);
  static void apply(State& s, const nlohmann::json& event);
  void validate(const Task& task, const Submission& submission) const;
  std::string timestamp() const;
  void maybe_snapshot();
  void write_snapshot_locked();
  static nlohmann::json state_to_json(const State& s);
  static State state_from_json(const nlohmann::json& j);

  Options options_;
  mutable std::shared_mutex mu_;
  State state_;
  std::FILE* journal_ = nullptr;
  std::size_t events_ = 0;
  std::size_t events_at_snapshot_ = 0;
};

}  // namespace trollguard

#endif  // TROLLGUARD_ANNOTATION_STORE_H_
