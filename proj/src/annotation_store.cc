#include "trollguard/annotation_store.h"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <mutex>

#include "trollguard/error.h"
#include "trollguard/text.h"

namespace trollguard {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

[[noreturn]] void invalid(const std::string& detail) {
  throw Error(Errc::kValidationFailure, detail);
}

std::string task_id(std::size_t n) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "task-%06zu", n);
  return buf;
}

TaskStatus parse_status(std::string_view text) {
  for (auto s : {TaskStatus::kOpen, TaskStatus::kAssigned, TaskStatus::kDone, TaskStatus::kSkipped}) {
    if (text == name(s)) return s;
  }
  throw Error(Errc::kMalformedRecord, "unknown task status " + std::string(text));
}

json submission_to_json(const Submission& s) {
  json j = {{"task_id", s.task_id}, {"annotator_id", s.annotator_id}, {"submitted_at", s.submitted_at}};
  if (const auto* a = std::get_if<AnnotationRecord>(&s.payload)) {
    j["kind"] = name(TaskKind::kPreferenceAnnotation);
    j["payload"] = to_json(*a);
  } else {
    j["kind"] = name(TaskKind::kModelEvaluation);
    j["payload"] = to_json(std::get<EvaluationRecord>(s.payload));
  }
  return j;
}

Submission stored_submission_from_json(const json& j) {
  Submission s;
  s.task_id = j.at("task_id").get<std::string>();
  s.annotator_id = j.at("annotator_id").get<std::string>();
  s.submitted_at = j.value("submitted_at", "");
  if (parse_task_kind(j.at("kind").get<std::string>()) == TaskKind::kPreferenceAnnotation) {
    s.payload = annotation_from_json(j.at("payload"));
  } else {
    s.payload = evaluation_from_json(j.at("payload"));
  }
  return s;
}

bool is_skip(const Submission& s) {
  const auto* a = std::get_if<AnnotationRecord>(&s.payload);
  return a != nullptr && a->skipped;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

}  // namespace

std::string_view name(TaskKind k) {
  return k == TaskKind::kPreferenceAnnotation ? "PreferenceAnnotation" : "ModelEvaluation";
}

std::string_view name(TaskStatus s) {
  switch (s) {
    case TaskStatus::kOpen:
      return "Open";
    case TaskStatus::kAssigned:
      return "Assigned";
    case TaskStatus::kDone:
      return "Done";
    case TaskStatus::kSkipped:
      return "Skipped";
  }
  return "Open";
}

TaskKind parse_task_kind(std::string_view text) {
  const auto t = trim(text);
  if (iequals(t, "preference") || iequals(t, "PreferenceAnnotation") || iequals(t, "annotation")) {
    return TaskKind::kPreferenceAnnotation;
  }
  if (iequals(t, "evaluation") || iequals(t, "ModelEvaluation")) return TaskKind::kModelEvaluation;
  throw Error(Errc::kInvalidArgument, "unknown task kind: " + std::string(text));
}

json to_json(const Task& t) {
  return {{"id", t.id},
          {"kind", name(t.kind)},
          {"sample", to_json(t.sample)},
          {"status", name(t.status)},
          {"assignee", t.assignee ? json(*t.assignee) : json(nullptr)},
          {"warmup", t.warmup}};
}

Task task_from_json(const json& j) {
  Task t;
  t.id = j.at("id").get<std::string>();
  t.kind = parse_task_kind(j.at("kind").get<std::string>());
  t.sample = sample_from_json(j.at("sample"));
  t.status = parse_status(j.value("status", "Open"));
  if (j.contains("assignee") && j["assignee"].is_string()) t.assignee = j["assignee"].get<std::string>();
  t.warmup = j.value("warmup", false);
  return t;
}

json to_json(const Progress& p) {
  json annotators = json::object();
  for (const auto& [id, a] : p.annotators) {
    annotators[id] = {{"assigned", a.assigned},
                      {"done", a.done},
                      {"skipped", a.skipped},
                      {"remaining_quota", a.assigned >= p.quota ? 0 : p.quota - a.assigned}};
  }
  return {{"tasks", p.by_status}, {"annotators", annotators}, {"quota", p.quota}};
}

Submission submission_from_json(const json& j, TaskKind kind) {
  if (!j.is_object()) invalid("submission must be a JSON object");
  Submission s;
  try {
    s.task_id = j.at("task_id").get<std::string>();
    s.annotator_id = j.at("annotator_id").get<std::string>();
    json payload = j.contains("payload") ? j.at("payload") : j;
    if (!payload.is_object()) invalid("payload must be a JSON object");
    if (!payload.contains("sample_id")) payload["sample_id"] = "";
    if (kind == TaskKind::kPreferenceAnnotation) {
      if (!payload.contains("annotator_id")) payload["annotator_id"] = s.annotator_id;
      s.payload = annotation_from_json(payload);
    } else {
      if (!payload.contains("evaluator_id")) payload["evaluator_id"] = s.annotator_id;
      s.payload = evaluation_from_json(payload);
    }
  } catch (const Error& e) {
    if (e.code() == Errc::kValidationFailure) throw;
    invalid(e.detail());
  } catch (const json::exception& e) {
    invalid(e.what());
  }
  return s;
}

AnnotationStore::AnnotationStore(Options options) : options_(std::move(options)) {
  if (!options_.now) options_.now = utc_now;
  if (options_.data_dir.empty()) return;
  fs::create_directories(options_.data_dir);
  replay();
  const std::string path = (fs::path(options_.data_dir) / kJournalFile).string();
  journal_ = std::fopen(path.c_str(), "ab");
  if (journal_ == nullptr) throw Error(Errc::kIoFailure, "cannot open journal " + path);
}

AnnotationStore::~AnnotationStore() {
  if (journal_ != nullptr) std::fclose(journal_);
}

void AnnotationStore::replay() {
  const fs::path dir(options_.data_dir);
  std::size_t skip = 0;
  if (fs::exists(dir / kSnapshotFile)) {
    const json snap = json::parse(read_file((dir / kSnapshotFile).string()), nullptr, false);
    if (snap.is_discarded() || !snap.is_object()) {
      throw Error(Errc::kMalformedRecord, "corrupt snapshot");
    }
    state_ = state_from_json(snap.at("state"));
    skip = snap.at("journal_events").get<std::size_t>();
  }
  const fs::path journal = dir / kJournalFile;
  if (!fs::exists(journal)) {
    events_ = events_at_snapshot_ = skip;
    return;
  }
  const std::string text = read_file(journal.string());
  const auto lines = split_lines(text);
  std::size_t count = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const json event = json::parse(lines[i], nullptr, false);
    if (event.is_discarded()) {
      // A torn final line from an interrupted append is dropped.
      const bool last = i + 1 == lines.size() && !text.empty() && text.back() != '\n';
      if (last) break;
      throw Error(Errc::kMalformedRecord, "unreadable journal event").with_line(i + 1);
    }
    ++count;
    if (count <= skip) continue;
    try {
      apply(state_, event);
    } catch (const Error& e) {
      throw Error(e.code(), e.detail()).with_line(i + 1);
    } catch (const std::exception& e) {
      throw Error(Errc::kMalformedRecord, e.what()).with_line(i + 1);
    }
  }
  if (!text.empty() && text.back() != '\n') {
    // Rewrite without the torn tail so new events start on a fresh line.
    std::string clean;
    for (std::size_t i = 0, kept = 0; i < lines.size() && kept < count; ++i) {
      if (trim(lines[i]).empty()) continue;
      clean += lines[i];
      clean += '\n';
      ++kept;
    }
    write_file_atomic(journal.string(), clean);
  }
  events_ = std::max(count, skip);
  events_at_snapshot_ = skip;
}

void AnnotationStore::append(const json& event) {
  ++events_;
  if (journal_ == nullptr) return;
  const std::string line = event.dump() + "\n";
  if (std::fwrite(line.data(), 1, line.size(), journal_) != line.size() ||
      std::fflush(journal_) != 0 || ::fsync(::fileno(journal_)) != 0) {
    --events_;
    throw Error(Errc::kIoFailure, "journal write failed");
  }
}

void AnnotationStore::apply(State& s, const json& event) {
  const std::string type = event.at("event").get<std::string>();
  if (type == "task_created") {
    Task t = task_from_json(event.at("task"));
    t.status = TaskStatus::kOpen;
    t.assignee.reset();
    if (s.index.count(t.id)) throw Error(Errc::kMalformedRecord, "duplicate task id " + t.id);
    s.index[t.id] = s.tasks.size();
    s.tasks.push_back(std::move(t));
  } else if (type == "assigned") {
    Task& t = s.tasks.at(s.index.at(event.at("task_id").get<std::string>()));
    const std::string who = event.at("annotator").get<std::string>();
    t.status = TaskStatus::kAssigned;
    t.assignee = who;
    s.seen[who].insert(t.sample.id);
    ++s.annotators[who].assigned;
  } else if (type == "submitted") {
    Submission sub = stored_submission_from_json(event.at("submission"));
    Task& t = s.tasks.at(s.index.at(sub.task_id));
    auto& progress = s.annotators[sub.annotator_id];
    if (is_skip(sub)) {
      t.status = TaskStatus::kSkipped;
      ++progress.skipped;
    } else {
      t.status = TaskStatus::kDone;
      ++progress.done;
      if (const auto* a = std::get_if<AnnotationRecord>(&sub.payload)) {
        s.counts.add(*a->ts_label, *a->preferred_rs);
      }
    }
    s.submissions.push_back(std::move(sub));
  } else {
    throw Error(Errc::kMalformedRecord, "unknown journal event " + type);
  }
}

std::vector<Task> AnnotationStore::create_tasks(const std::vector<Sample>& samples, TaskKind kind,
                                                std::size_t replicas, bool warmup) {
  const std::size_t expected =
      kind == TaskKind::kPreferenceAnnotation ? kPreferenceCandidates : kEvaluationCandidates;
  for (const auto& sample : samples) {
    if (sample.candidate_crs.size() != expected) {
      throw Error(Errc::kCandidateCountMismatch,
                  "sample " + sample.id + " has " + std::to_string(sample.candidate_crs.size()) +
                      " candidates, " + std::string(name(kind)) + " needs " +
                      std::to_string(expected));
    }
  }
  if (replicas == 0) throw Error(Errc::kInvalidArgument, "replicas must be >= 1");

  std::unique_lock lock(mu_);
  std::vector<Task> created;
  for (const auto& sample : samples) {
    for (std::size_t r = 0; r < replicas; ++r) {
      Task t;
      t.id = task_id(state_.tasks.size() + 1);
      t.kind = kind;
      t.sample = sample;
      t.warmup = warmup;
      const json event = {{"event", "task_created"}, {"task", to_json(t)}, {"at", timestamp()}};
      append(event);
      apply(state_, event);
      created.push_back(std::move(t));
    }
  }
  maybe_snapshot();
  return created;
}

Task AnnotationStore::next_task(const std::string& annotator_id) {
  if (trim(annotator_id).empty()) throw Error(Errc::kInvalidArgument, "annotator id is empty");
  std::unique_lock lock(mu_);
  const auto progress = state_.annotators.find(annotator_id);
  const std::size_t assigned = progress == state_.annotators.end() ? 0 : progress->second.assigned;
  if (assigned >= options_.quota) {
    throw Error(Errc::kQuotaExceeded, annotator_id + " reached the quota of " +
                                          std::to_string(options_.quota) + " tasks");
  }
  const auto seen_it = state_.seen.find(annotator_id);
  auto unseen = [&](const Task& t) {
    return seen_it == state_.seen.end() || !seen_it->second.count(t.sample.id);
  };
  const Task* pick = nullptr;
  for (const auto& t : state_.tasks) {
    if (t.status != TaskStatus::kOpen || !unseen(t)) continue;
    if (t.warmup) {
      pick = &t;
      break;
    }
    if (pick == nullptr) pick = &t;
  }
  if (pick == nullptr) throw Error(Errc::kNoTasksAvailable, "no open task for " + annotator_id);

  const json event = {
      {"event", "assigned"}, {"task_id", pick->id}, {"annotator", annotator_id}, {"at", timestamp()}};
  const std::string id = pick->id;
  append(event);
  apply(state_, event);
  maybe_snapshot();
  return state_.tasks[state_.index.at(id)];
}

void AnnotationStore::validate(const Task& task, const Submission& sub) const {
  if (task.kind == TaskKind::kPreferenceAnnotation) {
    const auto* a = std::get_if<AnnotationRecord>(&sub.payload);
    if (a == nullptr) invalid("preference task needs an annotation payload");
    if (a->skipped) {
      if (!a->skip_reason) invalid("skip needs a reason");
      const bool known = std::any_of(kSkipReasons.begin(), kSkipReasons.end(),
                                     [&](std::string_view r) { return iequals(r, *a->skip_reason); });
      if (!known) invalid("unknown skip reason: " + *a->skip_reason);
      return;
    }
    if (!a->ts_label || !a->preferred_rs) invalid("ts_label and preferred_rs are required");
    const auto& cands = task.sample.candidate_crs;
    const bool labeled = std::all_of(cands.begin(), cands.end(), [](const Candidate& c) { return c.rs; });
    if (labeled && std::none_of(cands.begin(), cands.end(),
                                [&](const Candidate& c) { return c.rs == a->preferred_rs; })) {
      invalid("preferred_rs is not among the task's candidates");
    }
    return;
  }

  const auto* e = std::get_if<EvaluationRecord>(&sub.payload);
  if (e == nullptr) invalid("evaluation task needs an evaluation payload");
  const auto& cands = task.sample.candidate_crs;
  const std::size_t k = cands.size();
  if (e->entries.size() != k) {
    invalid("expected " + std::to_string(k) + " entries, got " + std::to_string(e->entries.size()));
  }
  std::set<std::string> models;
  std::vector<int> ranks;
  for (const auto& entry : e->entries) {
    if (!models.insert(entry.model_id).second) invalid("duplicate model " + entry.model_id);
    ranks.push_back(entry.rank);
    if (entry.constructiveness < 1 || entry.constructiveness > 5) {
      invalid("constructiveness out of range 1..5 for " + entry.model_id);
    }
    if (entry.supportiveness < 1 || entry.supportiveness > 5) {
      invalid("supportiveness out of range 1..5 for " + entry.model_id);
    }
  }
  std::sort(ranks.begin(), ranks.end());
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    if (ranks[i] != static_cast<int>(i + 1)) invalid("rank not a permutation");
  }
  std::set<std::string> expected;
  for (const auto& c : cands) {
    if (c.model) expected.insert(*c.model);
  }
  if (expected.size() == k && expected != models) invalid("model ids do not match the task");
}

TaskStatus AnnotationStore::submit(const Submission& submission) {
  std::unique_lock lock(mu_);
  const auto it = state_.index.find(submission.task_id);
  if (it == state_.index.end()) {
    throw Error(Errc::kNotAssigned, "unknown task " + submission.task_id);
  }
  const Task& task = state_.tasks[it->second];
  const bool mine = task.assignee == submission.annotator_id;
  if (mine && (task.status == TaskStatus::kDone || task.status == TaskStatus::kSkipped)) {
    throw Error(Errc::kDuplicateSubmission, "task " + task.id + " already submitted");
  }
  if (!mine || task.status != TaskStatus::kAssigned) {
    throw Error(Errc::kNotAssigned,
                "task " + task.id + " is not assigned to " + submission.annotator_id);
  }

  Submission sub = submission;
  if (sub.submitted_at.empty()) sub.submitted_at = timestamp();
  std::visit(
      [&](auto& p) {
        if (!p.sample_id.empty() && p.sample_id != task.sample.id) {
          invalid("sample_id does not match task " + task.id);
        }
        p.sample_id = task.sample.id;
      },
      sub.payload);
  if (auto* a = std::get_if<AnnotationRecord>(&sub.payload)) {
    a->annotator_id = sub.annotator_id;
    if (a->skip_reason) {
      for (auto r : kSkipReasons) {
        if (iequals(r, *a->skip_reason)) a->skip_reason = std::string(r);
      }
    }
  } else {
    auto& e = std::get<EvaluationRecord>(sub.payload);
    e.evaluator_id = sub.annotator_id;
    e.ts_label = task.sample.ts_label;
  }
  validate(task, sub);

  const json event = {{"event", "submitted"}, {"submission", submission_to_json(sub)}};
  append(event);
  apply(state_, event);
  const TaskStatus status = state_.tasks[it->second].status;
  maybe_snapshot();
  return status;
}

std::optional<Task> AnnotationStore::task(const std::string& id) const {
  std::shared_lock lock(mu_);
  const auto it = state_.index.find(id);
  if (it == state_.index.end()) return std::nullopt;
  return state_.tasks[it->second];
}

std::vector<Task> AnnotationStore::tasks() const {
  std::shared_lock lock(mu_);
  return state_.tasks;
}

Progress AnnotationStore::progress() const {
  std::shared_lock lock(mu_);
  Progress p;
  p.quota = options_.quota;
  for (auto s : {TaskStatus::kOpen, TaskStatus::kAssigned, TaskStatus::kDone, TaskStatus::kSkipped}) {
    p.by_status[std::string(name(s))] = 0;
  }
  for (const auto& t : state_.tasks) ++p.by_status[std::string(name(t.status))];
  p.annotators = state_.annotators;
  return p;
}

std::vector<AnnotationRecord> AnnotationStore::export_annotations() const {
  std::shared_lock lock(mu_);
  std::vector<AnnotationRecord> out;
  for (const auto& s : state_.submissions) {
    const auto* a = std::get_if<AnnotationRecord>(&s.payload);
    if (a != nullptr && !a->skipped) out.push_back(*a);
  }
  return out;
}

std::vector<EvaluationRecord> AnnotationStore::export_evaluations() const {
  std::shared_lock lock(mu_);
  std::vector<EvaluationRecord> out;
  for (const auto& s : state_.submissions) {
    if (const auto* e = std::get_if<EvaluationRecord>(&s.payload)) out.push_back(*e);
  }
  return out;
}

std::string AnnotationStore::export_jsonl(TaskKind kind) const {
  return kind == TaskKind::kPreferenceAnnotation ? serialize_annotations(export_annotations())
                                                 : serialize_evaluations(export_evaluations());
}

ContingencyTable AnnotationStore::contingency() const {
  std::shared_lock lock(mu_);
  return state_.counts;
}

std::size_t AnnotationStore::journal_events() const {
  std::shared_lock lock(mu_);
  return events_;
}

std::string AnnotationStore::timestamp() const { return options_.now(); }

void AnnotationStore::maybe_snapshot() {
  if (options_.snapshot_every == 0 || options_.data_dir.empty()) return;
  if (events_ - events_at_snapshot_ >= options_.snapshot_every) write_snapshot_locked();
}

void AnnotationStore::snapshot() {
  std::unique_lock lock(mu_);
  if (!options_.data_dir.empty()) write_snapshot_locked();
}

void AnnotationStore::write_snapshot_locked() {
  const json snap = {{"journal_events", events_}, {"state", state_to_json(state_)}};
  write_file_atomic((fs::path(options_.data_dir) / kSnapshotFile).string(), snap.dump());
  events_at_snapshot_ = events_;
}

json AnnotationStore::state_to_json(const State& s) {
  json tasks = json::array();
  for (const auto& t : s.tasks) tasks.push_back(to_json(t));
  json subs = json::array();
  for (const auto& sub : s.submissions) subs.push_back(submission_to_json(sub));
  return {{"tasks", tasks}, {"submissions", subs}};
}

AnnotationStore::State AnnotationStore::state_from_json(const json& j) {
  State s;
  for (const auto& tj : j.at("tasks")) {
    Task t = task_from_json(tj);
    if (t.assignee) {
      s.seen[*t.assignee].insert(t.sample.id);
      ++s.annotators[*t.assignee].assigned;
    }
    s.index[t.id] = s.tasks.size();
    s.tasks.push_back(std::move(t));
  }
  for (const auto& sj : j.at("submissions")) {
    Submission sub = stored_submission_from_json(sj);
    auto& progress = s.annotators[sub.annotator_id];
    if (is_skip(sub)) {
      ++progress.skipped;
    } else {
      ++progress.done;
      if (const auto* a = std::get_if<AnnotationRecord>(&sub.payload)) {
        s.counts.add(*a->ts_label, *a->preferred_rs);
      }
    }
    s.submissions.push_back(std::move(sub));
  }
  return s;
}

}  // namespace trollguard
