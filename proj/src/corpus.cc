#include "trollguard/corpus.h"

#include <array>

#include "trollguard/error.h"
#include "trollguard/text.h"

namespace trollguard {

using nlohmann::json;

namespace {

constexpr std::array<std::string_view, 2> kDeletionMarkers = {"[deleted]", "[removed]"};
// Links, plus Reddit's inline media markdown (![img](...), ![gif](...)).
constexpr std::array<std::string_view, 4> kMediaMarkers = {"http://", "https://", "www.", "!["};

[[noreturn]] void malformed(const std::string& what) {
  throw Error(Errc::kMalformedRecord, what);
}

const json& require(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) malformed(std::string("missing field \"") + key + "\"");
  return *it;
}

std::string require_string(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_string()) malformed(std::string("field \"") + key + "\" must be a string");
  return v.get<std::string>();
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) malformed(std::string("field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

template <typename Label, typename Parse>
std::optional<Label> optional_label(const json& j, const char* key, Parse parse) {
  auto text = optional_string(j, key);
  if (!text) return std::nullopt;
  try {
    return parse(*text);
  } catch (const Error& e) {
    malformed(std::string("field \"") + key + "\": " + e.what());
  }
}

int require_int(const json& j, const char* key) {
  const json& v = require(j, key);
  if (!v.is_number_integer()) malformed(std::string("field \"") + key + "\" must be an integer");
  return v.get<int>();
}

template <typename T, typename FromJson>
std::vector<T> parse_jsonl(std::string_view jsonl, FromJson from_json) {
  std::vector<T> out;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      const json j = json::parse(line);
      if (!j.is_object()) malformed("record is not a JSON object");
      out.push_back(from_json(j));
    } catch (const json::exception& e) {
      throw Error(Errc::kMalformedRecord, e.what()).with_line(line_no);
    } catch (Error& e) {
      if (e.code() != Errc::kMalformedRecord) throw;
      throw e.with_line(line_no);
    }
  }
  return out;
}

template <typename T>
std::string serialize_jsonl(const std::vector<T>& items) {
  std::string out;
  for (const auto& item : items) {
    out += to_json(item).dump();
    out += '\n';
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  write_file_atomic(path, text);
}

}  // namespace

std::string_view name(FilterReason r) {
  switch (r) {
    case FilterReason::kOk: return "Ok";
    case FilterReason::kTooShort: return "TooShort";
    case FilterReason::kTooLong: return "TooLong";
    case FilterReason::kDeleted: return "Deleted";
    case FilterReason::kExternalMedia: return "ExternalMedia";
  }
  return "Unknown";
}

FilterVerdict ingest_filter(std::string_view text) {
  const std::string_view trimmed = trim(text);
  for (auto marker : kDeletionMarkers) {
    if (trimmed == marker) return {false, FilterReason::kDeleted};
  }
  const std::size_t length = utf8_length(text);
  if (length < kMinTextLength) return {false, FilterReason::kTooShort};
  if (length > kMaxTextLength) return {false, FilterReason::kTooLong};
  for (auto marker : kMediaMarkers) {
    if (icontains(text, marker)) return {false, FilterReason::kExternalMedia};
  }
  return {true, FilterReason::kOk};
}

json to_json(const Sample& s) {
  json j = {
      {"id", s.id},
      {"subreddit", s.context.subreddit},
      {"title", s.context.title},
      {"post", s.context.body},
      {"comment", s.troll_comment.text},
      {"comment_id", s.troll_comment.id},
      {"score", s.troll_comment.score},
      {"is_root", s.troll_comment.is_root},
  };
  if (s.ts_label) j["ts_label"] = name(*s.ts_label);
  if (!s.candidate_crs.empty()) {
    json candidates = json::array();
    for (const auto& c : s.candidate_crs) {
      json cj = {{"text", c.text}};
      if (c.rs) cj["rs"] = name(*c.rs);
      if (c.model) cj["model"] = *c.model;
      candidates.push_back(std::move(cj));
    }
    j["candidates"] = std::move(candidates);
  }
  if (s.preferred_rs) j["preferred_rs"] = name(*s.preferred_rs);
  if (s.annotator_id) j["annotator_id"] = *s.annotator_id;
  return j;
}

Sample sample_from_json(const json& j) {
  Sample s;
  s.id = require_string(j, "id");
  s.context.subreddit = require_string(j, "subreddit");
  s.context.title = require_string(j, "title");
  s.context.body = optional_string(j, "post").value_or("");
  s.troll_comment.text = require_string(j, "comment");
  s.troll_comment.id = optional_string(j, "comment_id").value_or(s.id);
  if (auto it = j.find("score"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) malformed("field \"score\" must be an integer");
    s.troll_comment.score = it->get<std::int64_t>();
  }
  if (auto it = j.find("is_root"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) malformed("field \"is_root\" must be a boolean");
    s.troll_comment.is_root = it->get<bool>();
  }
  if (s.id.empty()) malformed("empty id");
  if (s.context.subreddit.empty()) malformed("empty subreddit");
  if (s.context.title.empty()) malformed("empty title");

  s.ts_label = optional_label<TrollingStrategy>(j, "ts_label", parse_ts);
  if (auto it = j.find("candidates"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) malformed("field \"candidates\" must be an array");
    for (const auto& cj : *it) {
      if (!cj.is_object()) malformed("candidate must be an object");
      Candidate c;
      c.text = require_string(cj, "text");
      c.rs = optional_label<ResponseStrategy>(cj, "rs", parse_rs);
      c.model = optional_string(cj, "model");
      s.candidate_crs.push_back(std::move(c));
    }
  }
  s.preferred_rs = optional_label<ResponseStrategy>(j, "preferred_rs", parse_rs);
  s.annotator_id = optional_string(j, "annotator_id");
  return s;
}

json to_json(const AnnotationRecord& r) {
  json j = {{"sample_id", r.sample_id}, {"annotator_id", r.annotator_id}, {"skipped", r.skipped}};
  if (r.ts_label) j["ts_label"] = name(*r.ts_label);
  if (r.preferred_rs) j["preferred_rs"] = name(*r.preferred_rs);
  if (r.skip_reason) j["skip_reason"] = *r.skip_reason;
  return j;
}

AnnotationRecord annotation_from_json(const json& j) {
  AnnotationRecord r;
  r.sample_id = require_string(j, "sample_id");
  r.annotator_id = require_string(j, "annotator_id");
  if (auto it = j.find("skipped"); it != j.end() && !it->is_null()) {
    if (!it->is_boolean()) malformed("field \"skipped\" must be a boolean");
    r.skipped = it->get<bool>();
  }
  r.skip_reason = optional_string(j, "skip_reason");
  r.ts_label = optional_label<TrollingStrategy>(j, "ts_label", parse_ts);
  r.preferred_rs = optional_label<ResponseStrategy>(j, "preferred_rs", parse_rs);
  if (r.skipped && (r.ts_label || r.preferred_rs)) {
    malformed("skipped record must not carry labels");
  }
  if (!r.skipped && !(r.ts_label && r.preferred_rs)) {
    malformed("non-skipped record needs ts_label and preferred_rs");
  }
  return r;
}

json to_json(const EvaluationRecord& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"model", e.model_id},
                       {"rank", e.rank},
                       {"constructiveness", e.constructiveness},
                       {"supportiveness", e.supportiveness},
                       {"perceived_rs", name(e.perceived_rs)}});
  }
  json j = {{"sample_id", r.sample_id}, {"evaluator_id", r.evaluator_id}, {"entries", entries}};
  if (r.ts_label) j["ts_label"] = name(*r.ts_label);
  return j;
}

EvaluationRecord evaluation_from_json(const json& j) {
  EvaluationRecord r;
  r.sample_id = require_string(j, "sample_id");
  r.evaluator_id = require_string(j, "evaluator_id");
  r.ts_label = optional_label<TrollingStrategy>(j, "ts_label", parse_ts);
  const json& entries = require(j, "entries");
  if (!entries.is_array()) malformed("field \"entries\" must be an array");
  for (const auto& ej : entries) {
    if (!ej.is_object()) malformed("entry must be an object");
    EvaluationEntry e;
    e.model_id = require_string(ej, "model");
    e.rank = require_int(ej, "rank");
    e.constructiveness = require_int(ej, "constructiveness");
    e.supportiveness = require_int(ej, "supportiveness");
    auto rs = optional_label<ResponseStrategy>(ej, "perceived_rs", parse_rs);
    if (!rs) malformed("missing field \"perceived_rs\"");
    e.perceived_rs = *rs;
    r.entries.push_back(std::move(e));
  }
  return r;
}

std::vector<Sample> parse_dataset(std::string_view jsonl) {
  return parse_jsonl<Sample>(jsonl, sample_from_json);
}

std::string serialize_dataset(const std::vector<Sample>& samples) {
  return serialize_jsonl(samples);
}

std::vector<Sample> load_dataset(const std::string& path) {
  return parse_dataset(read_file(path));
}

void save_dataset(const std::vector<Sample>& samples, const std::string& path) {
  write_text(path, serialize_dataset(samples));
}

std::vector<AnnotationRecord> parse_annotations(std::string_view jsonl) {
  return parse_jsonl<AnnotationRecord>(jsonl, annotation_from_json);
}

std::vector<AnnotationRecord> load_annotations(const std::string& path) {
  return parse_annotations(read_file(path));
}

std::string serialize_annotations(const std::vector<AnnotationRecord>& records) {
  return serialize_jsonl(records);
}

std::vector<EvaluationRecord> parse_evaluations(std::string_view jsonl) {
  return parse_jsonl<EvaluationRecord>(jsonl, evaluation_from_json);
}

std::vector<EvaluationRecord> load_evaluations(const std::string& path) {
  return parse_evaluations(read_file(path));
}

std::string serialize_evaluations(const std::vector<EvaluationRecord>& records) {
  return serialize_jsonl(records);
}

ContingencyTable build_contingency(const std::vector<AnnotationRecord>& records) {
  ContingencyTable table;
  for (const auto& r : records) {
    if (r.skipped || !r.ts_label || !r.preferred_rs) {
      throw Error(Errc::kPreconditionViolation,
                  "skipped or unlabeled record for sample " + r.sample_id);
    }
    table.add(*r.ts_label, *r.preferred_rs);
  }
  return table;
}

std::vector<Sample> ingest_dump(std::string_view jsonl, const IngestOptions& options,
                                IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report != nullptr ? *report : local;
  auto drop = [&rep](std::string_view why) { ++rep.dropped[std::string(why)]; };

  std::vector<Sample> samples;
  std::size_t line_no = 0;
  for (const auto& line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    json thread;
    try {
      thread = json::parse(line);
      if (!thread.is_object()) malformed("thread is not a JSON object");
    } catch (const json::exception& e) {
      throw Error(Errc::kMalformedRecord, e.what()).with_line(line_no);
    } catch (Error& e) {
      throw e.with_line(line_no);
    }
    ++rep.threads;

    ThreadContext context;
    std::vector<json> comments;
    try {
      context.subreddit = require_string(thread, "subreddit");
      context.title = require_string(thread, "title");
      context.body = optional_string(thread, "selftext")
                         .value_or(optional_string(thread, "body").value_or(""));
      if (auto it = thread.find("comments"); it != thread.end() && it->is_array()) {
        comments.assign(it->begin(), it->end());
      }
    } catch (Error& e) {
      throw e.with_line(line_no);
    }
    rep.comments_seen += comments.size();

    if (context.subreddit.empty() || trim(context.title).empty()) {
      drop("MissingContext");
      continue;
    }
    if (auto verdict = ingest_filter(context.body); !verdict.keep) {
      rep.dropped[std::string("Post") + std::string(name(verdict.reason))] += 1;
      continue;
    }

    for (const auto& cj : comments) {
      if (!cj.is_object()) {
        drop("MalformedComment");
        continue;
      }
      Comment c;
      c.id = cj.value("id", "");
      c.text = cj.value("body", "");
      c.score = cj.value("score", std::int64_t{0});
      if (auto it = cj.find("is_root"); it != cj.end() && it->is_boolean()) {
        c.is_root = it->get<bool>();
      } else if (auto p = cj.find("parent_id"); p != cj.end() && p->is_string()) {
        c.is_root = p->get<std::string>().rfind("t3_", 0) == 0;
      }
      if (c.id.empty()) {
        drop("MalformedComment");
        continue;
      }
      if (options.require_root && !c.is_root) {
        drop("NotRoot");
        continue;
      }
      if (c.score > options.max_score) {
        drop("NotDownvoted");
        continue;
      }
      if (auto verdict = ingest_filter(c.text); !verdict.keep) {
        drop(name(verdict.reason));
        continue;
      }
      Sample s;
      s.id = c.id;
      s.context = context;
      s.troll_comment = std::move(c);
      samples.push_back(std::move(s));
      ++rep.kept;
    }
  }
  return samples;
}

}  // namespace trollguard
