#include "commands.h"

#include <httplib.h>

#include <filesystem>
#include <iostream>
#include <memory>

#include "trollguard/annotation_store.h"
#include "trollguard/config.h"
#include "trollguard/corpus.h"
#include "trollguard/eval_metrics.h"
#include "trollguard/eval_stats.h"
#include "trollguard/llm_gateway.h"
#include "trollguard/pipeline.h"
#include "trollguard/prs_recommender.h"
#include "trollguard/report.h"
#include "trollguard/service.h"
#include "trollguard/text.h"

namespace trollguard::cli {

using nlohmann::json;

namespace {

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
  } else {
    write_file_atomic(path, text);
  }
}

// Everything a pipeline borrows, kept at stable addresses.
struct Runtime {
  std::unique_ptr<Transport> transport;
  std::unique_ptr<LlmClient> client;
  PromptSet prompts;
  std::unique_ptr<Pipeline> pipeline;
};

std::unique_ptr<Runtime> build_runtime(const RuntimeOptions& opts) {
  const Config config = opts.config_path.empty() ? Config() : Config::load(opts.config_path);
  LlmSettings llm = llm_settings(config);
  if (opts.parallelism > 0) llm.parallelism = opts.parallelism;

  auto rt = std::make_unique<Runtime>(Runtime{nullptr, nullptr,
                                              PromptSet::load(opts.prompts_dir.empty()
                                                                  ? config.get_string("prompts.dir", "")
                                                                  : opts.prompts_dir),
                                              nullptr});
  if (!opts.replay_path.empty()) {
    auto mock = std::make_unique<MockTransport>();
    mock->load_replay_jsonl(read_file(opts.replay_path));
    rt->transport = std::move(mock);
  } else {
    if (llm.api_key.empty()) {
      throw Error(Errc::kPreconditionViolation, "LLM_API_KEY is not set (or pass --replay)");
    }
    rt->transport = std::make_unique<HttpTransport>(llm.endpoint, llm.api_key);
  }
  rt->client = std::make_unique<LlmClient>(*rt->transport, llm.parallelism);

  PredictorBackend backend;
  const std::string endpoint =
      opts.external_endpoint.empty() ? config.get_string("prs.endpoint", "") : opts.external_endpoint;
  if (!endpoint.empty()) {
    backend = ExternalBackend{endpoint, {}, config.get_double("prs.timeout", 30.0)};
  } else {
    const std::string table = opts.table_path.empty() ? config.get_string("prs.table", "") : opts.table_path;
    backend = EmpiricalBackend{table.empty() ? ContingencyTable::builtin()
                                             : ContingencyTable::load_csv(table),
                               1.0};
  }
  PipelineOptions popts;
  popts.generation = llm.generation;
  popts.parallelism = llm.parallelism;
  popts.ts_elicitation = opts.ts_elicitation || config.get_bool("pipeline.ts_elicitation", false);
  rt->pipeline = std::make_unique<Pipeline>(*rt->client, rt->prompts, std::move(backend), popts);
  return rt;
}

}  // namespace

int ingest(const std::string& dump, const std::string& out, long long max_score, bool allow_replies) {
  IngestOptions options;
  options.max_score = max_score;
  options.require_root = !allow_replies;
  IngestReport report;
  const auto samples = ingest_dump(read_file(dump), options, &report);
  emit(serialize_dataset(samples), out);
  std::cerr << json{{"threads", report.threads},
                    {"comments_seen", report.comments_seen},
                    {"kept", report.kept},
                    {"dropped", report.dropped}}
                   .dump()
            << "\n";
  return 0;
}

int moderate(const RuntimeOptions& opts, const std::string& mode, const std::string& in,
             const std::string& out, const std::string& summary_path) {
  const auto rt = build_runtime(opts);
  const BatchResult result = batch_moderate(in, parse_mode(mode), *rt->pipeline);
  emit(serialize_outcomes(result.outcomes), out);
  const std::string summary = to_json(result.summary).dump(2) + "\n";
  if (summary_path.empty()) {
    std::cerr << summary;
  } else {
    write_file_atomic(summary_path, summary);
  }
  return result.summary.failures == 0 ? 0 : 3;
}

int recommend(const std::string& ts_name, const std::string& table_path, double alpha) {
  const ContingencyTable table =
      table_path.empty() ? ContingencyTable::builtin() : ContingencyTable::load_csv(table_path);
  const TrollingStrategy ts = parse_ts(ts_name);
  const auto dist = preference_distribution(ts, table, alpha);
  json probs = json::object();
  for (auto rs : kAllRS) probs[std::string(name(rs))] = dist[index_of(rs)];
  std::cout << json{{"ts", name(ts)},
                    {"prs", name(map_predict(ts, table))},
                    {"coarse", name(coarse_predict(ts, table))},
                    {"distribution", probs}}
                   .dump(2)
            << "\n";
  return 0;
}

int eval_align(const std::vector<std::string>& model_labels, const std::vector<std::string>& names,
               const std::string& human_labels, const std::string& json_out) {
  if (!names.empty() && names.size() != model_labels.size()) {
    throw Error(Errc::kInvalidArgument, "--name must be given once per --model-labels");
  }
  const auto human = load_label_pairs(human_labels);
  std::vector<AlignmentRow> rows;
  json j = json::array();
  for (std::size_t i = 0; i < model_labels.size(); ++i) {
    std::size_t skipped = 0;
    const auto model = load_label_pairs(model_labels[i], &skipped);
    const std::string label =
        names.empty() ? std::filesystem::path(model_labels[i]).stem().string() : names[i];
    const AlignmentReport r = alignment_report(model, human);
    rows.push_back({label, r});
    j.push_back({{"model", label},
                 {"pairs", model.size()},
                 {"skipped", skipped},
                 {"coarse", {{"jsd", r.coarse.jsd}, {"hd", r.coarse.hd}}},
                 {"fine", {{"jsd", r.fine.jsd}, {"hd", r.fine.hd}}}});
  }
  std::cout << render_alignment_table(rows);
  if (!json_out.empty()) write_file_atomic(json_out, j.dump(2) + "\n");
  return 0;
}

int eval_ranks(const std::string& evaluations, const std::string& out) {
  emit(win_matrix_csv(rank_to_win_matrix(load_evaluations(evaluations))), out);
  return 0;
}

int eval_likert(const std::string& evaluations, const std::string& dimension, const std::string& out) {
  emit(likert_csv(likert_summary(load_evaluations(evaluations), parse_likert_dimension(dimension))),
       out);
  return 0;
}

int eval_perceived(const std::string& evaluations, const std::string& out) {
  emit(perceived_histogram_csv(perceived_rs_histogram(load_evaluations(evaluations))), out);
  return 0;
}

int eval_stats(const std::string& scores, const std::string& dimension, const std::string& json_out) {
  const SignificanceReport report =
      significance_report(load_scores_csv(scores), parse_score_dimension(dimension));
  std::cout << render_significance(report);
  if (!json_out.empty()) write_file_atomic(json_out, to_json(report).dump(2) + "\n");
  return 0;
}

int serve(const RuntimeOptions& opts, const std::string& host, int port, const std::string& mode) {
  const auto rt = build_runtime(opts);
  httplib::Server server;
  mount_moderation(server, *rt->pipeline, parse_mode(mode));
  std::cerr << "moderation service on " << host << ":" << port << "\n";
  return server.listen(host, port) ? 0 : 1;
}

int serve_annotation(const std::string& host, int port, const std::string& data_dir,
                     std::size_t quota, const std::string& ui_dir) {
  AnnotationStore::Options options;
  options.data_dir = data_dir;
  options.quota = quota;
  options.snapshot_every = 1000;
  AnnotationStore store(options);
  httplib::Server server;
  mount_annotation(server, store, ui_dir);
  std::cerr << "annotation service on " << host << ":" << port << " (data: " << data_dir << ")\n";
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace trollguard::cli
