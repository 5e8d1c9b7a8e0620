#include <CLI11.hpp>

#include <iostream>

#include "commands.h"
#include "trollguard/annotation_store.h"
#include "trollguard/error.h"

namespace {

void add_runtime_options(CLI::App* cmd, trollguard::cli::RuntimeOptions& rt) {
  cmd->add_option("--config", rt.config_path, "Key/value config file");
  cmd->add_option("--replay", rt.replay_path, "JSONL of canned LLM replies keyed by prompt hash");
  cmd->add_option("--prompts", rt.prompts_dir, "Directory overriding the built-in prompts");
  cmd->add_option("--table", rt.table_path, "Preference table CSV (default: built-in)");
  cmd->add_option("--external", rt.external_endpoint, "External PRS predictor URL");
  cmd->add_flag("--ts-elicitation", rt.ts_elicitation, "Ask the LLM for missing TS labels");
  cmd->add_option("--parallelism", rt.parallelism, "Override llm.parallelism");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = trollguard::cli;
  CLI::App app{"Troll counter-response pipeline and evaluation toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  std::string dump, out = "-";
  long long max_score = -1;
  bool allow_replies = false;
  auto* ingest = app.add_subcommand("ingest", "Filter a thread dump into a dataset");
  ingest->add_option("dump", dump, "Thread dump (JSONL)")->required();
  ingest->add_option("-o,--out", out, "Output dataset JSONL");
  ingest->add_option("--max-score", max_score, "Keep comments with score at or below this");
  ingest->add_flag("--allow-replies", allow_replies, "Keep non-root comments");
  ingest->callback([&] { rc = cli::ingest(dump, out, max_score, allow_replies); });

  cli::RuntimeOptions rt;
  std::string mode = "prs", in, summary;
  auto* moderate = app.add_subcommand("moderate", "Classify and counter-respond to a dataset");
  moderate->add_option("--mode", mode, "default | sp | prs");
  moderate->add_option("--in", in, "Dataset JSONL")->required();
  moderate->add_option("--out", out, "Outcomes JSONL");
  moderate->add_option("--summary", summary, "Write the batch summary here");
  add_runtime_options(moderate, rt);
  moderate->callback([&] { rc = cli::moderate(rt, mode, in, out, summary); });

  std::string ts, table;
  double alpha = 1.0;
  auto* recommend = app.add_subcommand("recommend", "Preferred response strategy for a TS");
  recommend->add_option("--ts", ts, "Trolling strategy")->required();
  recommend->add_option("--table", table, "Preference table CSV");
  recommend->add_option("--alpha", alpha, "Additive smoothing for the distribution");
  recommend->callback([&] { rc = cli::recommend(ts, table, alpha); });

  auto* eval = app.add_subcommand("eval", "Evaluation reports");
  eval->require_subcommand(1);
  std::vector<std::string> model_labels, names;
  std::string human_labels, json_out, evaluations, dimension, scores;

  auto* align = eval->add_subcommand("align", "JSD/HD between model and human strategies");
  align->add_option("--model-labels", model_labels, "Model label JSONL (repeatable)")->required();
  align->add_option("--name", names, "Row name per --model-labels");
  align->add_option("--human-labels", human_labels, "Human label JSONL")->required();
  align->add_option("--json", json_out, "Also write JSON here");
  align->callback([&] { rc = cli::eval_align(model_labels, names, human_labels, json_out); });

  auto* ranks = eval->add_subcommand("ranks", "Win-ratio matrix CSV from rankings");
  ranks->add_option("--evaluations", evaluations, "Evaluation records JSONL")->required();
  ranks->add_option("-o,--out", out, "CSV output");
  ranks->callback([&] { rc = cli::eval_ranks(evaluations, out); });

  auto* likert = eval->add_subcommand("likert", "Likert mean/std CSV");
  likert->add_option("--evaluations", evaluations, "Evaluation records JSONL")->required();
  likert->add_option("--dimension", dimension, "constructiveness | supportiveness")->required();
  likert->add_option("-o,--out", out, "CSV output");
  likert->callback([&] { rc = cli::eval_likert(evaluations, dimension, out); });

  auto* perceived = eval->add_subcommand("perceived", "Perceived-RS histogram CSV");
  perceived->add_option("--evaluations", evaluations, "Evaluation records JSONL")->required();
  perceived->add_option("-o,--out", out, "CSV output");
  perceived->callback([&] { rc = cli::eval_perceived(evaluations, out); });

  auto* stats = eval->add_subcommand("stats", "Friedman and pairwise Wilcoxon tests");
  stats->add_option("--scores", scores, "Scores CSV, one column per model")->required();
  stats->add_option("--dimension", dimension, "preference | constructiveness | supportiveness")
      ->required();
  stats->add_option("--json", json_out, "Also write JSON here");
  stats->callback([&] { rc = cli::eval_stats(scores, dimension, json_out); });

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP moderation endpoint");
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Listen port")->capture_default_str();
  serve->add_option("--mode", mode, "Default mode for requests");
  add_runtime_options(serve, rt);
  serve->callback([&] { rc = cli::serve(rt, host, port, mode); });

  std::string data_dir, ui_dir;
  std::size_t quota = trollguard::kDefaultQuota;
  auto* annotate = app.add_subcommand("serve-annotation", "Annotation task service");
  annotate->add_option("--host", host, "Bind address")->capture_default_str();
  annotate->add_option("--port", port, "Listen port")->capture_default_str();
  annotate->add_option("--data", data_dir, "Directory for the journal")->required();
  annotate->add_option("--quota", quota, "Tasks per annotator");
  annotate->add_option("--ui", ui_dir, "Static UI bundle served at /ui/");
  annotate->callback([&] { rc = cli::serve_annotation(host, port, data_dir, quota, ui_dir); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const trollguard::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
