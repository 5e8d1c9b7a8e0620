#ifndef TROLLGUARD_TOOLS_COMMANDS_H_
#define TROLLGUARD_TOOLS_COMMANDS_H_

#include <string>
#include <vector>

namespace trollguard::cli {

struct RuntimeOptions {
  std::string config_path;
  std::string replay_path;  // mock transport replies instead of a live endpoint
  std::string prompts_dir;
  std::string table_path;
  std::string external_endpoint;
  bool ts_elicitation = false;
  int parallelism = 0;  // 0 keeps llm.parallelism
};

int ingest(const std::string& dump, const std::string& out, long long max_score, bool allow_replies);
int moderate(const RuntimeOptions& rt, const std::string& mode, const std::string& in,
             const std::string& out, const std::string& summary_path);
int recommend(const std::string& ts, const std::string& table_path, double alpha);
int eval_align(const std::vector<std::string>& model_labels, const std::vector<std::string>& names,
               const std::string& human_labels, const std::string& json_out);
int eval_ranks(const std::string& evaluations, const std::string& out);
int eval_likert(const std::string& evaluations, const std::string& dimension, const std::string& out);
int eval_perceived(const std::string& evaluations, const std::string& out);
int eval_stats(const std::string& scores, const std::string& dimension, const std::string& json_out);
int serve(const RuntimeOptions& rt, const std::string& host, int port, const std::string& mode);
int serve_annotation(const std::string& host, int port, const std::string& data_dir,
                     std::size_t quota, const std::string& ui_dir);

}  // namespace trollguard::cli

#endif  // TROLLGUARD_TOOLS_COMMANDS_H_
