#ifndef TROLLGUARD_PIPELINE_H_
#define TROLLGUARD_PIPELINE_H_

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "trollguard/corpus.h"
#include "trollguard/error.h"
#include "trollguard/llm_gateway.h"
#include "trollguard/prs_recommender.h"

namespace trollguard {

struct PipelineOptions {
  GenerationConfig generation;
  // Ask the LLM for a TS when neither the sample nor the annotation lookup
  // provides one.
  bool ts_elicitation = false;
  int parallelism = 4;
};

struct TraceStep {
  std::string stage;
  std::string prompt_hash;  // empty for steps without a prompt
  double latency_ms = 0.0;
  std::string raw_output;
};

struct StageError {
  std::string stage;
  Errc code = Errc::kInvalidArgument;
  std::string message;
};

struct ModerationOutcome {
  std::string sample_id;
  GenerationMode mode = GenerationMode::kPrs;
  bool is_troll = false;
  std::optional<TrollingStrategy> ts;
  std::optional<std::string> ts_source;  // "label", "annotation", "llm"
  std::optional<ResponseStrategy> prs;
  std::optional<ResponseStrategy> declared_rs;
  std::optional<std::string> counter_response;
  std::vector<TraceStep> trace;
  std::optional<StageError> error;
};

struct BatchSummary {
  std::size_t total = 0;
  std::size_t trolls = 0;
  std::size_t non_trolls = 0;
  std::size_t responded = 0;
  std::size_t failures = 0;
  std::map<std::string, std::size_t> per_ts;
  std::map<std::string, std::size_t> per_prs;
  std::map<std::string, std::size_t> per_error;  // "<stage>/<code>"
};

struct BatchResult {
  std::vector<ModerationOutcome> outcomes;
  BatchSummary summary;
};

// Stage names used in traces and error tags.
inline constexpr const char* kStageClassify = "classify";
inline constexpr const char* kStageResolveTs = "resolve_ts";
inline constexpr const char* kStageRecommend = "recommend";
inline constexpr const char* kStageGenerate = "generate";

class Pipeline {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;
  // Human TS annotation for a sample, if one exists.
  using TsLookup = std::function<std::optional<TrollingStrategy>(const Sample&)>;

  Pipeline(LlmClient& client, const PromptSet& prompts, PredictorBackend backend,
           PipelineOptions options, TsLookup annotations = {}, Clock clock = {});

  // classify -> resolve TS -> recommend (PRS mode) -> generate. Errors are
  // rethrown with the failing stage attached.
  ModerationOutcome moderate(const Sample& sample, GenerationMode mode) const;

  // Per-sample failures are recorded in the outcome, never thrown. Output
  // order matches input order.
  BatchResult moderate_batch(const std::vector<Sample>& samples, GenerationMode mode) const;

  const PipelineOptions& options() const { return options_; }
  const PredictorBackend& backend() const { return backend_; }

 private:
  void run(const Sample& sample, GenerationMode mode, ModerationOutcome& out) const;
  double elapsed_ms(std::chrono::steady_clock::time_point since) const;

  LlmClient& client_;
  const PromptSet& prompts_;
  PredictorBackend backend_;
  PipelineOptions options_;
  TsLookup annotations_;
  Clock clock_;
};

// Loads the dataset (IoFailure/MalformedRecord are fatal) and runs the batch.
BatchResult batch_moderate(const std::string& dataset_path, GenerationMode mode,
                           const Pipeline& pipeline);

BatchSummary summarize(const std::vector<ModerationOutcome>& outcomes);

nlohmann::json to_json(const ModerationOutcome& outcome);
nlohmann::json to_json(const BatchSummary& summary);
std::string serialize_outcomes(const std::vector<ModerationOutcome>& outcomes);

}  // namespace trollguard

#endif  // TROLLGUARD_PIPELINE_H_
