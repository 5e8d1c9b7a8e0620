#include "trollguard/pipeline.h"

#include <algorithm>
#include <atomic>
#include <thread>

#include "trollguard/text.h"

namespace trollguard {

using nlohmann::json;

Pipeline::Pipeline(LlmClient& client, const PromptSet& prompts, PredictorBackend backend,
                   PipelineOptions options, TsLookup annotations, Clock clock)
    : client_(client),
      prompts_(prompts),
      backend_(std::move(backend)),
      options_(std::move(options)),
      annotations_(std::move(annotations)),
      clock_(clock ? std::move(clock) : Clock([] { return std::chrono::steady_clock::now(); })) {
  options_.generation.validate();
}

double Pipeline::elapsed_ms(std::chrono::steady_clock::time_point since) const {
  return std::chrono::duration<double, std::milli>(clock_() - since).count();
}

ModerationOutcome Pipeline::moderate(const Sample& sample, GenerationMode mode) const {
  ModerationOutcome out;
  run(sample, mode, out);
  return out;
}

void Pipeline::run(const Sample& sample, GenerationMode mode, ModerationOutcome& out) const {
  out.sample_id = sample.id;
  out.mode = mode;
  const auto& config = options_.generation;

  auto stage = [&](const char* name, auto&& body) {
    try {
      return body();
    } catch (Error& e) {
      if (e.stage().empty()) e.with_stage(name);
      throw;
    }
  };

  stage(kStageClassify, [&] {
    CallRecord call;
    const auto start = clock_();
    const TrollVerdict verdict = [&] {
      try {
        return classify_troll(sample, config, client_, prompts_, &call);
      } catch (...) {
        if (!call.prompt_hash.empty()) {
          out.trace.push_back({kStageClassify, call.prompt_hash, elapsed_ms(start), call.raw_output});
        }
        throw;
      }
    }();
    out.trace.push_back({kStageClassify, call.prompt_hash, elapsed_ms(start), call.raw_output});
    out.is_troll = verdict.is_troll;
  });
  if (!out.is_troll) return;

  stage(kStageResolveTs, [&] {
    if (sample.ts_label) {
      out.ts = sample.ts_label;
      out.ts_source = "label";
    } else if (annotations_) {
      if (auto ts = annotations_(sample)) {
        out.ts = ts;
        out.ts_source = "annotation";
      }
    }
    const bool needs_ts = mode != GenerationMode::kDefault;
    if (!out.ts && needs_ts) {
      if (!options_.ts_elicitation) {
        throw Error(Errc::kPreconditionViolation,
                    "no trolling strategy for sample " + sample.id +
                        " and TS elicitation is disabled");
      }
      CallRecord call;
      const auto start = clock_();
      out.ts = elicit_trolling_strategy(sample, config, client_, prompts_, &call);
      out.ts_source = "llm";
      out.trace.push_back({kStageResolveTs, call.prompt_hash, elapsed_ms(start), call.raw_output});
    }
  });

  if (mode == GenerationMode::kPrs) {
    stage(kStageRecommend, [&] {
      const auto start = clock_();
      out.prs = predict(sample, *out.ts, backend_);
      out.trace.push_back({kStageRecommend, "", elapsed_ms(start), std::string(name(*out.prs))});
    });
  }

  stage(kStageGenerate, [&] {
    CallRecord call;
    const auto start = clock_();
    try {
      const GenerationOutput gen =
          generate_cr(sample, mode, out.prs, config, client_, prompts_, out.ts, &call);
      out.trace.push_back({kStageGenerate, call.prompt_hash, elapsed_ms(start), call.raw_output});
      out.declared_rs = gen.declared_rs;
      out.counter_response = gen.response_text;
    } catch (...) {
      if (!call.prompt_hash.empty()) {
        out.trace.push_back({kStageGenerate, call.prompt_hash, elapsed_ms(start), call.raw_output});
      }
      throw;
    }
  });
}

BatchResult Pipeline::moderate_batch(const std::vector<Sample>& samples,
                                     GenerationMode mode) const {
  BatchResult result;
  result.outcomes.resize(samples.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < samples.size(); i = next++) {
      ModerationOutcome& out = result.outcomes[i];
      try {
        run(samples[i], mode, out);
      } catch (const Error& e) {
        out.error = StageError{e.stage(), e.code(), e.what()};
        out.prs.reset();
        out.counter_response.reset();
      } catch (const std::exception& e) {
        out.error = StageError{"", Errc::kInvalidArgument, e.what()};
        out.prs.reset();
        out.counter_response.reset();
      }
    }
  };

  const std::size_t workers =
      std::min<std::size_t>(std::max(1, options_.parallelism), std::max<std::size_t>(1, samples.size()));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  result.summary = summarize(result.outcomes);
  return result;
}

BatchResult batch_moderate(const std::string& dataset_path, GenerationMode mode,
                           const Pipeline& pipeline) {
  return pipeline.moderate_batch(load_dataset(dataset_path), mode);
}

BatchSummary summarize(const std::vector<ModerationOutcome>& outcomes) {
  BatchSummary s;
  s.total = outcomes.size();
  for (const auto& o : outcomes) {
    if (o.error) {
      ++s.failures;
      ++s.per_error[o.error->stage + "/" + std::string(errc_name(o.error->code))];
    }
    if (o.is_troll) {
      ++s.trolls;
    } else if (!o.error) {
      ++s.non_trolls;
    }
    if (o.ts) ++s.per_ts[std::string(name(*o.ts))];
    if (o.prs) ++s.per_prs[std::string(name(*o.prs))];
    if (o.counter_response) ++s.responded;
  }
  return s;
}

json to_json(const ModerationOutcome& o) {
  json trace = json::array();
  for (const auto& step : o.trace) {
    trace.push_back({{"stage", step.stage},
                     {"prompt_hash", step.prompt_hash},
                     {"latency_ms", step.latency_ms},
                     {"raw_output", step.raw_output}});
  }
  json j = {
      {"sample_id", o.sample_id},
      {"mode", name(o.mode)},
      {"is_troll", o.is_troll},
      {"ts", o.ts ? json(name(*o.ts)) : json(nullptr)},
      {"ts_source", o.ts_source ? json(*o.ts_source) : json(nullptr)},
      {"prs", o.prs ? json(name(*o.prs)) : json(nullptr)},
      {"declared_rs", o.declared_rs ? json(name(*o.declared_rs)) : json(nullptr)},
      {"counter_response", o.counter_response ? json(*o.counter_response) : json(nullptr)},
      {"trace", trace},
  };
  if (o.error) {
    j["error"] = {{"stage", o.error->stage},
                  {"code", errc_name(o.error->code)},
                  {"message", o.error->message}};
  } else {
    j["error"] = nullptr;
  }
  return j;
}

json to_json(const BatchSummary& s) {
  return {
      {"total", s.total},       {"trolls", s.trolls},     {"non_trolls", s.non_trolls},
      {"responded", s.responded}, {"failures", s.failures}, {"per_ts", s.per_ts},
      {"per_prs", s.per_prs},   {"per_error", s.per_error},
  };
}

std::string serialize_outcomes(const std::vector<ModerationOutcome>& outcomes) {
  std::string out;
  for (const auto& o : outcomes) {
    out += to_json(o).dump();
    out += '\n';
  }
  return out;
}

}  // namespace trollguard
