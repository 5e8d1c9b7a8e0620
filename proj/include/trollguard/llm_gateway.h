#ifndef TROLLGUARD_LLM_GATEWAY_H_
#define TROLLGUARD_LLM_GATEWAY_H_

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <semaphore>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "trollguard/corpus.h"
#include "trollguard/taxonomy.h"

namespace trollguard {

// Defaults are the generation settings the prompts were designed with.
struct GenerationConfig {
  std::string model_name = "gpt-3.5-turbo-1106";
  double temperature = 0.0;
  int n = 1;
  double presence_penalty = 0.0;
  double frequency_penalty = 0.0;
  std::optional<std::vector<std::string>> stop;
  std::chrono::milliseconds timeout{60'000};
  int max_retries = 3;

  void validate() const;
};

// --- Prompt templates -------------------------------------------------------

enum class TemplateName { kTrollClassifier, kDefault, kStrategyProvided, kPrs, kTsElicitation };

std::string_view name(TemplateName t);
// File name under prompts/, e.g. "cr_prs.txt".
std::string_view template_file(TemplateName t);

inline constexpr std::string_view kSubreddit = "Subreddit";
inline constexpr std::string_view kTitle = "Title";
inline constexpr std::string_view kPost = "Post";
inline constexpr std::string_view kComment = "Comment";
inline constexpr std::string_view kTrollingStrategy = "TrollingStrategy";
inline constexpr std::string_view kResponseStrategySlot = "response strategy";
inline constexpr std::string_view kStrategyExampleSlot = "strategy example";
inline constexpr std::string_view kExampleSlot = "example";

class PromptTemplate {
 public:
  // Throws kInvalidArgument if `text` uses a placeholder outside the
  // template's declared set.
  PromptTemplate(TemplateName name, std::string text);

  // Reads <dir>/<template_file(name)>; an empty dir means the built-in copy.
  static PromptTemplate load(TemplateName name, const std::string& dir = {});

  TemplateName name() const { return name_; }
  const std::string& text() const { return text_; }
  static const std::set<std::string>& declared_placeholders(TemplateName name);
  // Placeholders actually present in the text, in order of first use.
  std::vector<std::string> used_placeholders() const;

 private:
  TemplateName name_;
  std::string text_;
};

using Extras = std::map<std::string, std::string, std::less<>>;

// Single pass substitution: values are inserted verbatim and never rescanned.
// Sample fields fill {Subreddit} {Title} {Post} {Comment} and, when labeled,
// {TrollingStrategy}; `extras` add or override slots. Throws
// kMissingPlaceholder(name) for any slot left unfilled.
std::string render(const PromptTemplate& tmpl, const Sample& sample, const Extras& extras = {});

// Demonstrations and per-strategy in-context examples.
struct PromptResources {
  std::string troll_examples;
  std::map<ResponseStrategy, std::string> strategy_examples;

  // Loads from `dir` (troll_examples.txt, strategy_examples.json); empty dir
  // means the built-in copies.
  static PromptResources load(const std::string& dir = {});

  // All seven examples, in taxonomy order, separated by blank lines.
  std::string all_strategy_examples() const;
};

struct PromptSet {
  PromptTemplate troll_classifier;
  PromptTemplate cr_default;
  PromptTemplate cr_sp;
  PromptTemplate cr_prs;
  PromptTemplate ts_elicitation;
  PromptResources resources;

  static PromptSet load(const std::string& dir = {});
  const PromptTemplate& get(TemplateName t) const;
};

// --- Transport ----------------------------------------------------------------

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::vector<ChatMessage> messages;
  GenerationConfig config;

  // Content of the last user message; what mocks key on.
  const std::string& prompt() const;
};

// Sends one chat-completion request and returns the first choice's text.
// Implementations throw Error(kTransportFailure) on failure; the client
// decides whether to retry.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual std::string complete(const ChatRequest& request) = 0;
};

// Chat-completions style JSON API (POST {endpoint} with model/messages/...).
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string endpoint, std::string api_key);
  std::string complete(const ChatRequest& request) override;

  static std::string request_body(const ChatRequest& request);
  static std::string parse_response(std::string_view body);

 private:
  std::string endpoint_;
  std::string api_key_;
};

// Replies from a table keyed by SHA-256 of the prompt, then from a fallback
// responder. Pure function of the prompt, hence deterministic under
// concurrency.
class MockTransport : public Transport {
 public:
  using Responder = std::function<std::string(const ChatRequest&)>;

  MockTransport() = default;
  explicit MockTransport(Responder fallback) : fallback_(std::move(fallback)) {}

  void add_reply(std::string_view prompt, std::string reply);
  void add_reply_by_hash(std::string prompt_hash, std::string reply);
  // Lines of {"prompt_hash": "...", "reply": "..."}.
  void load_replay_jsonl(std::string_view jsonl);

  std::string complete(const ChatRequest& request) override;
  std::size_t calls() const;

 private:
  std::map<std::string, std::string, std::less<>> by_hash_;
  Responder fallback_;
  mutable std::mutex mu_;
  std::size_t calls_ = 0;
};

struct RetryPolicy {
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  // Each delay is scaled by a uniform factor in [1 - jitter, 1 + jitter].
  double jitter = 0.2;
};

// Wraps a transport with retries, exponential backoff and a bound on
// in-flight requests.
class LlmClient {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  LlmClient(Transport& transport, int parallelism = 4, RetryPolicy retry = {},
            Sleeper sleeper = {}, std::uint64_t jitter_seed = 0x5eed);

  // Sends a single user message. Retries kTransportFailure up to
  // config.max_retries times, then rethrows.
  std::string complete(const std::string& prompt, const GenerationConfig& config);

  int parallelism() const { return parallelism_; }

 private:
  std::chrono::milliseconds backoff(int attempt);

  Transport& transport_;
  int parallelism_;
  RetryPolicy retry_;
  Sleeper sleeper_;
  std::counting_semaphore<1 << 16> slots_;
  std::mutex rng_mu_;
  std::mt19937_64 rng_;
};

// --- Operations -------------------------------------------------------------

struct TrollVerdict {
  bool is_troll = false;
  std::string raw_output;
};

// "Trolling..." -> true, "Not..." -> false, anything else kParseFailure.
TrollVerdict parse_troll_verdict(std::string_view reply);

struct CallRecord {
  std::string prompt;
  std::string prompt_hash;
  std::string raw_output;
};

// The classifier prompt with the troll demonstrations filled in.
std::string classifier_prompt(const Sample& sample, const PromptSet& prompts);
std::string ts_elicitation_prompt(const Sample& sample, const PromptSet& prompts);

TrollVerdict classify_troll(const Sample& sample, const GenerationConfig& config,
                            LlmClient& client, const PromptSet& prompts,
                            CallRecord* call = nullptr);

// Elicits a TS label; reply must name one of the six strategies.
TrollingStrategy elicit_trolling_strategy(const Sample& sample, const GenerationConfig& config,
                                          LlmClient& client, const PromptSet& prompts,
                                          CallRecord* call = nullptr);

enum class GenerationMode { kDefault, kStrategyProvided, kPrs };

std::string_view name(GenerationMode m);
// Accepts "default", "sp", "strategy-provided", "prs" (case-insensitive).
GenerationMode parse_mode(std::string_view text);

struct GenerationOutput {
  std::optional<ResponseStrategy> declared_rs;
  std::string response_text;
  std::string raw_output;
};

// Tag-based parsing of a generator reply for the given mode.
GenerationOutput parse_generation(GenerationMode mode, std::string_view reply);

// Renders the mode's prompt for `sample`. The TS slot is filled from
// `ts` when given, else from the sample's label.
std::string generation_prompt(const Sample& sample, GenerationMode mode,
                              std::optional<TrollingStrategy> ts,
                              std::optional<ResponseStrategy> prs, const PromptSet& prompts);

GenerationOutput generate_cr(const Sample& sample, GenerationMode mode,
                             std::optional<ResponseStrategy> prs, const GenerationConfig& config,
                             LlmClient& client, const PromptSet& prompts,
                             std::optional<TrollingStrategy> ts = std::nullopt,
                             CallRecord* call = nullptr);

}  // namespace trollguard

#endif  // TROLLGUARD_LLM_GATEWAY_H_
