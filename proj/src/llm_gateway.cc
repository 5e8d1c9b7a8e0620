#include "trollguard/llm_gateway.h"

#include <regex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "trollguard/error.h"
#include "trollguard/http.h"
#include "trollguard/resources.h"
#include "trollguard/text.h"

namespace trollguard {

using nlohmann::json;

namespace {

std::string load_resource(const std::string& dir, std::string_view file) {
  if (!dir.empty()) return read_file(dir + "/" + std::string(file));
  const std::string key = "prompts/" + std::string(file);
  const auto text = embedded_resource(key);
  if (!text) throw Error(Errc::kIoFailure, "missing built-in resource " + key);
  return std::string(*text);
}

struct Slot {
  std::size_t begin;  // index of '{'
  std::size_t end;    // one past '}'
  std::string name;
};

std::vector<Slot> scan_slots(std::string_view text) {
  std::vector<Slot> slots;
  std::size_t pos = 0;
  while ((pos = text.find('{', pos)) != std::string_view::npos) {
    const auto close = text.find_first_of("{}\n", pos + 1);
    if (close == std::string_view::npos) break;
    if (text[close] != '}' || close == pos + 1) {
      pos = close;
      continue;
    }
    slots.push_back({pos, close + 1, std::string(text.substr(pos + 1, close - pos - 1))});
    pos = close + 1;
  }
  return slots;
}

std::string call_llm(LlmClient& client, const std::string& prompt, const GenerationConfig& config,
                     CallRecord* call) {
  if (call != nullptr) {
    call->prompt = prompt;
    call->prompt_hash = sha256_hex(prompt);
  }
  std::string reply = client.complete(prompt, config);
  if (call != nullptr) call->raw_output = reply;
  return reply;
}

// A line such as "2) **Response:** text" -> ("response", "text").
struct TaggedLine {
  std::string tag;
  std::string rest;
};

std::optional<TaggedLine> match_tag(const std::string& line) {
  static const std::regex kTag(
      R"(^\s*(?:[-*#>]+\s*)?(?:\(?\d+[.):]\)?\s*)?[*_]*\s*(response\s*strategy|response|analysis)\s*[*_]*\s*:\s*[*_]*\s*(.*)$)",
      std::regex::icase | std::regex::ECMAScript);
  std::smatch m;
  if (!std::regex_match(line, m, kTag)) return std::nullopt;
  std::string tag = to_lower(m[1].str());
  tag.erase(std::remove_if(tag.begin(), tag.end(), [](unsigned char c) { return std::isspace(c); }),
            tag.end());
  return TaggedLine{tag, m[2].str()};
}

struct TaggedReply {
  std::map<std::string, std::string> sections;
  bool any_tag = false;
};

TaggedReply split_tags(std::string_view reply) {
  TaggedReply out;
  std::string current;
  for (const auto& line : split_lines(reply)) {
    if (auto tagged = match_tag(line)) {
      out.any_tag = true;
      current = tagged->tag;
      out.sections[current] = tagged->rest;
    } else if (!current.empty()) {
      out.sections[current] += "\n" + line;
    }
  }
  for (auto& [tag, text] : out.sections) text = std::string(trim(text));
  return out;
}

}  // namespace

void GenerationConfig::validate() const {
  if (!(temperature >= 0.0)) throw Error(Errc::kInvalidArgument, "temperature must be >= 0");
  if (n < 1) throw Error(Errc::kInvalidArgument, "n must be >= 1");
  if (max_retries < 0) throw Error(Errc::kInvalidArgument, "max_retries must be >= 0");
}

std::string_view name(TemplateName t) {
  switch (t) {
    case TemplateName::kTrollClassifier: return "TrollClassifier";
    case TemplateName::kDefault: return "Default";
    case TemplateName::kStrategyProvided: return "StrategyProvided";
    case TemplateName::kPrs: return "PRS";
    case TemplateName::kTsElicitation: return "TsElicitation";
  }
  return "Unknown";
}

std::string_view template_file(TemplateName t) {
  switch (t) {
    case TemplateName::kTrollClassifier: return "troll_classifier.txt";
    case TemplateName::kDefault: return "cr_default.txt";
    case TemplateName::kStrategyProvided: return "cr_sp.txt";
    case TemplateName::kPrs: return "cr_prs.txt";
    case TemplateName::kTsElicitation: return "ts_elicitation.txt";
  }
  return "";
}

const std::set<std::string>& PromptTemplate::declared_placeholders(TemplateName name) {
  static const std::set<std::string> kBase = {"Subreddit", "Title", "Post", "Comment"};
  static const std::set<std::string> kClassifier = {"Subreddit", "Title", "Post", "Comment",
                                                    "example"};
  static const std::set<std::string> kSp = {"Subreddit", "Title", "Post", "Comment",
                                            "TrollingStrategy", "strategy example"};
  static const std::set<std::string> kPrs = {"Subreddit",        "Title",
                                             "Post",             "Comment",
                                             "TrollingStrategy", "strategy example",
                                             "response strategy"};
  switch (name) {
    case TemplateName::kTrollClassifier: return kClassifier;
    case TemplateName::kStrategyProvided: return kSp;
    case TemplateName::kPrs: return kPrs;
    case TemplateName::kDefault:
    case TemplateName::kTsElicitation: return kBase;
  }
  return kBase;
}

PromptTemplate::PromptTemplate(TemplateName name, std::string text)
    : name_(name), text_(std::move(text)) {
  const auto& declared = declared_placeholders(name_);
  for (const auto& slot : scan_slots(text_)) {
    if (!declared.count(slot.name)) {
      throw Error(Errc::kInvalidArgument, "template " + std::string(trollguard::name(name_)) +
                                              " uses undeclared placeholder {" + slot.name + "}");
    }
  }
}

PromptTemplate PromptTemplate::load(TemplateName name, const std::string& dir) {
  return PromptTemplate(name, load_resource(dir, template_file(name)));
}

std::vector<std::string> PromptTemplate::used_placeholders() const {
  std::vector<std::string> names;
  for (const auto& slot : scan_slots(text_)) {
    if (std::find(names.begin(), names.end(), slot.name) == names.end()) {
      names.push_back(slot.name);
    }
  }
  return names;
}

std::string render(const PromptTemplate& tmpl, const Sample& sample, const Extras& extras) {
  Extras values = {
      {std::string(kSubreddit), sample.context.subreddit},
      {std::string(kTitle), sample.context.title},
      {std::string(kPost), sample.context.body},
      {std::string(kComment), sample.troll_comment.text},
  };
  if (sample.ts_label) values[std::string(kTrollingStrategy)] = std::string(name(*sample.ts_label));
  for (const auto& [k, v] : extras) values[k] = v;

  const std::string& text = tmpl.text();
  std::string out;
  out.reserve(text.size() + 512);
  std::size_t cursor = 0;
  for (const auto& slot : scan_slots(text)) {
    auto it = values.find(slot.name);
    if (it == values.end()) throw Error(Errc::kMissingPlaceholder, slot.name);
    out.append(text, cursor, slot.begin - cursor);
    out += it->second;
    cursor = slot.end;
  }
  out.append(text, cursor, std::string::npos);
  return out;
}

PromptResources PromptResources::load(const std::string& dir) {
  PromptResources res;
  res.troll_examples = load_resource(dir, "troll_examples.txt");
  while (!res.troll_examples.empty() && res.troll_examples.back() == '\n') {
    res.troll_examples.pop_back();
  }
  const std::string raw = load_resource(dir, "strategy_examples.json");
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::exception& e) {
    throw Error(Errc::kMalformedRecord, std::string("strategy_examples.json: ") + e.what());
  }
  if (!j.is_object()) throw Error(Errc::kMalformedRecord, "strategy_examples.json: not an object");
  for (const auto& [key, value] : j.items()) {
    if (!value.is_string()) {
      throw Error(Errc::kMalformedRecord, "strategy_examples.json: value for " + key);
    }
    res.strategy_examples[parse_rs(key)] = value.get<std::string>();
  }
  for (auto rs : kAllRS) {
    if (!res.strategy_examples.count(rs)) {
      throw Error(Errc::kMalformedRecord,
                  "strategy_examples.json: missing " + std::string(name(rs)));
    }
  }
  return res;
}

std::string PromptResources::all_strategy_examples() const {
  std::string out;
  for (auto rs : kAllRS) {
    if (!out.empty()) out += "\n\n";
    out += strategy_examples.at(rs);
  }
  return out;
}

PromptSet PromptSet::load(const std::string& dir) {
  return PromptSet{
      PromptTemplate::load(TemplateName::kTrollClassifier, dir),
      PromptTemplate::load(TemplateName::kDefault, dir),
      PromptTemplate::load(TemplateName::kStrategyProvided, dir),
      PromptTemplate::load(TemplateName::kPrs, dir),
      PromptTemplate::load(TemplateName::kTsElicitation, dir),
      PromptResources::load(dir),
  };
}

const PromptTemplate& PromptSet::get(TemplateName t) const {
  switch (t) {
    case TemplateName::kTrollClassifier: return troll_classifier;
    case TemplateName::kDefault: return cr_default;
    case TemplateName::kStrategyProvided: return cr_sp;
    case TemplateName::kPrs: return cr_prs;
    case TemplateName::kTsElicitation: return ts_elicitation;
  }
  return cr_default;
}

const std::string& ChatRequest::prompt() const {
  static const std::string kEmpty;
  for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
    if (it->role == "user") return it->content;
  }
  return kEmpty;
}

HttpTransport::HttpTransport(std::string endpoint, std::string api_key)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)) {}

std::string HttpTransport::request_body(const ChatRequest& request) {
  const auto& c = request.config;
  json messages = json::array();
  for (const auto& m : request.messages) messages.push_back({{"role", m.role}, {"content", m.content}});
  json body = {
      {"model", c.model_name},
      {"messages", messages},
      {"temperature", c.temperature},
      {"n", c.n},
      {"presence_penalty", c.presence_penalty},
      {"frequency_penalty", c.frequency_penalty},
  };
  body["stop"] = c.stop ? json(*c.stop) : json(nullptr);
  return body.dump();
}

std::string HttpTransport::parse_response(std::string_view body) {
  const json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(Errc::kParseFailure, "chat response is not JSON");
  }
  const auto choices = j.find("choices");
  if (choices == j.end() || !choices->is_array() || choices->empty()) {
    throw Error(Errc::kParseFailure, "chat response has no choices");
  }
  const json& first = (*choices)[0];
  if (first.contains("message") && first["message"].contains("content") &&
      first["message"]["content"].is_string()) {
    return first["message"]["content"].get<std::string>();
  }
  if (first.contains("text") && first["text"].is_string()) return first["text"].get<std::string>();
  throw Error(Errc::kParseFailure, "chat response choice has no content");
}

std::string HttpTransport::complete(const ChatRequest& request) {
  std::map<std::string, std::string> headers;
  if (!api_key_.empty()) headers["Authorization"] = "Bearer " + api_key_;
  const double timeout_s =
      std::chrono::duration<double>(request.config.timeout).count();
  const auto res = http_post(endpoint_, request_body(request), headers, timeout_s);
  if (res.status < 200 || res.status >= 300) {
    throw Error(Errc::kTransportFailure, "LLM endpoint returned HTTP " + std::to_string(res.status));
  }
  return parse_response(res.body);
}

void MockTransport::add_reply(std::string_view prompt, std::string reply) {
  add_reply_by_hash(sha256_hex(prompt), std::move(reply));
}

void MockTransport::add_reply_by_hash(std::string prompt_hash, std::string reply) {
  std::lock_guard lock(mu_);
  by_hash_[std::move(prompt_hash)] = std::move(reply);
}

void MockTransport::load_replay_jsonl(std::string_view jsonl) {
  std::size_t line_no = 0;
  for (const auto& line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("reply") ||
        !(j.contains("prompt_hash") || j.contains("prompt"))) {
      throw Error(Errc::kMalformedRecord, "replay record needs prompt_hash/prompt and reply")
          .with_line(line_no);
    }
    const std::string reply = j["reply"].get<std::string>();
    if (j.contains("prompt_hash")) {
      add_reply_by_hash(j["prompt_hash"].get<std::string>(), reply);
    } else {
      add_reply(j["prompt"].get<std::string>(), reply);
    }
  }
}

std::string MockTransport::complete(const ChatRequest& request) {
  const std::string hash = sha256_hex(request.prompt());
  {
    std::lock_guard lock(mu_);
    ++calls_;
    if (auto it = by_hash_.find(hash); it != by_hash_.end()) return it->second;
  }
  if (fallback_) return fallback_(request);
  throw Error(Errc::kTransportFailure, "no mock reply for prompt " + hash);
}

std::size_t MockTransport::calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

LlmClient::LlmClient(Transport& transport, int parallelism, RetryPolicy retry, Sleeper sleeper,
                     std::uint64_t jitter_seed)
    : transport_(transport),
      parallelism_(std::max(1, parallelism)),
      retry_(retry),
      sleeper_(sleeper ? std::move(sleeper)
                       : Sleeper([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); })),
      slots_(std::max(1, parallelism)),
      rng_(jitter_seed) {}

std::chrono::milliseconds LlmClient::backoff(int attempt) {
  double delay = static_cast<double>(retry_.initial_backoff.count());
  for (int i = 0; i < attempt; ++i) delay *= retry_.multiplier;
  double factor = 1.0;
  if (retry_.jitter > 0.0) {
    std::lock_guard lock(rng_mu_);
    std::uniform_real_distribution<double> dist(1.0 - retry_.jitter, 1.0 + retry_.jitter);
    factor = dist(rng_);
  }
  return std::chrono::milliseconds(static_cast<std::int64_t>(delay * factor));
}

std::string LlmClient::complete(const std::string& prompt, const GenerationConfig& config) {
  config.validate();
  ChatRequest request{{{"user", prompt}}, config};

  slots_.acquire();
  struct Release {
    std::counting_semaphore<1 << 16>& s;
    ~Release() { s.release(); }
  } release{slots_};

  for (int attempt = 0;; ++attempt) {
    try {
      return transport_.complete(request);
    } catch (const Error& e) {
      if (e.code() != Errc::kTransportFailure || attempt >= config.max_retries) throw;
    }
    sleeper_(backoff(attempt));
  }
}

TrollVerdict parse_troll_verdict(std::string_view reply) {
  std::string_view text = trim(reply);
  if (istarts_with(text, "output:")) text = trim(text.substr(7));
  while (!text.empty() && (text.front() == '"' || text.front() == '\'' || text.front() == '*')) {
    text.remove_prefix(1);
  }
  std::size_t end = 0;
  while (end < text.size() && std::isalpha(static_cast<unsigned char>(text[end]))) ++end;
  const std::string_view token = text.substr(0, end);
  if (iequals(token, "trolling")) return {true, std::string(reply)};
  if (istarts_with(token, "not")) return {false, std::string(reply)};
  throw Error(Errc::kParseFailure, std::string(reply));
}

std::string classifier_prompt(const Sample& sample, const PromptSet& prompts) {
  return render(prompts.troll_classifier, sample,
                {{std::string(kExampleSlot), prompts.resources.troll_examples}});
}

std::string ts_elicitation_prompt(const Sample& sample, const PromptSet& prompts) {
  return render(prompts.ts_elicitation, sample);
}

TrollVerdict classify_troll(const Sample& sample, const GenerationConfig& config,
                            LlmClient& client, const PromptSet& prompts, CallRecord* call) {
  const std::string prompt = classifier_prompt(sample, prompts);
  return parse_troll_verdict(call_llm(client, prompt, config, call));
}

TrollingStrategy elicit_trolling_strategy(const Sample& sample, const GenerationConfig& config,
                                          LlmClient& client, const PromptSet& prompts,
                                          CallRecord* call) {
  const std::string prompt = ts_elicitation_prompt(sample, prompts);
  const std::string reply = call_llm(client, prompt, config, call);
  std::string_view text = trim(reply);
  if (istarts_with(text, "output:")) text = trim(text.substr(7));
  if (istarts_with(text, "trollingstrategy:")) text = trim(text.substr(17));
  std::size_t end = 0;
  while (end < text.size() && std::isalpha(static_cast<unsigned char>(text[end]))) ++end;
  try {
    return parse_ts(text.substr(0, end));
  } catch (const Error&) {
    throw Error(Errc::kParseFailure, reply);
  }
}

std::string_view name(GenerationMode m) {
  switch (m) {
    case GenerationMode::kDefault: return "default";
    case GenerationMode::kStrategyProvided: return "sp";
    case GenerationMode::kPrs: return "prs";
  }
  return "unknown";
}

GenerationMode parse_mode(std::string_view text) {
  const std::string_view t = trim(text);
  if (iequals(t, "default")) return GenerationMode::kDefault;
  if (iequals(t, "sp") || iequals(t, "strategy-provided") || iequals(t, "strategyprovided")) {
    return GenerationMode::kStrategyProvided;
  }
  if (iequals(t, "prs")) return GenerationMode::kPrs;
  throw Error(Errc::kInvalidArgument, "unknown generation mode: " + std::string(text));
}

GenerationOutput parse_generation(GenerationMode mode, std::string_view reply) {
  GenerationOutput out;
  out.raw_output = std::string(reply);
  const TaggedReply tagged = split_tags(reply);
  const auto response = tagged.sections.find("response");

  switch (mode) {
    case GenerationMode::kStrategyProvided: {
      const auto strategy = tagged.sections.find("responsestrategy");
      if (strategy == tagged.sections.end()) {
        throw Error(Errc::kParseFailure, "missing ResponseStrategy: " + out.raw_output);
      }
      std::string_view label = strategy->second;
      if (auto nl = label.find('\n'); nl != std::string_view::npos) label = label.substr(0, nl);
      std::string cleaned(label);
      std::erase_if(cleaned, [](char c) { return c == '*' || c == '"' || c == '.'; });
      try {
        out.declared_rs = parse_rs(cleaned);
      } catch (const Error&) {
        throw Error(Errc::kParseFailure, "unknown ResponseStrategy: " + std::string(label));
      }
      if (response == tagged.sections.end()) {
        throw Error(Errc::kParseFailure, "missing Response: " + out.raw_output);
      }
      out.response_text = response->second;
      break;
    }
    case GenerationMode::kPrs:
      if (response != tagged.sections.end()) {
        out.response_text = response->second;
      } else if (tagged.sections.count("analysis")) {
        throw Error(Errc::kParseFailure, "Analysis without Response: " + out.raw_output);
      } else {
        out.response_text = std::string(trim(reply));
      }
      break;
    case GenerationMode::kDefault:
      out.response_text = response != tagged.sections.end() ? response->second
                                                            : std::string(trim(reply));
      break;
  }
  if (out.response_text.empty()) throw Error(Errc::kParseFailure, "empty response: " + out.raw_output);
  return out;
}

std::string generation_prompt(const Sample& sample, GenerationMode mode,
                              std::optional<TrollingStrategy> ts,
                              std::optional<ResponseStrategy> prs, const PromptSet& prompts) {
  if (!ts) ts = sample.ts_label;
  switch (mode) {
    case GenerationMode::kDefault:
      // The default generator sees only the post and the comment.
      return render(prompts.cr_default, sample);
    case GenerationMode::kStrategyProvided: {
      if (!ts) throw Error(Errc::kPreconditionViolation, "strategy-provided mode needs a TS");
      return render(prompts.cr_sp, sample,
                    {{std::string(kTrollingStrategy), std::string(name(*ts))},
                     {std::string(kStrategyExampleSlot), prompts.resources.all_strategy_examples()}});
    }
    case GenerationMode::kPrs: {
      if (!ts) throw Error(Errc::kPreconditionViolation, "PRS mode needs a TS");
      if (!prs) throw Error(Errc::kPreconditionViolation, "PRS mode needs a recommended strategy");
      return render(prompts.cr_prs, sample,
                    {{std::string(kTrollingStrategy), std::string(name(*ts))},
                     {std::string(kResponseStrategySlot), std::string(name(*prs))},
                     {std::string(kStrategyExampleSlot), prompts.resources.strategy_examples.at(*prs)}});
    }
  }
  throw Error(Errc::kInvalidArgument, "unknown generation mode");
}

GenerationOutput generate_cr(const Sample& sample, GenerationMode mode,
                             std::optional<ResponseStrategy> prs, const GenerationConfig& config,
                             LlmClient& client, const PromptSet& prompts,
                             std::optional<TrollingStrategy> ts, CallRecord* call) {
  const std::string prompt = generation_prompt(sample, mode, ts, prs, prompts);
  return parse_generation(mode, call_llm(client, prompt, config, call));
}

}  // namespace trollguard
