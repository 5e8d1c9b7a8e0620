#ifndef TROLLGUARD_TESTS_TEST_UTIL_H_
#define TROLLGUARD_TESTS_TEST_UTIL_H_

#include <chrono>
#include <string>

#include "trollguard/corpus.h"
#include "trollguard/llm_gateway.h"
#include "trollguard/prs_recommender.h"
#include "trollguard/text.h"

namespace trollguard::testing {

inline std::string fixture_path(const std::string& name) {
  return std::string(TROLLGUARD_TEST_DIR) + "/fixtures/" + name;
}

inline std::string golden_path(const std::string& name) {
  return std::string(TROLLGUARD_TEST_DIR) + "/golden/" + name;
}

inline std::string golden(const std::string& name) { return read_file(golden_path(name)); }

inline Sample prego() {
  return sample_from_json(nlohmann::json::parse(read_file(fixture_path("prego_sample.json"))));
}

// The published preference counts, typed in independently of the shipped CSV.
inline ContingencyTable published_table() {
  return ContingencyTable({{{9, 5, 9, 72, 40, 11, 37},
                            {6, 1, 22, 50, 24, 10, 6},
                            {1, 1, 24, 9, 14, 1, 0},
                            {141, 46, 78, 15, 15, 14, 0},
                            {26, 5, 10, 1, 8, 1, 0},
                            {60, 66, 23, 3, 6, 5, 0}}});
}

// Last line of a rendered prompt, split on tabs.
inline std::vector<std::string> slot_line(const std::string& prompt) {
  std::string_view p(prompt);
  while (!p.empty() && p.back() == '\n') p.remove_suffix(1);
  const auto nl = p.rfind('\n');
  std::string_view last = nl == std::string_view::npos ? p : p.substr(nl + 1);
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const auto tab = last.find('\t', start);
    fields.emplace_back(last.substr(start, tab - start));
    if (tab == std::string_view::npos) break;
    start = tab + 1;
  }
  return fields;
}

// Deterministic stand-in for the LLM. Comments mentioning "thanks" are
// benign; "???" makes the generator answer with an analysis only.
inline MockTransport::Responder scripted_llm() {
  return [](const ChatRequest& req) -> std::string {
    const std::string prompt = req.prompt();
    const auto fields = slot_line(prompt);
    const std::string comment = fields.size() >= 4 ? fields[3] : "";
    if (icontains(prompt, "classify whether the comment is trolling")) {
      return icontains(comment, "thanks") ? "Not trolling" : "Trolling";
    }
    if (icontains(prompt, "Output: TrollingStrategy")) return "Output: Digression";
    const std::string tag = sha256_hex(comment).substr(0, 8);
    if (comment.find("???") != std::string::npos) return "Analysis: the comment is unclear.";
    if (icontains(prompt, "Output elements: ResponseStrategy, Response")) {
      return "ResponseStrategy: Expose\nResponse: That claim is not accurate [" + tag + "].";
    }
    if (icontains(prompt, "Output elements: Analysis, Response")) {
      return "Analysis: the troll tries to derail.\nResponse: Let's stay on topic [" + tag + "].";
    }
    return "Response: Thanks for sharing your view [" + tag + "].";
  };
}

inline LlmClient::Sleeper no_sleep() {
  return [](std::chrono::milliseconds) {};
}

}  // namespace trollguard::testing

#endif  // TROLLGUARD_TESTS_TEST_UTIL_H_
