#ifndef TROLLGUARD_CONFIG_H_
#define TROLLGUARD_CONFIG_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "trollguard/llm_gateway.h"

namespace trollguard {

// Flat key/value settings read from a TOML-style file:
//
//   # comment
//   [llm]
//   endpoint = "https://api.example.com/v1/chat/completions"
//   temperature = 0.0
//
// Section headers prefix the keys that follow ("llm.endpoint").
class Config {
 public:
  Config() = default;

  static Config parse(std::string_view text);
  static Config load(const std::string& path);

  void set(std::string key, std::string value);
  bool has(std::string_view key) const;
  std::optional<std::string> get(std::string_view key) const;

  std::string get_string(std::string_view key, std::string fallback) const;
  double get_double(std::string_view key, double fallback) const;
  int get_int(std::string_view key, int fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;

  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

struct LlmSettings {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string api_key;  // from LLM_API_KEY
  int parallelism = 4;
  GenerationConfig generation;
};

// Reads llm.endpoint, llm.model, llm.temperature, llm.parallelism and the
// LLM_API_KEY environment variable.
LlmSettings llm_settings(const Config& config);

}  // namespace trollguard

#endif  // TROLLGUARD_CONFIG_H_
