#include "trollguard/config.h"

#include <cstdlib>

#include "trollguard/error.h"
#include "trollguard/text.h"

namespace trollguard {
namespace {

std::string unquote(std::string_view v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) {
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
      if (v.front() == '"' && v[i] == '\\' && i + 2 < v.size()) {
        const char c = v[++i];
        out += c == 'n' ? '\n' : c == 't' ? '\t' : c;
      } else {
        out += v[i];
      }
    }
    return out;
  }
  return std::string(v);
}

// Drops a trailing "# ..." that is not inside quotes.
std::string_view strip_comment(std::string_view line) {
  char quote = 0;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quote != 0) {
      if (c == '\\' && quote == '"') {
        ++i;
      } else if (c == quote) {
        quote = 0;
      }
    } else if (c == '"' || c == '\'') {
      quote = c;
    } else if (c == '#') {
      return line.substr(0, i);
    }
  }
  return line;
}

[[noreturn]] void bad_value(std::string_view key, const std::string& value) {
  throw Error(Errc::kInvalidArgument,
              "config key " + std::string(key) + " has invalid value '" + value + "'");
}

}  // namespace

Config Config::parse(std::string_view text) {
  Config config;
  std::string section;
  std::size_t line_no = 0;
  for (const auto& raw : split_lines(text)) {
    ++line_no;
    const auto line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw Error(Errc::kMalformedRecord, "unterminated section header").with_line(line_no);
      }
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(Errc::kMalformedRecord, "expected key = value").with_line(line_no);
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw Error(Errc::kMalformedRecord, "empty key").with_line(line_no);
    std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    config.set(std::move(full), unquote(trim(line.substr(eq + 1))));
  }
  return config;
}

Config Config::load(const std::string& path) { return parse(read_file(path)); }

void Config::set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }

bool Config::has(std::string_view key) const { return values_.find(key) != values_.end(); }

std::optional<std::string> Config::get(std::string_view key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string Config::get_string(std::string_view key, std::string fallback) const {
  auto v = get(key);
  return v ? *v : std::move(fallback);
}

double Config::get_double(std::string_view key, double fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const double d = std::stod(*v, &used);
    if (used == v->size()) return d;
  } catch (const std::exception&) {
  }
  bad_value(key, *v);
}

int Config::get_int(std::string_view key, int fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  try {
    std::size_t used = 0;
    const int i = std::stoi(*v, &used);
    if (used == v->size()) return i;
  } catch (const std::exception&) {
  }
  bad_value(key, *v);
}

bool Config::get_bool(std::string_view key, bool fallback) const {
  const auto v = get(key);
  if (!v) return fallback;
  if (iequals(*v, "true") || *v == "1" || iequals(*v, "yes")) return true;
  if (iequals(*v, "false") || *v == "0" || iequals(*v, "no")) return false;
  bad_value(key, *v);
}

LlmSettings llm_settings(const Config& config) {
  LlmSettings s;
  s.endpoint = config.get_string("llm.endpoint", s.endpoint);
  s.parallelism = config.get_int("llm.parallelism", s.parallelism);
  if (s.parallelism < 1) bad_value("llm.parallelism", std::to_string(s.parallelism));
  s.generation.model_name = config.get_string("llm.model", s.generation.model_name);
  s.generation.temperature = config.get_double("llm.temperature", s.generation.temperature);
  if (const char* key = std::getenv("LLM_API_KEY")) s.api_key = key;
  s.generation.validate();
  return s;
}

}  // namespace trollguard
