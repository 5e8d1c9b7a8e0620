#include "trollguard/taxonomy.h"

#include <algorithm>
#include <cctype>
#include <optional>

#include "trollguard/error.h"
#include "trollguard/text.h"

namespace trollguard {
namespace {

constexpr std::array<std::string_view, kNumTS> kTSNames = {
    "Aggression", "Shocking", "Endangering",
    "Antipathy",  "Hypocriticism", "Digression",
};

constexpr std::array<std::string_view, kNumRS> kRSNames = {
    "Engage", "Ignore", "Expose", "Challenge", "Critique", "Mock", "Reciprocate",
};

constexpr std::array<std::string_view, kNumTS> kTSDefinitions = {
    "Engages in direct and unwarranted hostility without any apparent reason",
    "exploits sensitive or contentious topics to provoke emotional reaction",
    "Pretends to offer help or advice but actually causes harm",
    "Proactively and subtly introduces controversial or provocative topics",
    "Targets someone with criticism for a fault or a flaw to undermine the "
    "critic's position",
    "Deviates from the main topic or purpose of the discussion to derail or "
    "disrupt the conversation flow",
};

template <std::size_t N>
std::optional<std::size_t> find_name(const std::array<std::string_view, N>& names,
                                     std::string_view text) {
  const std::string_view trimmed = trim(text);
  for (std::size_t i = 0; i < N; ++i) {
    if (iequals(names[i], trimmed)) return i;
  }
  return std::nullopt;
}

}  // namespace

std::string_view name(TrollingStrategy ts) { return kTSNames[index_of(ts)]; }
std::string_view name(ResponseStrategy rs) { return kRSNames[index_of(rs)]; }

std::string_view name(CoarseTS c) {
  return c == CoarseTS::kOvert ? "Overt" : "Covert";
}

std::string_view name(CoarseRS c) {
  return c == CoarseRS::kNudging ? "Nudging" : "Confrontational";
}

std::string_view definition(TrollingStrategy ts) {
  return kTSDefinitions[index_of(ts)];
}

TrollingStrategy parse_ts(std::string_view text) {
  if (auto i = find_name(kTSNames, text)) return kAllTS[*i];
  throw Error(Errc::kUnknownLabel, std::string(text));
}

ResponseStrategy parse_rs(std::string_view text) {
  if (auto i = find_name(kRSNames, text)) return kAllRS[*i];
  throw Error(Errc::kUnknownLabel, std::string(text));
}

StrategyLabel parse_label(std::string_view text, LabelKind kind) {
  if (kind == LabelKind::kTrollingStrategy) return parse_ts(text);
  return parse_rs(text);
}

}  // namespace trollguard
