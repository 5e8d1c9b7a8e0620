#ifndef TROLLGUARD_TAXONOMY_H_
#define TROLLGUARD_TAXONOMY_H_

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <variant>

namespace trollguard {

// Rows of every TS x RS matrix follow this order (overt -> covert).
enum class TrollingStrategy {
  kAggression = 0,
  kShocking,
  kEndangering,
  kAntipathy,
  kHypocriticism,
  kDigression,
};

// Columns of every TS x RS matrix follow this order.
enum class ResponseStrategy {
  kEngage = 0,
  kIgnore,
  kExpose,
  kChallenge,
  kCritique,
  kMock,
  kReciprocate,
};

enum class CoarseTS { kOvert = 0, kCovert };
enum class CoarseRS { kNudging = 0, kConfrontational };

inline constexpr std::size_t kNumTS = 6;
inline constexpr std::size_t kNumRS = 7;

inline constexpr std::array<TrollingStrategy, kNumTS> kAllTS = {
    TrollingStrategy::kAggression,  TrollingStrategy::kShocking,
    TrollingStrategy::kEndangering, TrollingStrategy::kAntipathy,
    TrollingStrategy::kHypocriticism, TrollingStrategy::kDigression,
};

inline constexpr std::array<ResponseStrategy, kNumRS> kAllRS = {
    ResponseStrategy::kEngage,    ResponseStrategy::kIgnore,
    ResponseStrategy::kExpose,    ResponseStrategy::kChallenge,
    ResponseStrategy::kCritique,  ResponseStrategy::kMock,
    ResponseStrategy::kReciprocate,
};

constexpr std::size_t index_of(TrollingStrategy ts) {
  return static_cast<std::size_t>(ts);
}
constexpr std::size_t index_of(ResponseStrategy rs) {
  return static_cast<std::size_t>(rs);
}
constexpr std::size_t index_of(CoarseTS c) { return static_cast<std::size_t>(c); }
constexpr std::size_t index_of(CoarseRS c) { return static_cast<std::size_t>(c); }

constexpr CoarseTS ts_category(TrollingStrategy ts) {
  return index_of(ts) < 3 ? CoarseTS::kOvert : CoarseTS::kCovert;
}

constexpr CoarseRS rs_category(ResponseStrategy rs) {
  return index_of(rs) < 3 ? CoarseRS::kNudging : CoarseRS::kConfrontational;
}

std::string_view name(TrollingStrategy ts);
std::string_view name(ResponseStrategy rs);
std::string_view name(CoarseTS c);
std::string_view name(CoarseRS c);

// One-line definitions as they appear in the generation prompts.
std::string_view definition(TrollingStrategy ts);

enum class LabelKind { kTrollingStrategy, kResponseStrategy };

using StrategyLabel = std::variant<TrollingStrategy, ResponseStrategy>;

// Case-insensitive, whitespace-trimmed match against the canonical names.
// Throws Error(kUnknownLabel) carrying the offending text.
StrategyLabel parse_label(std::string_view text, LabelKind kind);
TrollingStrategy parse_ts(std::string_view text);
ResponseStrategy parse_rs(std::string_view text);

}  // namespace trollguard

#endif  // TROLLGUARD_TAXONOMY_H_
