#include <doctest.h>

#include "trollguard/error.h"
#include "trollguard/taxonomy.h"

using namespace trollguard;

TEST_SUITE("taxonomy") {
  TEST_CASE("enumerations have the expected sizes and order") {
    CHECK(kAllTS.size() == 6);
    CHECK(kAllRS.size() == 7);
    CHECK(name(kAllTS[0]) == "Aggression");
    CHECK(name(kAllTS[5]) == "Digression");
    CHECK(name(kAllRS[0]) == "Engage");
    CHECK(name(kAllRS[1]) == "Ignore");
    CHECK(name(kAllRS[2]) == "Expose");
    CHECK(name(kAllRS[6]) == "Reciprocate");
  }

  TEST_CASE("coarse categories") {
    CHECK(ts_category(TrollingStrategy::kAggression) == CoarseTS::kOvert);
    CHECK(ts_category(TrollingStrategy::kDigression) == CoarseTS::kCovert);
    CHECK(rs_category(ResponseStrategy::kEngage) == CoarseRS::kNudging);
    CHECK(rs_category(ResponseStrategy::kReciprocate) == CoarseRS::kConfrontational);
    int overt = 0, nudging = 0;
    for (auto ts : kAllTS) overt += ts_category(ts) == CoarseTS::kOvert;
    for (auto rs : kAllRS) nudging += rs_category(rs) == CoarseRS::kNudging;
    CHECK(overt == 3);
    CHECK(nudging == 3);
  }

  TEST_CASE("parse_label normalizes case and whitespace") {
    CHECK(std::get<ResponseStrategy>(parse_label("challenge", LabelKind::kResponseStrategy)) ==
          ResponseStrategy::kChallenge);
    CHECK(std::get<TrollingStrategy>(parse_label(" Digression ", LabelKind::kTrollingStrategy)) ==
          TrollingStrategy::kDigression);
  }

  TEST_CASE("unknown labels carry the offending text") {
    try {
      parse_label("Sarcasm", LabelKind::kTrollingStrategy);
      FAIL("expected UnknownLabel");
    } catch (const Error& e) {
      CHECK(e.code() == Errc::kUnknownLabel);
      CHECK(std::string(e.what()).find("Sarcasm") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_rs("Aggression"), Error);
    CHECK_THROWS_AS(parse_ts("Engage"), Error);
  }

  TEST_CASE("names round-trip") {
    for (auto ts : kAllTS) CHECK(parse_ts(name(ts)) == ts);
    for (auto rs : kAllRS) CHECK(parse_rs(name(rs)) == rs);
    for (auto ts : kAllTS) CHECK_FALSE(definition(ts).empty());
  }
}
