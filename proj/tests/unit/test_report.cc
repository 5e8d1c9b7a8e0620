#include <doctest.h>

#include <cstdlib>
#include <filesystem>

#include "test_util.h"
#include "trollguard/report.h"
#include "trollguard/text.h"

using namespace trollguard;

namespace {

// Compares against tests/golden/reports/<name>; TROLLGUARD_UPDATE_GOLDENS=1
// rewrites the file instead.
void check_golden(const std::string& name, const std::string& rendered) {
  const std::string path = trollguard::testing::golden_path("reports/" + name);
  if (std::getenv("TROLLGUARD_UPDATE_GOLDENS") != nullptr) {
    std::filesystem::create_directories(std::filesystem::path(path).parent_path());
    write_file_atomic(path, rendered);
  }
  CHECK(rendered == read_file(path));
}

ModelSummary summary(std::string model, double mean_rank, double mean = 0, double std = 0) {
  return {std::move(model), 250, mean_rank, mean, std};
}

PairwiseResult pair(std::string i, std::string j, double z, double p) {
  return {std::move(i), std::move(j), TestResult{z, std::nullopt, p, 250, kWilcoxonNormal, {}}};
}

TestResult omnibus(double chi2, double p) { return {chi2, 2, p, 250, kFriedman, {}}; }

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("p-value formatting and stars") {
    CHECK(format_p(0.314) == ".314");
    CHECK(format_p(0.0141) == ".014*");
    CHECK(format_p(0.0041) == ".004**");
    CHECK(format_p(1e-9) == ".000***");
    CHECK(format_p(1.0) == "1.000");
    CHECK(stars(0.05) == "");
    CHECK(stars(0.0499) == "*");
    CHECK(stars(0.00999) == "**");
    CHECK(stars(0.000999) == "***");
  }

  TEST_CASE("alignment table layout") {
    const std::vector<AlignmentRow> rows = {
        {"Default", {{0.253, 0.257}, {0.378, 0.404}}},
        {"SP", {{0.288, 0.292}, {0.409, 0.433}}},
        {"Ours", {{0.156, 0.157}, {0.338, 0.365}}},
    };
    check_golden("alignment.txt", render_alignment_table(rows));
  }

  TEST_CASE("preference report layout") {
    SignificanceReport r;
    r.dimension = ScoreDimension::kPreference;
    r.models = {summary("Default", 1.82), summary("Strategy-Provided", 2.44), summary("Ours", 1.74)};
    r.omnibus = omnibus(75.51, 1e-16);
    r.pairwise = {pair("Default", "Strategy-Provided", -6.79, 1e-11),
                  pair("Default", "Ours", 1.01, 0.314),
                  pair("Strategy-Provided", "Ours", 7.49, 1e-13)};
    check_golden("preference.txt", render_significance(r));
  }

  TEST_CASE("constructiveness report layout") {
    SignificanceReport r;
    r.dimension = ScoreDimension::kConstructiveness;
    r.models = {summary("Default", 0, 4.03, 1.04), summary("Strategy-Provided", 0, 3.03, 1.31),
                summary("Ours", 0, 4.25, 1.02)};
    r.omnibus = omnibus(142.30, 1e-30);
    r.pairwise = {pair("Default", "Strategy-Provided", 8.33, 1e-16),
                  pair("Default", "Ours", -2.46, 0.014),
                  pair("Strategy-Provided", "Ours", -10.15, 1e-23)};
    check_golden("constructiveness.txt", render_significance(r));
  }

  TEST_CASE("supportiveness report layout") {
    SignificanceReport r;
    r.dimension = ScoreDimension::kSupportiveness;
    r.models = {summary("Default", 0, 3.94, 1.13), summary("Strategy-Provided", 0, 3.05, 1.36),
                summary("Ours", 0, 4.07, 1.05)};
    r.omnibus = omnibus(106.25, 1e-23);
    r.pairwise = {pair("Default", "Strategy-Provided", 8.03, 1e-15),
                  pair("Default", "Ours", -2.05, 0.041),
                  pair("Strategy-Provided", "Ours", -9.35, 1e-20)};
    check_golden("supportiveness.txt", render_significance(r));
  }

  TEST_CASE("identical columns render without stars") {
    ScoreMatrix m{{"A", "B", "C"}, {}, {{3, 3, 3}, {4, 4, 4}, {2, 2, 2}}};
    const std::string text = render_significance(significance_report(m, ScoreDimension::kSupportiveness));
    CHECK(text.find('*') == std::string::npos);
    CHECK(text.find("1.000") != std::string::npos);
  }
}
