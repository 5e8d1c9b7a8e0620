#include "trollguard/eval_stats.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

#include "trollguard/error.h"
#include "trollguard/text.h"

namespace trollguard {
namespace {

// Sum of (t^3 - t) over groups of equal values in sorted input.
double tie_term(std::vector<double> sorted) {
  std::sort(sorted.begin(), sorted.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    const double t = static_cast<double>(j - i);
    sum += t * t * t - t;
    i = j;
  }
  return sum;
}

bool is_key_column(std::string_view name) {
  return iequals(name, "sample") || iequals(name, "sample_id") || iequals(name, "evaluator") ||
         iequals(name, "evaluator_id");
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

}  // namespace

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t m = i; m < j; ++m) ranks[order[m]] = avg;
    i = j;
  }
  return ranks;
}

FriedmanResult friedman(const std::vector<std::vector<double>>& scores) {
  const std::size_t n = scores.size();
  if (n < 2) throw Error(Errc::kDegenerateInput, "Friedman test needs at least 2 rows");
  const std::size_t k = scores.front().size();
  if (k < 2) throw Error(Errc::kDegenerateInput, "Friedman test needs at least 2 columns");

  std::vector<double> rank_sums(k, 0.0);
  double ties = 0.0;
  for (const auto& row : scores) {
    if (row.size() != k) throw Error(Errc::kDegenerateInput, "ragged score matrix");
    for (double v : row) {
      if (!std::isfinite(v)) throw Error(Errc::kDegenerateInput, "non-finite score");
    }
    const auto ranks = average_ranks(row);
    for (std::size_t j = 0; j < k; ++j) rank_sums[j] += ranks[j];
    ties += tie_term(row);
  }

  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  FriedmanResult result;
  result.mean_ranks.resize(k);
  double ss = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    result.mean_ranks[j] = rank_sums[j] / nd;
    const double dev = result.mean_ranks[j] - (kd + 1.0) / 2.0;
    ss += dev * dev;
  }
  const double divisor = 1.0 - ties / (nd * (kd * kd * kd - kd));

  TestResult& t = result.test;
  t.method = kFriedman;
  t.n = n;
  t.df = static_cast<int>(k - 1);
  if (divisor <= 1e-12) {
    t.statistic = 0.0;
    t.p_value = 1.0;
    return result;
  }
  t.statistic = 12.0 * nd / (kd * (kd + 1.0)) * ss / divisor;
  t.p_value = chi2_sf(t.statistic, *t.df);
  return result;
}

double wilcoxon_exact_p(std::span<const double> ranks, double w_plus) {
  // Ranks are multiples of 1/2, so doubled ranks are integers and the null
  // distribution of 2W+ is a subset-sum count.
  std::vector<long> doubled;
  long total = 0;
  for (double r : ranks) {
    doubled.push_back(std::lround(2.0 * r));
    total += doubled.back();
  }
  std::vector<double> ways(static_cast<std::size_t>(total) + 1, 0.0);
  ways[0] = 1.0;
  for (long r : doubled) {
    for (long s = total; s >= r; --s) ways[s] += ways[s - r];
  }
  const long observed = std::lround(2.0 * w_plus);
  // |2W - total| compares distance from the null mean total / 2 on the doubled scale.
  const long cut = std::labs(2 * observed - total);
  double extreme = 0.0;
  for (long s = 0; s <= total; ++s) {
    if (std::labs(2 * s - total) >= cut) extreme += ways[s];
  }
  const double p = extreme / std::ldexp(1.0, static_cast<int>(ranks.size()));
  return std::min(1.0, p);
}

TestResult wilcoxon_signed_rank(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(Errc::kInvalidArgument, "x and y differ in length");
  if (x.empty()) throw Error(Errc::kInvalidArgument, "empty samples");
  std::vector<double> diffs;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (!std::isfinite(d)) throw Error(Errc::kInvalidArgument, "non-finite score");
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) throw Error(Errc::kNoNonzeroDifferences, "all paired differences are zero");

  std::vector<double> abs_d(diffs.size());
  std::transform(diffs.begin(), diffs.end(), abs_d.begin(), [](double d) { return std::abs(d); });
  const auto ranks = average_ranks(abs_d);
  double w_plus = 0.0;
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (diffs[i] > 0) w_plus += ranks[i];
  }

  const double n = static_cast<double>(diffs.size());
  const double mean = n * (n + 1.0) / 4.0;
  const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term(abs_d) / 48.0;

  TestResult t;
  t.n = diffs.size();
  t.w_plus = w_plus;
  t.statistic = var > 0.0 ? (w_plus - mean) / std::sqrt(var) : 0.0;
  if (diffs.size() <= kWilcoxonExactMaxN) {
    t.method = kWilcoxonExact;
    t.p_value = wilcoxon_exact_p(ranks, w_plus);
  } else {
    t.method = kWilcoxonNormal;
    t.p_value = std::min(1.0, std::erfc(std::abs(t.statistic) / std::sqrt(2.0)));
  }
  return t;
}

double chi2_sf(double x, int df) {
  if (!std::isfinite(x) || x < 0.0) throw Error(Errc::kDomainError, "chi2_sf needs x >= 0");
  if (df < 1) throw Error(Errc::kDomainError, "chi2_sf needs df >= 1");
  if (x == 0.0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

double normal_sf(double z) {
  if (std::isnan(z)) throw Error(Errc::kDomainError, "normal_sf of NaN");
  return 0.5 * std::erfc(z / std::sqrt(2.0));
}

std::string_view name(ScoreDimension d) {
  switch (d) {
    case ScoreDimension::kPreference:
      return "preference";
    case ScoreDimension::kConstructiveness:
      return "constructiveness";
    case ScoreDimension::kSupportiveness:
      return "supportiveness";
  }
  return "preference";
}

ScoreDimension parse_score_dimension(std::string_view text) {
  for (auto d : {ScoreDimension::kPreference, ScoreDimension::kConstructiveness,
                 ScoreDimension::kSupportiveness}) {
    if (iequals(trim(text), name(d))) return d;
  }
  throw Error(Errc::kInvalidArgument, "unknown dimension: " + std::string(text));
}

ScoreMatrix parse_scores_csv(std::string_view csv) {
  const auto lines = split_lines(csv);
  std::size_t line_no = 0;
  std::vector<std::string> header;
  std::vector<std::size_t> model_cols;
  std::vector<std::size_t> key_cols;
  ScoreMatrix m;
  for (const auto& line : lines) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    if (header.empty()) {
      header = cells;
      for (std::size_t c = 0; c < header.size(); ++c) {
        if (is_key_column(header[c])) {
          key_cols.push_back(c);
        } else {
          model_cols.push_back(c);
          m.models.push_back(header[c]);
        }
      }
      if (m.models.size() < 2) {
        throw Error(Errc::kMalformedRecord, "scores CSV needs at least 2 model columns")
            .with_line(line_no);
      }
      continue;
    }
    if (cells.size() != header.size()) {
      throw Error(Errc::kMalformedRecord, "expected " + std::to_string(header.size()) + " cells")
          .with_line(line_no);
    }
    std::string key;
    for (std::size_t c : key_cols) key += (key.empty() ? "" : "/") + cells[c];
    std::vector<double> row;
    for (std::size_t c : model_cols) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument(cells[c]);
      } catch (const std::exception&) {
        throw Error(Errc::kMalformedRecord, "not a number: '" + cells[c] + "'").with_line(line_no);
      }
    }
    m.row_keys.push_back(key.empty() ? std::to_string(m.rows.size() + 1) : key);
    m.rows.push_back(std::move(row));
  }
  if (header.empty()) throw Error(Errc::kEmptyInput, "scores CSV is empty");
  return m;
}

ScoreMatrix load_scores_csv(const std::string& path) { return parse_scores_csv(read_file(path)); }

SignificanceReport significance_report(const ScoreMatrix& scores, ScoreDimension dimension) {
  const std::size_t k = scores.models.size();
  if (k < 2) throw Error(Errc::kDegenerateInput, "need at least 2 models");
  SignificanceReport report;
  report.dimension = dimension;

  const FriedmanResult fr = friedman(scores.rows);
  report.omnibus = fr.test;

  std::vector<std::vector<double>> columns(k);
  for (const auto& row : scores.rows) {
    for (std::size_t j = 0; j < k; ++j) {
      if (dimension != ScoreDimension::kPreference && (row[j] < 1.0 || row[j] > 5.0)) {
        throw Error(Errc::kOutOfRangeScore, std::to_string(row[j]) + " for " + scores.models[j]);
      }
      columns[j].push_back(row[j]);
    }
  }
  for (std::size_t j = 0; j < k; ++j) {
    const auto& c = columns[j];
    ModelSummary s;
    s.model = scores.models[j];
    s.n = c.size();
    s.mean_rank = fr.mean_ranks[j];
    s.mean = std::accumulate(c.begin(), c.end(), 0.0) / static_cast<double>(c.size());
    double ss = 0.0;
    for (double v : c) ss += (v - s.mean) * (v - s.mean);
    s.std = c.size() > 1 ? std::sqrt(ss / static_cast<double>(c.size() - 1)) : 0.0;
    report.models.push_back(s);
  }
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      PairwiseResult pr{scores.models[i], scores.models[j], {}};
      try {
        pr.test = wilcoxon_signed_rank(columns[i], columns[j]);
      } catch (const Error& e) {
        if (e.code() != Errc::kNoNonzeroDifferences) throw;
        pr.test = TestResult{0.0, std::nullopt, 1.0, 0, kWilcoxonExact, 0.0};
      }
      report.pairwise.push_back(pr);
    }
  }
  return report;
}

nlohmann::json to_json(const TestResult& r) {
  nlohmann::json j = {{"statistic", r.statistic}, {"p_value", r.p_value},
                      {"n", r.n},                 {"method", r.method}};
  j["df"] = r.df ? nlohmann::json(*r.df) : nlohmann::json(nullptr);
  if (r.w_plus) j["w_plus"] = *r.w_plus;
  return j;
}

nlohmann::json to_json(const SignificanceReport& r) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : r.models) {
    models.push_back({{"model", m.model},
                      {"n", m.n},
                      {"mean_rank", m.mean_rank},
                      {"mean", m.mean},
                      {"std", m.std}});
  }
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : r.pairwise) {
    pairs.push_back({{"i", p.model_i}, {"j", p.model_j}, {"test", to_json(p.test)}});
  }
  return {{"dimension", name(r.dimension)},
          {"models", models},
          {"friedman", to_json(r.omnibus)},
          {"pairwise", pairs}};
}

}  // namespace trollguard
