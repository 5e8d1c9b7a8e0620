#include "trollguard/prs_recommender.h"

#include <algorithm>
#include <charconv>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "trollguard/corpus.h"
#include "trollguard/error.h"
#include "trollguard/http.h"
#include "trollguard/resources.h"
#include "trollguard/text.h"

namespace trollguard {
namespace {

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.emplace_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

void require_nonempty_row(TrollingStrategy ts, const ContingencyTable& table) {
  if (table.row_total(ts) <= 0) {
    throw Error(Errc::kEmptyRow, std::string(name(ts)));
  }
}

}  // namespace

ContingencyTable::ContingencyTable(std::array<Row, kNumTS> counts, std::string provenance)
    : counts_(counts), provenance_(std::move(provenance)) {
  for (const auto& row : counts_) {
    for (auto c : row) {
      if (c < 0) throw Error(Errc::kInvalidArgument, "negative count in contingency table");
    }
  }
}

void ContingencyTable::add(TrollingStrategy ts, ResponseStrategy rs, std::int64_t n) {
  auto& cell = counts_[index_of(ts)][index_of(rs)];
  if (cell + n < 0) throw Error(Errc::kInvalidArgument, "count would become negative");
  cell += n;
}

std::int64_t ContingencyTable::row_total(TrollingStrategy ts) const {
  const auto& r = row(ts);
  return std::accumulate(r.begin(), r.end(), std::int64_t{0});
}

std::int64_t ContingencyTable::grand_total() const {
  std::int64_t total = 0;
  for (auto ts : kAllTS) total += row_total(ts);
  return total;
}

ContingencyTable ContingencyTable::from_csv(std::string_view csv, std::string provenance) {
  const auto lines = split_lines(csv);
  std::size_t i = 0;
  auto next_nonblank = [&]() -> const std::string* {
    while (i < lines.size() && trim(lines[i]).empty()) ++i;
    return i < lines.size() ? &lines[i++] : nullptr;
  };

  const std::string* header = next_nonblank();
  if (header == nullptr) throw Error(Errc::kMalformedRecord, "empty preference table");
  const auto head = split_csv_line(*header);
  if (head.size() != kNumRS + 1) {
    throw Error(Errc::kMalformedRecord, "header must have 8 columns").with_line(i);
  }
  std::array<std::size_t, kNumRS> column_of{};  // csv column -> rs index
  for (std::size_t c = 0; c < kNumRS; ++c) {
    try {
      column_of[c] = index_of(parse_rs(head[c + 1]));
    } catch (const Error& e) {
      throw Error(Errc::kMalformedRecord, e.what()).with_line(i);
    }
  }

  std::array<Row, kNumTS> counts{};
  std::array<bool, kNumTS> seen{};
  while (const std::string* line = next_nonblank()) {
    const auto cells = split_csv_line(*line);
    if (cells.size() != kNumRS + 1) {
      throw Error(Errc::kMalformedRecord, "row must have 8 columns").with_line(i);
    }
    TrollingStrategy ts;
    try {
      ts = parse_ts(cells[0]);
    } catch (const Error& e) {
      throw Error(Errc::kMalformedRecord, e.what()).with_line(i);
    }
    if (seen[index_of(ts)]) {
      throw Error(Errc::kMalformedRecord, "duplicate row " + cells[0]).with_line(i);
    }
    seen[index_of(ts)] = true;
    for (std::size_t c = 0; c < kNumRS; ++c) {
      std::int64_t value = 0;
      const auto& cell = cells[c + 1];
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || value < 0) {
        throw Error(Errc::kMalformedRecord, "bad count '" + cell + "'").with_line(i);
      }
      counts[index_of(ts)][column_of[c]] = value;
    }
  }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
    throw Error(Errc::kMalformedRecord, "preference table must list all six trolling strategies");
  }
  return ContingencyTable(counts, std::move(provenance));
}

ContingencyTable ContingencyTable::load_csv(const std::string& path) {
  return from_csv(read_file(path), path);
}

std::string ContingencyTable::to_csv() const {
  std::ostringstream out;
  out << "ts";
  for (auto rs : kAllRS) out << ',' << name(rs);
  out << '\n';
  for (auto ts : kAllTS) {
    out << name(ts);
    for (auto c : row(ts)) out << ',' << c;
    out << '\n';
  }
  return out.str();
}

ContingencyTable ContingencyTable::builtin() {
  const auto csv = embedded_resource("data/preference_table.csv");
  if (!csv) throw Error(Errc::kIoFailure, "built-in preference table missing");
  return from_csv(*csv, "builtin:data/preference_table.csv");
}

ResponseStrategy map_predict(TrollingStrategy ts, const ContingencyTable& table) {
  require_nonempty_row(ts, table);
  const auto& r = table.row(ts);
  // max_element returns the first maximum, i.e. the lowest ordinal.
  const auto best = std::max_element(r.begin(), r.end());
  return kAllRS[static_cast<std::size_t>(best - r.begin())];
}

CoarseRS coarse_predict(TrollingStrategy ts, const ContingencyTable& table) {
  require_nonempty_row(ts, table);
  std::int64_t nudging = 0;
  std::int64_t confrontational = 0;
  for (auto rs : kAllRS) {
    (rs_category(rs) == CoarseRS::kNudging ? nudging : confrontational) += table.at(ts, rs);
  }
  return nudging >= confrontational ? CoarseRS::kNudging : CoarseRS::kConfrontational;
}

PreferenceDistribution preference_distribution(TrollingStrategy ts,
                                               const ContingencyTable& table,
                                               double alpha) {
  if (!(alpha >= 0.0)) throw Error(Errc::kInvalidArgument, "alpha must be >= 0");
  const double denom = static_cast<double>(table.row_total(ts)) + kNumRS * alpha;
  if (!(denom > 0.0)) throw Error(Errc::kDegenerateRow, std::string(name(ts)));
  PreferenceDistribution probs{};
  for (auto rs : kAllRS) {
    probs[index_of(rs)] = (static_cast<double>(table.at(ts, rs)) + alpha) / denom;
  }
  return probs;
}

double self_consistency_accuracy(const ContingencyTable& table, Granularity g) {
  const std::int64_t total = table.grand_total();
  if (total <= 0) throw Error(Errc::kEmptyTable, "grand total is zero");
  std::int64_t correct = 0;
  for (auto ts : kAllTS) {
    const auto& r = table.row(ts);
    if (g == Granularity::kFine) {
      correct += *std::max_element(r.begin(), r.end());
    } else {
      std::int64_t nudging = 0;
      std::int64_t confrontational = 0;
      for (auto rs : kAllRS) {
        (rs_category(rs) == CoarseRS::kNudging ? nudging : confrontational) += r[index_of(rs)];
      }
      correct += std::max(nudging, confrontational);
    }
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

std::string external_request_body(const Sample& sample, TrollingStrategy ts) {
  nlohmann::json body = {
      {"subreddit", sample.context.subreddit},
      {"title", sample.context.title},
      {"post", sample.context.body},
      {"comment", sample.troll_comment.text},
      {"ts", std::string(name(ts))},
  };
  return body.dump();
}

ResponseStrategy parse_external_reply(std::string_view body) {
  const auto parsed = nlohmann::json::parse(body, nullptr, /*allow_exceptions=*/false);
  if (parsed.is_object()) {
    for (const char* key : {"prs", "rs", "response_strategy"}) {
      if (auto it = parsed.find(key); it != parsed.end() && it->is_string()) {
        return parse_rs(it->get<std::string>());
      }
    }
    throw Error(Errc::kParseFailure, "predictor reply has no strategy field: " + std::string(body));
  }
  if (parsed.is_string()) return parse_rs(parsed.get<std::string>());
  return parse_rs(body);
}

ResponseStrategy predict(const Sample& sample, TrollingStrategy ts,
                         const PredictorBackend& backend) {
  if (const auto* empirical = std::get_if<EmpiricalBackend>(&backend)) {
    return map_predict(ts, empirical->table);
  }
  const auto& external = std::get<ExternalBackend>(backend);
  if (external.endpoint.empty()) {
    throw Error(Errc::kPreconditionViolation, "external predictor endpoint not configured");
  }
  const std::string request = external_request_body(sample, ts);
  std::string reply;
  if (external.post) {
    reply = external.post(external.endpoint, request);
  } else {
    const auto res = http_post(external.endpoint, request, {}, external.timeout_seconds);
    if (res.status < 200 || res.status >= 300) {
      throw Error(Errc::kTransportFailure,
                  "predictor returned HTTP " + std::to_string(res.status));
    }
    reply = res.body;
  }
  return parse_external_reply(reply);
}

}  // namespace trollguard
