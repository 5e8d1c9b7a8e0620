#include "trollguard/eval_metrics.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "trollguard/error.h"
#include "trollguard/text.h"

namespace trollguard {
namespace {

constexpr double kSumTolerance = 1e-9;

void check_same_size(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(Errc::kInvalidArgument, "distributions differ in length");
  }
}

void check_same_labels(const Distribution& p, const Distribution& q) {
  if (p.labels() != q.labels()) {
    throw Error(Errc::kInvalidArgument, "distributions are over different label sets");
  }
}

std::size_t coarse_index(TrollingStrategy ts, ResponseStrategy rs) {
  return index_of(ts_category(ts)) * 2 + index_of(rs_category(rs));
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << v;
  return out.str();
}

}  // namespace

Distribution::Distribution(std::vector<std::string> labels, std::vector<double> probs)
    : labels_(std::move(labels)), probs_(std::move(probs)) {
  if (labels_.size() != probs_.size()) {
    throw Error(Errc::kInvalidArgument, "labels and probabilities differ in length");
  }
  double sum = 0.0;
  for (double v : probs_) {
    if (!(v >= 0.0)) throw Error(Errc::kInvalidArgument, "negative or NaN probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kSumTolerance) {
    throw Error(Errc::kInvalidArgument, "probabilities sum to " + std::to_string(sum));
  }
}

Distribution Distribution::from_counts(std::vector<std::string> labels,
                                       std::span<const double> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) throw Error(Errc::kEmptyInput, "counts sum to zero");
  std::vector<double> probs(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0.0) throw Error(Errc::kInvalidArgument, "negative count");
    probs[i] = counts[i] / total;
  }
  return Distribution(std::move(labels), std::move(probs));
}

double Distribution::at(std::string_view label) const {
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] == label) return probs_[i];
  }
  throw Error(Errc::kInvalidArgument, "no cell " + std::string(label));
}

std::vector<std::string> joint_labels(Granularity g) {
  std::vector<std::string> labels;
  if (g == Granularity::kFine) {
    for (auto ts : kAllTS) {
      for (auto rs : kAllRS) labels.push_back(std::string(name(ts)) + "/" + std::string(name(rs)));
    }
  } else {
    for (auto ts : {CoarseTS::kOvert, CoarseTS::kCovert}) {
      for (auto rs : {CoarseRS::kNudging, CoarseRS::kConfrontational}) {
        labels.push_back(std::string(name(ts)) + "/" + std::string(name(rs)));
      }
    }
  }
  return labels;
}

Distribution joint_distribution(const std::vector<LabelPair>& pairs, Granularity g) {
  if (pairs.empty()) throw Error(Errc::kEmptyInput, "no (TS, RS) pairs");
  std::vector<double> counts(g == Granularity::kFine ? kNumTS * kNumRS : 4, 0.0);
  for (const auto& [ts, rs] : pairs) {
    const std::size_t cell =
        g == Granularity::kFine ? index_of(ts) * kNumRS + index_of(rs) : coarse_index(ts, rs);
    counts[cell] += 1.0;
  }
  return Distribution::from_counts(joint_labels(g), counts);
}

Distribution collapse_to_coarse(const Distribution& fine) {
  if (fine.labels() != joint_labels(Granularity::kFine)) {
    throw Error(Errc::kInvalidArgument, "not a fine-grained joint distribution");
  }
  std::vector<double> probs(4, 0.0);
  for (auto ts : kAllTS) {
    for (auto rs : kAllRS) {
      probs[coarse_index(ts, rs)] += fine[index_of(ts) * kNumRS + index_of(rs)];
    }
  }
  return Distribution(joint_labels(Granularity::kCoarse), std::move(probs));
}

double kl(std::span<const double> p, std::span<const double> q) {
  check_same_size(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    if (q[i] <= 0.0) {
      throw Error(Errc::kSupportMismatch, "p has mass at cell " + std::to_string(i) + " where q is zero");
    }
    sum += p[i] * std::log2(p[i] / q[i]);
  }
  return sum;
}

double jsd(std::span<const double> p, std::span<const double> q) {
  check_same_size(p, q);
  std::vector<double> m(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = 0.5 * (p[i] + q[i]);
  const double divergence = 0.5 * (kl(p, m) + kl(q, m));
  return std::sqrt(std::clamp(divergence, 0.0, 1.0));
}

double hellinger(std::span<const double> p, std::span<const double> q) {
  check_same_size(p, q);
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = std::sqrt(p[i]) - std::sqrt(q[i]);
    sum += d * d;
  }
  return std::min(1.0, std::sqrt(sum) / std::sqrt(2.0));
}

double kl(const Distribution& p, const Distribution& q) {
  check_same_labels(p, q);
  return kl(std::span<const double>(p.probs()), std::span<const double>(q.probs()));
}

double jsd(const Distribution& p, const Distribution& q) {
  check_same_labels(p, q);
  return jsd(std::span<const double>(p.probs()), std::span<const double>(q.probs()));
}

double hellinger(const Distribution& p, const Distribution& q) {
  check_same_labels(p, q);
  return hellinger(std::span<const double>(p.probs()), std::span<const double>(q.probs()));
}

AlignmentReport alignment_report(const std::vector<LabelPair>& model_pairs,
                                 const std::vector<LabelPair>& human_pairs) {
  if (model_pairs.empty() || human_pairs.empty()) {
    throw Error(Errc::kEmptyInput, "alignment needs model and human labels");
  }
  AlignmentReport report;
  for (auto g : {Granularity::kCoarse, Granularity::kFine}) {
    const Distribution human = joint_distribution(human_pairs, g);
    const Distribution model = joint_distribution(model_pairs, g);
    DistancePair& d = g == Granularity::kCoarse ? report.coarse : report.fine;
    d.jsd = jsd(human, model);
    d.hd = hellinger(human, model);
  }
  return report;
}

WinMatrix rank_to_win_matrix(const std::vector<EvaluationRecord>& records) {
  if (records.empty()) throw Error(Errc::kEmptyInput, "no evaluation records");
  WinMatrix m;
  for (const auto& e : records.front().entries) m.models.push_back(e.model_id);
  const std::set<std::string> expected(m.models.begin(), m.models.end());
  if (expected.size() != m.models.size() || m.models.size() < 2) {
    throw Error(Errc::kInconsistentModelSets, "first record must rank >= 2 distinct models");
  }
  const std::size_t k = m.models.size();
  m.win.assign(k, std::vector<double>(k, 0.0));
  m.ties.assign(k, std::vector<double>(k, 0.0));

  for (const auto& rec : records) {
    std::vector<int> rank(k, 0);
    std::set<std::string> seen;
    for (const auto& e : rec.entries) {
      auto it = std::find(m.models.begin(), m.models.end(), e.model_id);
      if (it == m.models.end() || !seen.insert(e.model_id).second) {
        throw Error(Errc::kInconsistentModelSets, "record " + rec.sample_id + "/" + rec.evaluator_id);
      }
      rank[static_cast<std::size_t>(it - m.models.begin())] = e.rank;
    }
    if (seen.size() != k) {
      throw Error(Errc::kInconsistentModelSets, "record " + rec.sample_id + "/" + rec.evaluator_id);
    }
    for (std::size_t i = 0; i < k; ++i) {
      for (std::size_t j = 0; j < k; ++j) {
        if (i == j) continue;
        if (rank[i] < rank[j]) m.win[i][j] += 1.0;
        if (rank[i] == rank[j]) m.ties[i][j] += 1.0;
      }
    }
  }
  m.records = records.size();
  const double n = static_cast<double>(records.size());
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      m.win[i][j] /= n;
      m.ties[i][j] /= n;
    }
  }
  return m;
}

std::string_view name(LikertDimension d) {
  return d == LikertDimension::kConstructiveness ? "constructiveness" : "supportiveness";
}

LikertDimension parse_likert_dimension(std::string_view text) {
  if (iequals(trim(text), "constructiveness")) return LikertDimension::kConstructiveness;
  if (iequals(trim(text), "supportiveness")) return LikertDimension::kSupportiveness;
  throw Error(Errc::kInvalidArgument, "unknown Likert dimension: " + std::string(text));
}

std::vector<LikertStats> likert_summary(const std::vector<EvaluationRecord>& records,
                                        LikertDimension dimension) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<double>> scores;
  for (const auto& rec : records) {
    for (const auto& e : rec.entries) {
      const int s = dimension == LikertDimension::kConstructiveness ? e.constructiveness
                                                                     : e.supportiveness;
      if (s < 1 || s > 5) {
        throw Error(Errc::kOutOfRangeScore, std::to_string(s) + " for model " + e.model_id +
                                                " in record " + rec.sample_id);
      }
      if (!scores.count(e.model_id)) order.push_back(e.model_id);
      scores[e.model_id].push_back(s);
    }
  }
  std::vector<LikertStats> out;
  for (const auto& model : order) {
    const auto& v = scores[model];
    LikertStats st{model, 0.0, 0.0, v.size()};
    st.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
      double ss = 0.0;
      for (double x : v) ss += (x - st.mean) * (x - st.mean);
      st.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    out.push_back(st);
  }
  return out;
}

PerceivedHistogram perceived_rs_histogram(const std::vector<EvaluationRecord>& records) {
  PerceivedHistogram h;
  std::map<std::string, std::array<std::array<double, kNumRS>, kNumTS>> tallies;
  for (const auto& rec : records) {
    if (!rec.ts_label) continue;
    for (const auto& e : rec.entries) {
      if (!tallies.count(e.model_id)) {
        h.models.push_back(e.model_id);
        tallies[e.model_id] = {};
        h.counts[e.model_id] = {};
      }
      tallies[e.model_id][index_of(*rec.ts_label)][index_of(e.perceived_rs)] += 1.0;
      h.counts[e.model_id][index_of(*rec.ts_label)] += 1;
    }
  }
  if (h.models.empty()) throw Error(Errc::kEmptyInput, "no records with a TS and perceived RS");
  for (const auto& model : h.models) {
    auto& rows = h.rows[model];
    for (auto ts : kAllTS) {
      const auto& tally = tallies[model][index_of(ts)];
      const double total = std::accumulate(tally.begin(), tally.end(), 0.0);
      if (total <= 0.0) continue;
      std::array<double, kNumRS> dist{};
      for (std::size_t r = 0; r < kNumRS; ++r) dist[r] = tally[r] / total;
      rows[index_of(ts)] = dist;
    }
  }
  return h;
}

std::vector<LabelPair> parse_label_pairs(std::string_view jsonl, std::size_t* skipped) {
  std::vector<LabelPair> pairs;
  std::size_t dropped = 0;
  std::size_t line_no = 0;
  auto first_string = [](const nlohmann::json& j, std::initializer_list<const char*> keys)
      -> std::optional<std::string> {
    for (const char* k : keys) {
      if (auto it = j.find(k); it != j.end() && it->is_string()) return it->get<std::string>();
    }
    return std::nullopt;
  };
  for (const auto& line : split_lines(jsonl)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      throw Error(Errc::kMalformedRecord, "label line is not a JSON object").with_line(line_no);
    }
    const auto ts = first_string(j, {"ts", "ts_label"});
    const auto rs = first_string(j, {"rs", "preferred_rs", "perceived_rs", "prs", "declared_rs"});
    if (!ts || !rs) {
      ++dropped;
      continue;
    }
    try {
      pairs.emplace_back(parse_ts(*ts), parse_rs(*rs));
    } catch (const Error& e) {
      throw Error(e.code(), e.detail()).with_line(line_no);
    }
  }
  if (skipped != nullptr) *skipped = dropped;
  return pairs;
}

std::vector<LabelPair> load_label_pairs(const std::string& path, std::size_t* skipped) {
  return parse_label_pairs(read_file(path), skipped);
}

std::string win_matrix_csv(const WinMatrix& m) {
  std::ostringstream out;
  out << "model_i,model_j,win,tie,loss\n";
  for (std::size_t i = 0; i < m.models.size(); ++i) {
    for (std::size_t j = 0; j < m.models.size(); ++j) {
      if (i == j) continue;
      out << m.models[i] << ',' << m.models[j] << ',' << fmt(m.win[i][j]) << ','
          << fmt(m.ties[i][j]) << ',' << fmt(m.win[j][i]) << '\n';
    }
  }
  return out.str();
}

std::string likert_csv(const std::vector<LikertStats>& stats) {
  std::ostringstream out;
  out << "model,mean,std,n\n";
  for (const auto& s : stats) {
    out << s.model << ',' << fmt(s.mean) << ',' << fmt(s.std) << ',' << s.n << '\n';
  }
  return out.str();
}

std::string perceived_histogram_csv(const PerceivedHistogram& h) {
  std::ostringstream out;
  out << "model,ts";
  for (auto rs : kAllRS) out << ',' << name(rs);
  out << ",n\n";
  for (const auto& model : h.models) {
    const auto& rows = h.rows.at(model);
    for (auto ts : kAllTS) {
      const auto& row = rows[index_of(ts)];
      if (!row) continue;
      out << model << ',' << name(ts);
      for (double v : *row) out << ',' << fmt(v);
      out << ',' << h.counts.at(model)[index_of(ts)] << '\n';
    }
  }
  return out.str();
}

}  // namespace trollguard
