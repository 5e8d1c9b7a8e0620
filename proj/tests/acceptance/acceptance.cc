// One PASS/FAIL line per acceptance criterion. Exit status is nonzero only
// when a criterion fails.
#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "../unit/test_util.h"
#include "trollguard/annotation_store.h"
#include "trollguard/eval_metrics.h"
#include "trollguard/eval_stats.h"
#include "trollguard/pipeline.h"
#include "trollguard/report.h"
#include "trollguard/service.h"

using namespace trollguard;
using nlohmann::json;
namespace tt = trollguard::testing;

namespace {

// Tolerances.
constexpr double kExactTol = 1e-12;
constexpr double kClosedFormTol = 1e-6;
constexpr double kJsOracleTol = 1e-9;
constexpr double kChiSquareTol = 1e-9;
constexpr double kChi2Df2Tol = 1e-12;
constexpr double kNormalEnvelope = 0.05;
constexpr int kEnvelopeDraws = 200;

// Jensen-Shannon distance of (.5,.5) vs (1,0): sqrt((0.207519 + 0.415037) / 2).
constexpr double kJsdHalfVsPoint = 0.5579230452841438;
constexpr double kHellingerHalfVsPoint = 0.541196100146197;

struct Verdict {
  enum Kind { kPass, kFail, kUnattainable } kind = kPass;
  std::string detail;
};

class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    ok_ = ok_ && ok;
  }
  void near(double got, double want, double tol, const std::string& what) {
    if (std::fabs(got - want) > tol) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s: got %.15g want %.15g", what.c_str(), got, want);
      expect(false, buf);
    }
  }
  Verdict verdict(std::string detail = {}) const {
    if (ok_) return {Verdict::kPass, std::move(detail)};
    std::string msg;
    for (const auto& f : failures_) msg += (msg.empty() ? "" : "; ") + f;
    return {Verdict::kFail, msg};
  }

 private:
  bool ok_ = true;
  std::vector<std::string> failures_;
};

Verdict preference_table() {
  Check c;
  const auto t = ContingencyTable::load_csv(std::string(TROLLGUARD_SOURCE_DIR) + "/data/preference_table.csv");
  c.expect(t == tt::published_table(), "shipped CSV differs from the published counts");
  const ResponseStrategy fine[] = {ResponseStrategy::kChallenge, ResponseStrategy::kChallenge,
                                   ResponseStrategy::kExpose,    ResponseStrategy::kEngage,
                                   ResponseStrategy::kEngage,    ResponseStrategy::kIgnore};
  const CoarseRS coarse[] = {CoarseRS::kConfrontational, CoarseRS::kConfrontational,
                             CoarseRS::kNudging,         CoarseRS::kNudging,
                             CoarseRS::kNudging,         CoarseRS::kNudging};
  for (std::size_t i = 0; i < kNumTS; ++i) {
    c.expect(map_predict(kAllTS[i], t) == fine[i], "map_predict " + std::string(name(kAllTS[i])));
    c.expect(coarse_predict(kAllTS[i], t) == coarse[i], "coarse_predict " + std::string(name(kAllTS[i])));
  }
  const auto& row = t.row(TrollingStrategy::kEndangering);
  c.expect(row[0] + row[1] + row[2] == 26 && row[3] + row[4] + row[5] + row[6] == 24,
           "Endangering coarse split is not 26 vs 24");
  return c.verdict("6/6 fine, 6/6 coarse");
}

Verdict self_consistency() {
  Check c;
  const auto t = ContingencyTable::builtin();
  // Oracle: re-sum row maxima over fine cells and over the 2-way collapse.
  double fine_hits = 0, coarse_hits = 0, total = 0;
  for (const auto& row : t.counts()) {
    std::int64_t best = 0, nudging = 0, confront = 0;
    for (std::size_t j = 0; j < row.size(); ++j) {
      best = std::max(best, row[j]);
      (j < 3 ? nudging : confront) += row[j];
      total += static_cast<double>(row[j]);
    }
    fine_hits += static_cast<double>(best);
    coarse_hits += static_cast<double>(std::max(nudging, confront));
  }
  const double fine = self_consistency_accuracy(t, Granularity::kFine);
  const double coarse = self_consistency_accuracy(t, Granularity::kCoarse);
  c.near(fine, fine_hits / total, kExactTol, "fine vs oracle");
  c.near(coarse, coarse_hits / total, kExactTol, "coarse vs oracle");
  c.near(fine, 379.0 / 875.0, kExactTol, "fine vs 379/875");
  c.near(coarse, 731.0 / 875.0, kExactTol, "coarse vs 731/875");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "fine %.6f, coarse %.6f", fine, coarse);
  return c.verdict(buf);
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t n) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution zero(0.25);
  std::vector<double> p(n);
  double sum = 0;
  for (auto& v : p) sum += v = zero(rng) ? 0.0 : e(rng);
  if (sum == 0) {
    p[0] = sum = 1.0;
  }
  for (auto& v : p) v /= sum;
  return p;
}

double entropy2(const std::vector<double>& v) {
  double h = 0;
  for (double x : v) {
    if (x > 0) h -= x * std::log2(x);
  }
  return h;
}

Verdict distance_metrics() {
  Check c;
  const std::vector<double> a = {1, 0}, b = {0, 1}, half = {0.5, 0.5};
  c.near(jsd(half, half), 0, kClosedFormTol, "jsd(p,p)");
  c.near(hellinger(half, half), 0, kClosedFormTol, "hd(p,p)");
  c.near(jsd(a, b), 1, kClosedFormTol, "jsd disjoint");
  c.near(hellinger(a, b), 1, kClosedFormTol, "hd disjoint");
  c.near(jsd(half, a), kJsdHalfVsPoint, kClosedFormTol, "jsd((.5,.5),(1,0))");
  c.near(hellinger(half, a), kHellingerHalfVsPoint, kClosedFormTol, "hd((.5,.5),(1,0))");

  std::mt19937_64 rng(20240101);
  for (int i = 0; i < 1000; ++i) {
    const std::size_t n = 2 + rng() % 41;
    const auto p = random_simplex(rng, n), q = random_simplex(rng, n), r = random_simplex(rng, n);
    const double jpq = jsd(p, q), hpq = hellinger(p, q);
    c.near(jpq, jsd(q, p), kExactTol, "jsd symmetry");
    c.near(hpq, hellinger(q, p), kExactTol, "hd symmetry");
    c.expect(jpq >= 0 && jpq <= 1 + kExactTol && hpq >= 0 && hpq <= 1 + kExactTol, "range");
    c.expect(jsd(p, r) <= jpq + jsd(q, r) + 1e-12, "jsd triangle inequality");
    c.expect(hellinger(p, r) <= hpq + hellinger(q, r) + 1e-12, "hd triangle inequality");
    double bc = 0;
    std::vector<double> m(n);
    for (std::size_t k = 0; k < n; ++k) {
      bc += std::sqrt(p[k] * q[k]);
      m[k] = 0.5 * (p[k] + q[k]);
    }
    c.near(hpq * hpq, 1 - bc, kJsOracleTol, "Bhattacharyya identity");
    c.near(jpq * jpq, entropy2(m) - 0.5 * (entropy2(p) + entropy2(q)), kJsOracleTol, "jsd^2 vs oracle");
  }
  return c.verdict("closed forms + 1000 random triples");
}

Verdict coarse_fine() {
  Check c;
  std::mt19937_64 rng(77);
  for (int i = 0; i < 1000; ++i) {
    std::vector<LabelPair> pairs(1 + rng() % 300);
    for (auto& p : pairs) p = {kAllTS[rng() % kNumTS], kAllRS[rng() % kNumRS]};
    const auto direct = joint_distribution(pairs, Granularity::kCoarse);
    const auto collapsed = collapse_to_coarse(joint_distribution(pairs, Granularity::kFine));
    c.expect(direct.labels() == collapsed.labels(), "coarse label order");
    for (std::size_t k = 0; k < direct.size(); ++k) c.near(direct[k], collapsed[k], kExactTol, "quadrant");
  }
  return c.verdict("1000 random pair lists");
}

// Largest |exact - normal| p over tie-free draws at one n.
double envelope_gap(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> shift(-1.5, 1.5);
  double worst = 0;
  for (int draw = 0; draw < kEnvelopeDraws; ++draw) {
    const double mu = shift(rng);
    std::vector<double> x(n), y(n, 0.0);
    std::set<double> seen;
    for (auto& v : x) {
      do {
        v = mu + noise(rng);
      } while (v == 0.0 || !seen.insert(std::fabs(v)).second);
    }
    const auto r = wilcoxon_signed_rank(x, y);
    const double normal_p = std::min(1.0, 2.0 * normal_sf(std::fabs(r.statistic)));
    worst = std::max(worst, std::fabs(r.p_value - normal_p));
  }
  return worst;
}

Verdict statistics() {
  Check c;
  const auto fr = friedman(std::vector<std::vector<double>>(10, {1, 2, 3}));
  c.near(fr.test.statistic, 20.0, kChiSquareTol, "friedman chi2");
  c.near(fr.test.p_value, std::exp(-10.0), kExactTol, "friedman p");
  c.expect(fr.test.df == 2, "friedman df");
  const std::vector<double> d = {1, 2, 3}, zero = {0, 0, 0};
  c.expect(wilcoxon_signed_rank(d, zero).p_value == 0.25, "wilcoxon exact p for (1,2,3)");
  for (double x = 0; x <= 50.0; x += 0.05) c.near(chi2_sf(x, 2), std::exp(-x / 2), kChi2Df2Tol, "chi2_sf df=2");
  std::mt19937_64 rng(4242);
  const double gap10 = envelope_gap(10, rng);
  c.expect(gap10 <= kNormalEnvelope, "n=10 envelope");
  char buf[96];
  std::snprintf(buf, sizeof(buf), "n=10 normal-vs-exact max gap %.4f over %d draws", gap10, kEnvelopeDraws);
  return c.verdict(buf);
}

// Below n=10 the uncorrected normal approximation cannot stay within 0.05 of
// the exact p; the gap is a property of the two distributions, not of the code.
Verdict small_n_envelope() {
  std::mt19937_64 rng(4243);
  std::string detail = "max gap by n:";
  bool within = true;
  for (std::size_t n = 1; n <= 9; ++n) {
    const double gap = envelope_gap(n, rng);
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %zu:%.3f", n, gap);
    detail += buf;
    within = within && gap <= kNormalEnvelope;
  }
  return {within ? Verdict::kPass : Verdict::kUnattainable, detail};
}

ModelSummary summary(std::string model, double mean_rank, double mean = 0, double std = 0) {
  return {std::move(model), 250, mean_rank, mean, std};
}

PairwiseResult pair(std::string i, std::string j, double z, double p) {
  return {std::move(i), std::move(j), TestResult{z, std::nullopt, p, 250, kWilcoxonNormal, {}}};
}

Verdict report_rendering() {
  Check c;
  const std::vector<AlignmentRow> rows = {{"Default", {{0.253, 0.257}, {0.378, 0.404}}},
                                          {"SP", {{0.288, 0.292}, {0.409, 0.433}}},
                                          {"Ours", {{0.156, 0.157}, {0.338, 0.365}}}};
  c.expect(render_alignment_table(rows) == tt::golden("reports/alignment.txt"), "alignment table");

  auto significance = [](ScoreDimension dim, std::vector<ModelSummary> models, double chi2,
                         std::vector<PairwiseResult> pairs) {
    SignificanceReport r;
    r.dimension = dim;
    r.models = std::move(models);
    r.omnibus = TestResult{chi2, 2, chi2_sf(chi2, 2), 250, kFriedman, {}};
    r.pairwise = std::move(pairs);
    return render_significance(r);
  };
  c.expect(significance(ScoreDimension::kPreference,
                        {summary("Default", 1.82), summary("Strategy-Provided", 2.44), summary("Ours", 1.74)},
                        75.51,
                        {pair("Default", "Strategy-Provided", -6.79, 1e-11), pair("Default", "Ours", 1.01, 0.314),
                         pair("Strategy-Provided", "Ours", 7.49, 1e-13)}) == tt::golden("reports/preference.txt"),
           "preference table");
  c.expect(significance(ScoreDimension::kConstructiveness,
                        {summary("Default", 0, 4.03, 1.04), summary("Strategy-Provided", 0, 3.03, 1.31),
                         summary("Ours", 0, 4.25, 1.02)},
                        142.30,
                        {pair("Default", "Strategy-Provided", 8.33, 1e-16), pair("Default", "Ours", -2.46, 0.014),
                         pair("Strategy-Provided", "Ours", -10.15, 1e-23)}) ==
               tt::golden("reports/constructiveness.txt"),
           "constructiveness table");
  c.expect(significance(ScoreDimension::kSupportiveness,
                        {summary("Default", 0, 3.94, 1.13), summary("Strategy-Provided", 0, 3.05, 1.36),
                         summary("Ours", 0, 4.07, 1.05)},
                        106.25,
                        {pair("Default", "Strategy-Provided", 8.03, 1e-15), pair("Default", "Ours", -2.05, 0.041),
                         pair("Strategy-Provided", "Ours", -9.35, 1e-20)}) ==
               tt::golden("reports/supportiveness.txt"),
           "supportiveness table");
  return c.verdict("4 tables");
}

Verdict prompt_fidelity() {
  Check c;
  const PromptSet prompts = PromptSet::load(std::string(TROLLGUARD_SOURCE_DIR) + "/prompts");
  const Sample s = tt::prego();
  c.expect(classifier_prompt(s, prompts) == tt::golden("prompts/troll_classifier.txt"), "classifier");
  c.expect(generation_prompt(s, GenerationMode::kDefault, std::nullopt, std::nullopt, prompts) ==
               tt::golden("prompts/default.txt"),
           "default");
  c.expect(generation_prompt(s, GenerationMode::kStrategyProvided, std::nullopt, std::nullopt, prompts) ==
               tt::golden("prompts/sp.txt"),
           "strategy-provided");
  const std::string prs = generation_prompt(s, GenerationMode::kPrs, std::nullopt, ResponseStrategy::kExpose, prompts);
  c.expect(prs == tt::golden("prompts/prs.txt"), "prs");
  c.expect(prompts.cr_prs.text().find("Craft a counter-response employing {response strategy} response strategy.") !=
               std::string::npos,
           "prs template instruction line");
  return c.verdict("4/4 byte-identical");
}

std::string run_batch() {
  MockTransport mock(tt::scripted_llm());
  LlmClient client(mock, 4, {}, tt::no_sleep());
  const PromptSet prompts = PromptSet::load();
  PipelineOptions options;
  options.ts_elicitation = true;
  options.parallelism = 4;
  Pipeline pipeline(client, prompts, EmpiricalBackend{ContingencyTable::builtin(), 1.0}, options, {},
                    [] { return std::chrono::steady_clock::time_point{}; });
  const auto result = batch_moderate(tt::fixture_path("dataset20.jsonl"), GenerationMode::kPrs, pipeline);
  return serialize_outcomes(result.outcomes);
}

Verdict pipeline_determinism() {
  Check c;
  const std::string first = run_batch();
  const std::string second = run_batch();
  c.expect(first == second, "outcomes differ between runs");
  std::size_t responded = 0, lines = 0;
  const auto table = ContingencyTable::builtin();
  std::istringstream in(first);
  for (std::string line; std::getline(in, line);) {
    if (line.empty()) continue;
    ++lines;
    const json o = json::parse(line);
    c.expect(o["error"].is_null(), "unexpected error for " + o["sample_id"].get<std::string>());
    if (!o["is_troll"].get<bool>()) continue;
    const auto ts = parse_ts(o["ts"].get<std::string>());
    c.expect(o["prs"] == std::string(name(map_predict(ts, table))), "prs != map_predict(ts)");
    responded += o["counter_response"].is_string();
  }
  c.expect(lines == 20, "expected 20 outcomes");
  return c.verdict(std::to_string(lines) + " outcomes, " + std::to_string(responded) + " responses, identical");
}

Verdict ingestion_boundaries() {
  Check c;
  c.expect(!ingest_filter(std::string(11, 'a')).keep, "length 11 kept");
  c.expect(ingest_filter(std::string(12, 'a')).keep, "length 12 dropped");
  c.expect(ingest_filter(std::string(512, 'a')).keep, "length 512 dropped");
  c.expect(!ingest_filter(std::string(513, 'a')).keep, "length 513 kept");
  c.expect(!ingest_filter("read this https://example.com/x").keep, "URL kept");
  c.expect(!ingest_filter("[deleted]").keep, "[deleted] kept");
  return c.verdict("6/6");
}

Sample pref_sample(const std::string& id) {
  Sample s = tt::prego();
  s.id = id;
  for (auto rs : kAllRS) s.candidate_crs.push_back({rs, std::nullopt, "reply " + std::string(name(rs))});
  return s;
}

Verdict annotation_service() {
  Check c;
  const auto dir = std::filesystem::temp_directory_path() / ("tg_accept_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  AnnotationStore::Options opts;
  opts.data_dir = dir.string();
  AnnotationStore store(opts);

  httplib::Server server;
  mount_annotation(server, store);
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread runner([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  json samples = json::array();
  for (int i = 0; i < 100; ++i) samples.push_back(to_json(pref_sample("s" + std::to_string(i))));
  {
    httplib::Client cli("127.0.0.1", port);
    auto res = cli.Post("/v1/tasks", json{{"kind", "preference"}, {"samples", samples}}.dump(), "application/json");
    c.expect(res && res->status == 201, "task creation");
  }

  std::mutex mu;
  std::map<std::string, std::string> owner;
  std::size_t double_assigned = 0, http_errors = 0;
  std::vector<std::thread> clients;
  for (int w = 0; w < 10; ++w) {
    clients.emplace_back([&, w] {
      httplib::Client cli("127.0.0.1", port);
      const std::string who = "annotator-" + std::to_string(w);
      std::mt19937 rng(static_cast<unsigned>(w));
      while (true) {
        auto res = cli.Get("/v1/tasks/next?annotator=" + who);
        if (!res || res->status == 404) break;
        if (res->status != 200) {
          std::lock_guard lock(mu);
          ++http_errors;
          break;
        }
        const json task = json::parse(res->body);
        const std::string id = task["id"];
        {
          std::lock_guard lock(mu);
          if (!owner.emplace(id, who).second) ++double_assigned;
        }
        json body = {{"task_id", id}, {"annotator_id", who}};
        if (rng() % 10 == 0) {
          body["skipped"] = true;
          body["skip_reason"] = "unclear";
        } else {
          body["ts_label"] = std::string(name(kAllTS[rng() % kNumTS]));
          body["preferred_rs"] = std::string(name(kAllRS[rng() % kNumRS]));
        }
        auto sub = cli.Post("/v1/submissions", body.dump(), "application/json");
        if (!sub || sub->status != 200) {
          std::lock_guard lock(mu);
          ++http_errors;
        }
      }
    });
  }
  for (auto& t : clients) t.join();
  c.expect(double_assigned == 0, "a task was assigned twice");
  c.expect(owner.size() == 100, "not every task was assigned");
  c.expect(http_errors == 0, "HTTP errors during the simulation");

  httplib::Client cli("127.0.0.1", port);
  auto exported = cli.Get("/v1/export?kind=preference");
  c.expect(exported && exported->status == 200, "export");
  if (exported) {
    c.expect(build_contingency(parse_annotations(exported->body)) == store.contingency(),
             "export -> build_contingency differs from incremental counts");
  }
  server.stop();
  runner.join();

  {
    AnnotationStore replayed(opts);
    c.expect(replayed.contingency() == store.contingency(), "journal replay differs");
  }
  std::filesystem::remove_all(dir);

  // Quota: the 201st request from one annotator is refused.
  AnnotationStore quota_store(AnnotationStore::Options{});
  std::vector<Sample> many;
  for (int i = 0; i < 205; ++i) many.push_back(pref_sample("q" + std::to_string(i)));
  quota_store.create_tasks(many, TaskKind::kPreferenceAnnotation);
  for (int i = 0; i < 200; ++i) {
    const Task t = quota_store.next_task("busy");
    if (i % 2 == 0) {
      quota_store.submit({t.id, "busy", AnnotationRecord{"", "busy", TrollingStrategy::kAggression,
                                                         ResponseStrategy::kChallenge, false, {}}, ""});
    }
  }
  bool refused = false;
  try {
    quota_store.next_task("busy");
  } catch (const Error& e) {
    refused = e.code() == Errc::kQuotaExceeded;
  }
  c.expect(refused, "quota of 200 not enforced");

  // Evaluation payload validation.
  AnnotationStore eval_store(AnnotationStore::Options{});
  Sample es = tt::prego();
  for (const char* m : {"Default", "SP", "Ours"}) es.candidate_crs.push_back({std::nullopt, std::string(m), "r"});
  eval_store.create_tasks({es}, TaskKind::kModelEvaluation);
  const Task et = eval_store.next_task("ev");
  auto eval_with = [&](std::array<int, 3> ranks, int score) {
    EvaluationRecord r{"", "ev", std::nullopt, {}};
    const char* models[] = {"Default", "SP", "Ours"};
    for (int i = 0; i < 3; ++i) r.entries.push_back({models[i], ranks[i], score, 3, ResponseStrategy::kEngage});
    return Submission{et.id, "ev", r, ""};
  };
  auto rejected = [&](const Submission& s) {
    try {
      eval_store.submit(s);
    } catch (const Error& e) {
      return e.code() == Errc::kValidationFailure;
    }
    return false;
  };
  c.expect(rejected(eval_with({1, 1, 2}, 4)), "non-permutation ranks accepted");
  c.expect(rejected(eval_with({1, 2, 3}, 6)), "Likert 6 accepted");
  c.expect(rejected(eval_with({1, 2, 3}, 0)), "Likert 0 accepted");
  c.expect(eval_store.submit(eval_with({2, 3, 1}, 5)) == TaskStatus::kDone, "valid evaluation rejected");

  return c.verdict("10 clients, 100 tasks, 0 double assignments");
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria = {
      {"preference-table fidelity", preference_table},
      {"MAP self-consistency", self_consistency},
      {"distance metrics", distance_metrics},
      {"coarse/fine consistency", coarse_fine},
      {"statistics", statistics},
      {"statistics: normal vs exact for n<10", small_n_envelope},
      {"report rendering", report_rendering},
      {"prompt fidelity", prompt_fidelity},
      {"pipeline determinism", pipeline_determinism},
      {"ingestion boundaries", ingestion_boundaries},
      {"annotation service", annotation_service},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = criterion.run();
    } catch (const std::exception& e) {
      v = {Verdict::kFail, std::string("exception: ") + e.what()};
    }
    const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    const char* tag = v.kind == Verdict::kPass ? "PASS" : v.kind == Verdict::kFail ? "FAIL" : "UNATTAINABLE";
    std::printf("%-12s %s (%s; %.0f ms)\n", tag, criterion.name, v.detail.c_str(), ms);
    failed += v.kind == Verdict::kFail;
  }
  return failed == 0 ? 0 : 1;
}
