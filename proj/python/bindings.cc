#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "trollguard/annotation_store.h"
#include "trollguard/corpus.h"
#include "trollguard/eval_metrics.h"
#include "trollguard/eval_stats.h"
#include "trollguard/llm_gateway.h"
#include "trollguard/pipeline.h"
#include "trollguard/prs_recommender.h"
#include "trollguard/report.h"
#include "trollguard/taxonomy.h"
#include "trollguard/text.h"

namespace py = pybind11;
using nlohmann::json;

namespace trollguard {
namespace {

py::object to_py(const json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

json from_py(const py::handle& obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

ContingencyTable table_or_builtin(const std::optional<std::string>& csv) {
  return csv ? ContingencyTable::from_csv(*csv) : ContingencyTable::builtin();
}

Granularity parse_granularity(const std::string& g) {
  if (g == "fine") return Granularity::kFine;
  if (g == "coarse") return Granularity::kCoarse;
  throw Error(Errc::kInvalidArgument, "granularity must be 'fine' or 'coarse'");
}

std::vector<LabelPair> to_pairs(const std::vector<std::pair<std::string, std::string>>& in) {
  std::vector<LabelPair> out;
  for (const auto& [ts, rs] : in) out.emplace_back(parse_ts(ts), parse_rs(rs));
  return out;
}

py::dict test_dict(const TestResult& t) { return to_py(to_json(t)).cast<py::dict>(); }

std::string prompt_for(const std::string& template_name, const py::object& sample_obj,
                       const std::optional<std::string>& prs, const std::optional<std::string>& dir) {
  const PromptSet prompts = PromptSet::load(dir.value_or(""));
  const Sample sample = sample_from_json(from_py(sample_obj));
  if (template_name == "troll_classifier") return classifier_prompt(sample, prompts);
  if (template_name == "ts_elicitation") return ts_elicitation_prompt(sample, prompts);
  std::optional<ResponseStrategy> rs;
  if (prs) rs = parse_rs(*prs);
  return generation_prompt(sample, parse_mode(template_name), std::nullopt, rs, prompts);
}

py::list moderate_samples(const py::list& samples, const std::string& mode,
                          const std::string& replay_jsonl, bool ts_elicitation,
                          const std::optional<std::string>& table_csv) {
  std::vector<Sample> parsed;
  for (const auto& s : samples) parsed.push_back(sample_from_json(from_py(s)));
  MockTransport transport;
  transport.load_replay_jsonl(replay_jsonl);
  LlmClient client(transport, 1);
  const PromptSet prompts = PromptSet::load();
  PipelineOptions options;
  options.ts_elicitation = ts_elicitation;
  options.parallelism = 1;
  Pipeline pipeline(client, prompts, EmpiricalBackend{table_or_builtin(table_csv), 1.0}, options);
  BatchResult result;
  {
    py::gil_scoped_release release;
    result = pipeline.moderate_batch(parsed, parse_mode(mode));
  }
  py::list out;
  for (const auto& o : result.outcomes) out.append(to_py(to_json(o)));
  return out;
}

}  // namespace
}  // namespace trollguard

PYBIND11_MODULE(_core, m) {
  using namespace trollguard;
  m.doc() = "Troll counter-response pipeline and evaluation toolkit";

  py::register_exception<Error>(m, "TrollguardError", PyExc_RuntimeError);

  m.def("trolling_strategies", [] {
    std::vector<std::string> out;
    for (auto ts : kAllTS) out.emplace_back(name(ts));
    return out;
  });
  m.def("response_strategies", [] {
    std::vector<std::string> out;
    for (auto rs : kAllRS) out.emplace_back(name(rs));
    return out;
  });

  m.def("preference_table_csv", [] { return ContingencyTable::builtin().to_csv(); });
  m.def(
      "map_predict",
      [](const std::string& ts, std::optional<std::string> table_csv) {
        return std::string(name(map_predict(parse_ts(ts), table_or_builtin(table_csv))));
      },
      py::arg("ts"), py::arg("table_csv") = py::none());
  m.def(
      "coarse_predict",
      [](const std::string& ts, std::optional<std::string> table_csv) {
        return std::string(name(coarse_predict(parse_ts(ts), table_or_builtin(table_csv))));
      },
      py::arg("ts"), py::arg("table_csv") = py::none());
  m.def(
      "preference_distribution",
      [](const std::string& ts, double alpha, std::optional<std::string> table_csv) {
        const auto d = preference_distribution(parse_ts(ts), table_or_builtin(table_csv), alpha);
        py::dict out;
        for (auto rs : kAllRS) out[py::str(std::string(name(rs)))] = d[index_of(rs)];
        return out;
      },
      py::arg("ts"), py::arg("alpha") = 1.0, py::arg("table_csv") = py::none());
  m.def(
      "self_consistency_accuracy",
      [](const std::string& granularity, std::optional<std::string> table_csv) {
        return self_consistency_accuracy(table_or_builtin(table_csv), parse_granularity(granularity));
      },
      py::arg("granularity") = "fine", py::arg("table_csv") = py::none());

  m.def("ingest_filter", [](const std::string& text) {
    const auto v = ingest_filter(text);
    return py::make_tuple(v.keep, std::string(name(v.reason)));
  });

  m.def("kl", [](std::vector<double> p, std::vector<double> q) { return kl(p, q); });
  m.def("jsd", [](std::vector<double> p, std::vector<double> q) { return jsd(p, q); });
  m.def("hellinger", [](std::vector<double> p, std::vector<double> q) { return hellinger(p, q); });
  m.def(
      "joint_distribution",
      [](const std::vector<std::pair<std::string, std::string>>& pairs, const std::string& g) {
        const auto d = joint_distribution(to_pairs(pairs), parse_granularity(g));
        py::dict out;
        for (std::size_t i = 0; i < d.size(); ++i) out[py::str(d.labels()[i])] = d[i];
        return out;
      },
      py::arg("pairs"), py::arg("granularity") = "fine");
  m.def("alignment_report", [](const std::vector<std::pair<std::string, std::string>>& model,
                               const std::vector<std::pair<std::string, std::string>>& human) {
    const auto r = alignment_report(to_pairs(model), to_pairs(human));
    py::dict out;
    out["coarse"] = py::dict(py::arg("jsd") = r.coarse.jsd, py::arg("hd") = r.coarse.hd);
    out["fine"] = py::dict(py::arg("jsd") = r.fine.jsd, py::arg("hd") = r.fine.hd);
    return out;
  });

  m.def("friedman", [](const std::vector<std::vector<double>>& scores) {
    const auto r = friedman(scores);
    py::dict out = test_dict(r.test);
    out["mean_ranks"] = r.mean_ranks;
    return out;
  });
  m.def("wilcoxon_signed_rank", [](std::vector<double> x, std::vector<double> y) {
    return test_dict(wilcoxon_signed_rank(x, y));
  });
  m.def("chi2_sf", &chi2_sf, py::arg("x"), py::arg("df"));
  m.def("normal_sf", &normal_sf, py::arg("z"));
  m.def(
      "significance_report",
      [](const std::vector<std::string>& models, const std::vector<std::vector<double>>& rows,
         const std::string& dimension) {
        ScoreMatrix scores{models, {}, rows};
        const auto r = significance_report(scores, parse_score_dimension(dimension));
        return py::make_tuple(render_significance(r), to_py(to_json(r)));
      },
      py::arg("models"), py::arg("rows"), py::arg("dimension") = "preference");
  m.def("format_p", &format_p);

  m.def("render_prompt", &prompt_for, py::arg("template"), py::arg("sample"),
        py::arg("prs") = py::none(), py::arg("prompts_dir") = py::none(),
        "template: troll_classifier, ts_elicitation, default, sp or prs");
  m.def("prompt_hash", [](const std::string& prompt) { return sha256_hex(prompt); });
  m.def("moderate", &moderate_samples, py::arg("samples"), py::arg("mode") = "prs",
        py::arg("replay_jsonl") = "", py::arg("ts_elicitation") = false,
        py::arg("table_csv") = py::none(),
        "Runs the pipeline against canned replies (JSONL of prompt_hash/reply).");

  py::class_<AnnotationStore>(m, "AnnotationStore")
      .def(py::init([](const std::string& data_dir, std::size_t quota) {
             AnnotationStore::Options o;
             o.data_dir = data_dir;
             o.quota = quota;
             return std::make_unique<AnnotationStore>(o);
           }),
           py::arg("data_dir") = "", py::arg("quota") = kDefaultQuota)
      .def(
          "create_tasks",
          [](AnnotationStore& s, const py::list& samples, const std::string& kind,
             std::size_t replicas) {
            std::vector<Sample> parsed;
            for (const auto& x : samples) parsed.push_back(sample_from_json(from_py(x)));
            std::vector<std::string> ids;
            for (const auto& t : s.create_tasks(parsed, parse_task_kind(kind), replicas)) {
              ids.push_back(t.id);
            }
            return ids;
          },
          py::arg("samples"), py::arg("kind") = "preference", py::arg("replicas") = 1)
      .def("next_task",
           [](AnnotationStore& s, const std::string& who) { return to_py(to_json(s.next_task(who))); })
      .def("submit",
           [](AnnotationStore& s, const py::dict& body) {
             const json j = from_py(body);
             const auto task = s.task(j.at("task_id").get<std::string>());
             if (!task) throw Error(Errc::kNotAssigned, "unknown task");
             return std::string(name(s.submit(submission_from_json(j, task->kind))));
           })
      .def("export", [](const AnnotationStore& s,
                        const std::string& kind) { return s.export_jsonl(parse_task_kind(kind)); })
      .def("progress", [](const AnnotationStore& s) { return to_py(to_json(s.progress())); })
      .def("contingency_csv", [](const AnnotationStore& s) { return s.contingency().to_csv(); });
}
