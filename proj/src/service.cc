#include "trollguard/service.h"

#include <httplib.h>

namespace trollguard {

using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, const Error& e) {
  res.status = http_status(e.code());
  res.set_content(error_json(e).dump(), kJson);
}

// Runs `body`, mapping library errors and bad JSON onto HTTP responses.
template <typename Body>
void guarded(httplib::Response& res, Body&& body) {
  try {
    body();
  } catch (const Error& e) {
    send_error(res, e);
  } catch (const json::exception& e) {
    send_error(res, Error(Errc::kValidationFailure, e.what()));
  } catch (const std::exception& e) {
    res.status = 500;
    res.set_content(json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump(), kJson);
  }
}

json parse_body(const httplib::Request& req) {
  json j = json::parse(req.body, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::kValidationFailure, "request body is not valid JSON");
  return j;
}

std::string annotator_of(const httplib::Request& req, const json* body = nullptr) {
  if (req.has_param("annotator")) return req.get_param_value("annotator");
  if (body != nullptr && body->contains("annotator_id") && (*body)["annotator_id"].is_string()) {
    return (*body)["annotator_id"].get<std::string>();
  }
  if (req.has_header("X-Annotator-Id")) return req.get_header_value("X-Annotator-Id");
  return {};
}

}  // namespace

int http_status(Errc code) {
  switch (code) {
    case Errc::kValidationFailure:
    case Errc::kMalformedRecord:
    case Errc::kUnknownLabel:
    case Errc::kInvalidArgument:
    case Errc::kCandidateCountMismatch:
    case Errc::kPreconditionViolation:
      return 400;
    case Errc::kQuotaExceeded:
      return 403;
    case Errc::kNoTasksAvailable:
      return 404;
    case Errc::kNotAssigned:
    case Errc::kDuplicateSubmission:
      return 409;
    case Errc::kTransportFailure:
    case Errc::kParseFailure:
      return 502;
    default:
      return 500;
  }
}

json error_json(const Error& e) {
  json err = {{"code", errc_name(e.code())}, {"message", e.detail()}};
  if (!e.stage().empty()) err["stage"] = e.stage();
  if (e.line()) err["line"] = *e.line();
  return {{"error", err}};
}

void mount_moderation(httplib::Server& server, const Pipeline& pipeline,
                      GenerationMode default_mode) {
  server.Post("/v1/moderate", [&pipeline, default_mode](const httplib::Request& req,
                                                          httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      GenerationMode mode = default_mode;
      if (req.has_param("mode")) {
        mode = parse_mode(req.get_param_value("mode"));
      } else if (body.contains("mode") && body["mode"].is_string()) {
        mode = parse_mode(body["mode"].get<std::string>());
      }
      const json& sample_json = body.contains("sample") ? body["sample"] : body;
      Sample sample;
      try {
        sample = sample_from_json(sample_json);
      } catch (const Error& e) {
        throw Error(Errc::kValidationFailure, e.detail());
      }
      res.set_content(to_json(pipeline.moderate(sample, mode)).dump(), kJson);
    });
  });
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"status\":\"ok\"}", kJson);
  });
}

void mount_annotation(httplib::Server& server, AnnotationStore& store, const std::string& ui_dir) {
  server.Post("/v1/tasks", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const json body = parse_body(req);
      if (!body.is_object() || !body.contains("samples") || !body["samples"].is_array()) {
        throw Error(Errc::kValidationFailure, "body needs a \"samples\" array");
      }
      const TaskKind kind = parse_task_kind(body.value("kind", "preference"));
      std::vector<Sample> samples;
      for (const auto& sj : body["samples"]) {
        try {
          samples.push_back(sample_from_json(sj));
        } catch (const Error& e) {
          throw Error(Errc::kValidationFailure, e.detail());
        }
      }
      const auto tasks = store.create_tasks(samples, kind, body.value("replicas", std::size_t{1}),
                                            body.value("warmup", false));
      json ids = json::array();
      for (const auto& t : tasks) ids.push_back(t.id);
      res.status = 201;
      res.set_content(json{{"created", tasks.size()}, {"task_ids", ids}}.dump(), kJson);
    });
  });

  server.Get("/v1/tasks/next", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const std::string annotator = annotator_of(req);
      if (annotator.empty()) throw Error(Errc::kValidationFailure, "missing annotator id");
      res.set_content(to_json(store.next_task(annotator)).dump(), kJson);
    });
  });

  server.Post("/v1/submissions", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      json body = parse_body(req);
      if (!body.is_object()) throw Error(Errc::kValidationFailure, "body must be an object");
      if (!body.contains("annotator_id")) body["annotator_id"] = annotator_of(req);
      if (!body.contains("task_id") || !body["task_id"].is_string()) {
        throw Error(Errc::kValidationFailure, "missing task_id");
      }
      const auto task = store.task(body["task_id"].get<std::string>());
      if (!task) throw Error(Errc::kNotAssigned, "unknown task " + body["task_id"].get<std::string>());
      const TaskStatus status = store.submit(submission_from_json(body, task->kind));
      res.set_content(json{{"task_id", task->id}, {"status", name(status)}}.dump(), kJson);
    });
  });

  server.Get("/v1/export", [&store](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] {
      const TaskKind kind = parse_task_kind(
          req.has_param("kind") ? req.get_param_value("kind") : std::string("preference"));
      res.set_content(store.export_jsonl(kind), "application/x-ndjson");
    });
  });

  server.Get("/v1/progress", [&store](const httplib::Request&, httplib::Response& res) {
    guarded(res, [&] { res.set_content(to_json(store.progress()).dump(), kJson); });
  });

  if (!ui_dir.empty()) server.set_mount_point("/ui", ui_dir);
}

}  // namespace trollguard
