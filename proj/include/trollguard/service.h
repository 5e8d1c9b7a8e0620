#ifndef TROLLGUARD_SERVICE_H_
#define TROLLGUARD_SERVICE_H_

#include <string>

#include <json.hpp>

#include "trollguard/annotation_store.h"
#include "trollguard/error.h"
#include "trollguard/pipeline.h"

namespace httplib {
class Server;
}

namespace trollguard {

// 400 validation, 403 quota, 404 no tasks, 409 conflicts, 502 upstream,
// 500 otherwise.
int http_status(Errc code);
nlohmann::json error_json(const Error& e);

// POST /v1/moderate: body is a Sample JSON, optionally with "mode"; the
// ?mode= query parameter takes precedence. Responds with the outcome JSON.
void mount_moderation(httplib::Server& server, const Pipeline& pipeline,
                      GenerationMode default_mode = GenerationMode::kPrs);

// POST /v1/tasks, GET /v1/tasks/next?annotator=ID, POST /v1/submissions,
// GET /v1/export?kind=..., GET /v1/progress. A non-empty ui_dir is served
// under /ui/.
void mount_annotation(httplib::Server& server, AnnotationStore& store,
                      const std::string& ui_dir = {});

}  // namespace trollguard

#endif  // TROLLGUARD_SERVICE_H_
