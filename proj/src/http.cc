#include <httplib.h>

#include "trollguard/http.h"

#include <chrono>

#include "trollguard/error.h"

namespace trollguard {
namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(Errc::kInvalidArgument, "not an absolute URL: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpResponse http_post(const std::string& url, const std::string& body,
                       const std::map<std::string, std::string>& headers,
                       double timeout_seconds) {
  const SplitUrl parts = split_url(url);
  httplib::Client client(parts.origin);
  const auto timeout = std::chrono::duration<double>(timeout_seconds);
  client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
  client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

  httplib::Headers hdrs;
  std::string content_type = "application/json";
  for (const auto& [k, v] : headers) {
    if (k == "Content-Type") {
      content_type = v;
    } else {
      hdrs.emplace(k, v);
    }
  }
  auto res = client.Post(parts.path, hdrs, body, content_type);
  if (!res) {
    throw Error(Errc::kTransportFailure,
                "POST " + url + " failed: " + httplib::to_string(res.error()));
  }
  return {res->status, res->body};
}

}  // namespace trollguard
