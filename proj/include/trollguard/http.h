#ifndef TROLLGUARD_HTTP_H_
#define TROLLGUARD_HTTP_H_

#include <map>
#include <string>

namespace trollguard {

struct HttpResponse {
  int status = 0;
  std::string body;
};

// POST to an absolute http(s) URL. Throws Error(kTransportFailure) when no
// response is received; non-2xx responses are returned to the caller.
HttpResponse http_post(const std::string& url, const std::string& body,
                       const std::map<std::string, std::string>& headers,
                       double timeout_seconds);

}  // namespace trollguard

#endif  // TROLLGUARD_HTTP_H_
