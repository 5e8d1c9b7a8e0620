#ifndef TROLLGUARD_RESOURCES_H_
#define TROLLGUARD_RESOURCES_H_

#include <optional>
#include <string_view>
#include <vector>

namespace trollguard {

// Files from prompts/ and data/ compiled into the library, keyed by their
// path relative to the source root (e.g. "prompts/cr_prs.txt").
std::optional<std::string_view> embedded_resource(std::string_view path);
std::vector<std::string_view> embedded_resource_names();

}  // namespace trollguard

#endif  // TROLLGUARD_RESOURCES_H_
