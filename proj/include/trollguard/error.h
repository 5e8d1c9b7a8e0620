#ifndef TROLLGUARD_ERROR_H_
#define TROLLGUARD_ERROR_H_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trollguard {

enum class Errc {
  kUnknownLabel,
  kMalformedRecord,
  kIoFailure,
  kMissingPlaceholder,
  kTransportFailure,
  kParseFailure,
  kPreconditionViolation,
  kEmptyRow,
  kDegenerateRow,
  kEmptyTable,
  kEmptyInput,
  kSupportMismatch,
  kInconsistentModelSets,
  kOutOfRangeScore,
  kDegenerateInput,
  kNoNonzeroDifferences,
  kDomainError,
  kCandidateCountMismatch,
  kNoTasksAvailable,
  kQuotaExceeded,
  kValidationFailure,
  kNotAssigned,
  kDuplicateSubmission,
  kInvalidArgument,
};

std::string_view errc_name(Errc code);

// Single exception type for the library. The code identifies the failure
// class; stage and line are filled in where the failing context is known.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail);

  Errc code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

  const std::string& stage() const noexcept { return stage_; }
  std::optional<std::size_t> line() const noexcept { return line_; }

  Error& with_stage(std::string stage);
  Error& with_line(std::size_t line);

 private:
  static std::string compose(Errc code, const std::string& detail);

  Errc code_;
  std::string detail_;
  std::string stage_;
  std::optional<std::size_t> line_;
};

}  // namespace trollguard

#endif  // TROLLGUARD_ERROR_H_
