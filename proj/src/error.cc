#include "trollguard/error.h"

namespace trollguard {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::kUnknownLabel: return "UnknownLabel";
    case Errc::kMalformedRecord: return "MalformedRecord";
    case Errc::kIoFailure: return "IoFailure";
    case Errc::kMissingPlaceholder: return "MissingPlaceholder";
    case Errc::kTransportFailure: return "TransportFailure";
    case Errc::kParseFailure: return "ParseFailure";
    case Errc::kPreconditionViolation: return "PreconditionViolation";
    case Errc::kEmptyRow: return "EmptyRow";
    case Errc::kDegenerateRow: return "DegenerateRow";
    case Errc::kEmptyTable: return "EmptyTable";
    case Errc::kEmptyInput: return "EmptyInput";
    case Errc::kSupportMismatch: return "SupportMismatch";
    case Errc::kInconsistentModelSets: return "InconsistentModelSets";
    case Errc::kOutOfRangeScore: return "OutOfRangeScore";
    case Errc::kDegenerateInput: return "DegenerateInput";
    case Errc::kNoNonzeroDifferences: return "NoNonzeroDifferences";
    case Errc::kDomainError: return "DomainError";
    case Errc::kCandidateCountMismatch: return "CandidateCountMismatch";
    case Errc::kNoTasksAvailable: return "NoTasksAvailable";
    case Errc::kQuotaExceeded: return "QuotaExceeded";
    case Errc::kValidationFailure: return "ValidationFailure";
    case Errc::kNotAssigned: return "NotAssigned";
    case Errc::kDuplicateSubmission: return "DuplicateSubmission";
    case Errc::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& detail)
    : std::runtime_error(compose(code, detail)), code_(code), detail_(detail) {}

std::string Error::compose(Errc code, const std::string& detail) {
  std::string out(errc_name(code));
  if (!detail.empty()) {
    out += ": ";
    out += detail;
  }
  return out;
}

Error& Error::with_stage(std::string stage) {
  stage_ = std::move(stage);
  return *this;
}

Error& Error::with_line(std::size_t line) {
  line_ = line;
  return *this;
}

}  // namespace trollguard
