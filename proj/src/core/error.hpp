#pragma once

#include <stdexcept>
#include <string>

namespace dgrag {

enum class ErrorCode {
  kConfig = 1,
  kInvalidArgument,
  kExtraction,
  kIntegrity,
  kDanglingReference,
  kProvider,
  kRetryable,
  kUnsupported,
  kJudging,
  kRouting,
  kTransport,
  kTimeout,
  kDecode,
  kVersion,
  kChecksum,
  kIo,
  kSchema,
};

const char* ErrorCodeName(ErrorCode code);

// Single exception type for the core; callers branch on code().
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace dgrag
