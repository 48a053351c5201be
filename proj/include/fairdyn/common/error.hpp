#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fairdyn {

enum class ErrorCode {
  kInvalidArgument,
  kEmptyDataset,
  kEmptyGroup,
  kDegenerateSpec,
  kMissingStep,
  kSupportTooLarge,
  kNonFinite,
  kUntrainedModel,
  kLayoutMismatch,
  kMalformedCsv,
  kIo,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries one of the codes above so
// callers (and the CLI exit path) can branch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace fairdyn
