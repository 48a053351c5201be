#include "fairdyn/common/error.hpp"

#include <thread>

#include "fairdyn/common/parallel.hpp"

namespace fairdyn {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kEmptyGroup: return "EmptyGroup";
    case ErrorCode::kDegenerateSpec: return "DegenerateSpec";
    case ErrorCode::kMissingStep: return "MissingStep";
    case ErrorCode::kSupportTooLarge: return "SupportTooLarge";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kUntrainedModel: return "UntrainedModel";
    case ErrorCode::kLayoutMismatch: return "LayoutMismatch";
    case ErrorCode::kMalformedCsv: return "MalformedCSV";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

std::size_t default_workers() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

}  // namespace fairdyn
