#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace pizzamon {

enum class ErrorCode {
  kSchedulingInPast,
  kInvalidScenario,
  kParseError,
  kNonMonotonicTimestamp,
  kOutOfOrderSample,
  kUnauthorized,
  kMalformedPayload,
  kBatchTooLarge,
  kLedgerOutage,
  kCorruptStore,
  kUnsupportedEvent,
  kSinkUnavailable,
  kInconsistentTimeline,
  kInvalidConfig,
  kIo,
};

const char* to_string(ErrorCode code);

// Every recoverable failure in the library is reported through this type.
// `row` is set for parse errors that can point at a line (1-based, header = 1).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> row = std::nullopt)
      : std::runtime_error(what), code_(code), row_(row) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> row_;
};

}  // namespace pizzamon
