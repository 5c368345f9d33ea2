#include "pizzamon/error.hpp"

namespace pizzamon {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchedulingInPast: return "SchedulingInPast";
    case ErrorCode::kInvalidScenario: return "InvalidScenario";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kNonMonotonicTimestamp: return "NonMonotonicTimestamp";
    case ErrorCode::kOutOfOrderSample: return "OutOfOrderSample";
    case ErrorCode::kUnauthorized: return "Unauthorized";
    case ErrorCode::kMalformedPayload: return "MalformedPayload";
    case ErrorCode::kBatchTooLarge: return "BatchTooLarge";
    case ErrorCode::kLedgerOutage: return "LedgerOutage";
    case ErrorCode::kCorruptStore: return "CorruptStore";
    case ErrorCode::kUnsupportedEvent: return "UnsupportedEvent";
    case ErrorCode::kSinkUnavailable: return "SinkUnavailable";
    case ErrorCode::kInconsistentTimeline: return "InconsistentTimeline";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

}  // namespace pizzamon
