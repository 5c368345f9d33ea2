#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "pizzamon/digest.hpp"
#include "pizzamon/types.hpp"

namespace pizzamon {

enum class MonitorMode : std::uint8_t { kNormal, kBreachPending, kCritical };

const char* to_string(MonitorMode m);

// One locally persisted log line. Window stats cover the samples taken since
// the previous local record, this one included.
struct LocalRecord {
  Timestamp at;
  Reading reading;
  MonitorMode mode = MonitorMode::kNormal;
  std::int32_t window_min_temp_decic = 0;
  std::int32_t window_max_temp_decic = 0;
  std::int32_t window_avg_temp_decic = 0;
  // True for the fixed normal_log_period grid, false for extra Critical-mode logs.
  bool scheduled = true;

  bool operator==(const LocalRecord&) const = default;
};

enum class EventKind : std::uint8_t {
  kSampleTaken,
  kLocalLogWritten,
  kBreachStarted,
  kCriticalEscalated,
  kImageCaptured,
  kAlertDispatched,
  kBreachResolved,
  kBatchAnchored,
  kDailyReportAnchored,
};

const char* to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

struct EpisodeInfo {
  std::uint64_t episode_id = 0;
  Timestamp since;
  Reading reading;
  bool operator==(const EpisodeInfo&) const = default;
};

struct ImageInfo {
  std::uint64_t episode_id = 0;
  Digest content_digest{};
  bool operator==(const ImageInfo&) const = default;
};

struct ResolutionInfo {
  std::uint64_t episode_id = 0;
  Timestamp since;
  std::int64_t duration_s = 0;
  Reading reading;
  bool reached_critical = false;
  bool operator==(const ResolutionInfo&) const = default;
};

// Local records with `at` in [begin, end) belong to this batch.
struct AnchorWindow {
  Timestamp begin;
  Timestamp end;
  bool operator==(const AnchorWindow&) const = default;
};

struct ReportDay {
  Day day;
  bool operator==(const ReportDay&) const = default;
};

using EventPayload = std::variant<Reading, LocalRecord, EpisodeInfo, ImageInfo,
                                  ResolutionInfo, AnchorWindow, ReportDay>;

struct MonitorEvent {
  EventKind kind = EventKind::kSampleTaken;
  Timestamp at;
  std::string device_id;
  EventPayload payload;

  bool operator==(const MonitorEvent&) const = default;

  // Episode the event belongs to, 0 when none.
  std::uint64_t episode_id() const;
};

nlohmann::ordered_json event_to_json(const MonitorEvent& e);
// Throws Error(kParseError).
MonitorEvent event_from_json(const nlohmann::json& j);

// One compact JSON object per line, trailing LF.
std::string to_json_line(const MonitorEvent& e);
// Throws Error(kParseError) with the 1-based line number.
std::vector<MonitorEvent> parse_event_log(const std::string& text);

}  // namespace pizzamon
