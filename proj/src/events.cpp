#include "pizzamon/events.hpp"

#include <nlohmann/json.hpp>

#include "pizzamon/error.hpp"

namespace pizzamon {
namespace {

constexpr const char* kKindNames[] = {
    "SampleTaken",     "LocalLogWritten", "BreachStarted",  "CriticalEscalated",  "ImageCaptured",
    "AlertDispatched", "BreachResolved",  "BatchAnchored", "DailyReportAnchored",
};

MonitorMode mode_from_string(const std::string& s) {
  if (s == "NORMAL") return MonitorMode::kNormal;
  if (s == "PENDING") return MonitorMode::kBreachPending;
  if (s == "CRITICAL") return MonitorMode::kCritical;
  throw Error(ErrorCode::kParseError, "unknown mode " + s);
}

Reading reading_at(const nlohmann::json& j, const std::string& device, Timestamp at) {
  return Reading{device, at, j.at("temp_decic").get<std::int16_t>(),
                 j.at("hum_decip").get<std::uint16_t>()};
}

}  // namespace

const char* to_string(MonitorMode m) {
  switch (m) {
    case MonitorMode::kNormal: return "NORMAL";
    case MonitorMode::kBreachPending: return "PENDING";
    case MonitorMode::kCritical: return "CRITICAL";
  }
  return "?";
}

const char* to_string(EventKind k) { return kKindNames[static_cast<int>(k)]; }

EventKind event_kind_from_string(const std::string& s) {
  for (int i = 0; i < 9; ++i) {
    if (s == kKindNames[i]) return static_cast<EventKind>(i);
  }
  throw Error(ErrorCode::kParseError, "unknown event kind " + s);
}

std::uint64_t MonitorEvent::episode_id() const {
  if (auto* e = std::get_if<EpisodeInfo>(&payload)) return e->episode_id;
  if (auto* i = std::get_if<ImageInfo>(&payload)) return i->episode_id;
  if (auto* r = std::get_if<ResolutionInfo>(&payload)) return r->episode_id;
  return 0;
}

nlohmann::ordered_json event_to_json(const MonitorEvent& e) {
  nlohmann::ordered_json j;
  j["kind"] = to_string(e.kind);
  j["at"] = e.at.unix_seconds;
  j["device_id"] = e.device_id;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, Reading>) {
          j["temp_decic"] = p.temp_decicelsius;
          j["hum_decip"] = p.humidity_decipercent;
        } else if constexpr (std::is_same_v<T, LocalRecord>) {
          j["temp_decic"] = p.reading.temp_decicelsius;
          j["hum_decip"] = p.reading.humidity_decipercent;
          j["mode"] = to_string(p.mode);
          j["window_min"] = p.window_min_temp_decic;
          j["window_max"] = p.window_max_temp_decic;
          j["window_avg"] = p.window_avg_temp_decic;
          j["scheduled"] = p.scheduled;
        } else if constexpr (std::is_same_v<T, EpisodeInfo>) {
          j["episode_id"] = p.episode_id;
          j["since"] = p.since.unix_seconds;
          j["temp_decic"] = p.reading.temp_decicelsius;
          j["hum_decip"] = p.reading.humidity_decipercent;
        } else if constexpr (std::is_same_v<T, ImageInfo>) {
          j["episode_id"] = p.episode_id;
          j["content_digest"] = to_hex(p.content_digest);
        } else if constexpr (std::is_same_v<T, ResolutionInfo>) {
          j["episode_id"] = p.episode_id;
          j["since"] = p.since.unix_seconds;
          j["duration_s"] = p.duration_s;
          j["temp_decic"] = p.reading.temp_decicelsius;
          j["hum_decip"] = p.reading.humidity_decipercent;
          j["reached_critical"] = p.reached_critical;
        } else if constexpr (std::is_same_v<T, AnchorWindow>) {
          j["window_begin"] = p.begin.unix_seconds;
          j["window_end"] = p.end.unix_seconds;
        } else if constexpr (std::is_same_v<T, ReportDay>) {
          j["day"] = to_date_string(p.day);
        }
      },
      e.payload);
  return j;
}

MonitorEvent event_from_json(const nlohmann::json& j) {
  try {
    MonitorEvent e;
    e.kind = event_kind_from_string(j.at("kind").get<std::string>());
    e.at = Timestamp{j.at("at").get<std::int64_t>()};
    e.device_id = j.at("device_id").get<std::string>();
    switch (e.kind) {
      case EventKind::kSampleTaken:
        e.payload = reading_at(j, e.device_id, e.at);
        break;
      case EventKind::kLocalLogWritten: {
        LocalRecord r;
        r.at = e.at;
        r.reading = reading_at(j, e.device_id, e.at);
        r.mode = mode_from_string(j.at("mode").get<std::string>());
        r.window_min_temp_decic = j.at("window_min").get<std::int32_t>();
        r.window_max_temp_decic = j.at("window_max").get<std::int32_t>();
        r.window_avg_temp_decic = j.at("window_avg").get<std::int32_t>();
        r.scheduled = j.at("scheduled").get<bool>();
        e.payload = r;
        break;
      }
      case EventKind::kBreachStarted:
      case EventKind::kCriticalEscalated:
      case EventKind::kAlertDispatched:
        e.payload = EpisodeInfo{j.at("episode_id").get<std::uint64_t>(),
                                Timestamp{j.at("since").get<std::int64_t>()},
                                reading_at(j, e.device_id, e.at)};
        break;
      case EventKind::kImageCaptured:
        e.payload = ImageInfo{j.at("episode_id").get<std::uint64_t>(),
                              digest_from_hex(j.at("content_digest").get<std::string>())};
        break;
      case EventKind::kBreachResolved:
        e.payload = ResolutionInfo{j.at("episode_id").get<std::uint64_t>(),
                                   Timestamp{j.at("since").get<std::int64_t>()},
                                   j.at("duration_s").get<std::int64_t>(),
                                   reading_at(j, e.device_id, e.at),
                                   j.at("reached_critical").get<bool>()};
        break;
      case EventKind::kBatchAnchored:
        e.payload = AnchorWindow{Timestamp{j.at("window_begin").get<std::int64_t>()},
                                 Timestamp{j.at("window_end").get<std::int64_t>()}};
        break;
      case EventKind::kDailyReportAnchored:
        e.payload = ReportDay{parse_date(j.at("day").get<std::string>())};
        break;
    }
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(ErrorCode::kParseError, ex.what());
  }
}

std::string to_json_line(const MonitorEvent& e) { return event_to_json(e).dump() + "\n"; }

std::vector<MonitorEvent> parse_event_log(const std::string& text) {
  std::vector<MonitorEvent> out;
  std::size_t pos = 0, line = 0;
  while (pos < text.size()) {
    ++line;
    auto nl = text.find('\n', pos);
    if (nl == std::string::npos) nl = text.size();
    const std::string row = text.substr(pos, nl - pos);
    pos = nl + 1;
    if (row.empty()) continue;
    try {
      out.push_back(event_from_json(nlohmann::json::parse(row)));
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::kParseError, "events line " + std::to_string(line) + ": " + ex.what(), line);
    } catch (const Error& ex) {
      throw Error(ErrorCode::kParseError, "events line " + std::to_string(line) + ": " + ex.what(), line);
    }
  }
  return out;
}

}  // namespace pizzamon
