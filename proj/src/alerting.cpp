#include "pizzamon/alerting.hpp"

#include <ostream>

#include <nlohmann/json.hpp>

#include "pizzamon/error.hpp"

namespace pizzamon {

const char* to_string(Severity s) {
  switch (s) {
    case Severity::kCritical: return "CRITICAL";
    case Severity::kResolved: return "RESOLVED";
    case Severity::kNotice: return "NOTICE";
  }
  return "?";
}

const char* to_string(SinkKind s) {
  switch (s) {
    case SinkKind::kBuzzer: return "buzzer";
    case SinkKind::kDisplay: return "display";
    case SinkKind::kMessenger: return "messenger";
  }
  return "?";
}

AlertMessage render_alert(const MonitorEvent& event) {
  AlertMessage m;
  m.device_id = event.device_id;
  std::string head;
  std::string tail;
  if (event.kind == EventKind::kCriticalEscalated) {
    const auto& info = std::get<EpisodeInfo>(event.payload);
    m.severity = Severity::kCritical;
    m.episode_id = info.episode_id;
    m.reading = info.reading;
    m.since = info.since;
    head = "ALERT|CRITICAL";
  } else if (event.kind == EventKind::kBreachResolved) {
    const auto& info = std::get<ResolutionInfo>(event.payload);
    m.severity = Severity::kResolved;
    m.episode_id = info.episode_id;
    m.reading = info.reading;
    m.since = info.since;
    m.duration_s = info.duration_s;
    head = "RESOLVED";
    tail = "|duration=" + std::to_string(info.duration_s) + "s";
  } else {
    throw Error(ErrorCode::kUnsupportedEvent,
                std::string("no alert template for ") + to_string(event.kind));
  }
  m.text = head + "|dev=" + m.device_id + "|temp=" + format_tenths(m.reading.temp_decicelsius) +
           "C|hum=" + format_tenths(m.reading.humidity_decipercent) + "%|since=" + to_iso8601(m.since) + tail;
  return m;
}

AlertMessage make_notice(const std::string& device_id, Timestamp at, std::string text) {
  AlertMessage m;
  m.device_id = device_id;
  m.severity = Severity::kNotice;
  m.since = at;
  m.text = std::move(text);
  return m;
}

std::string DisplaySink::showing(Timestamp t) const {
  const std::int64_t ms = t.unix_seconds * 1000;
  for (auto it = shown.rbegin(); it != shown.rend(); ++it) {
    if (it->delivered_at_ms <= ms) {
      return ms < it->delivered_at_ms + kHoldSeconds * 1000 ? it->message.text : std::string{};
    }
  }
  return {};
}

CaptureMessenger::CaptureMessenger(std::string chat_id, std::ostream* capture)
    : chat_id_(std::move(chat_id)), capture_(capture) {}

bool CaptureMessenger::available(Timestamp at) const {
  for (const auto& [b, e] : outages_) {
    if (b <= at && at < e) return false;
  }
  return true;
}

std::string CaptureMessenger::capture_line(const std::string& chat_id, const DeliveryRecord& r) {
  nlohmann::ordered_json j;
  j["chat_id"] = chat_id;
  j["text"] = r.message.text;
  j["dispatched_at"] = static_cast<double>(r.dispatched_at_ms) / 1000.0;
  j["delivered_at"] = static_cast<double>(r.delivered_at_ms) / 1000.0;
  return j.dump() + "\n";
}

void CaptureMessenger::deliver(const DeliveryRecord& record) {
  delivered_.push_back(record);
  if (capture_) {
    *capture_ << capture_line(chat_id_, record);
    capture_->flush();
  }
}

AlertDispatcher::AlertDispatcher(LatencyModel latency) : latency_(latency) {}

void AlertDispatcher::add_sink(std::shared_ptr<AlertSink> sink) {
  // Each sink draws from its own stream, keyed by kind, so adding or removing
  // a sink never perturbs another sink's latencies.
  const std::uint64_t salt = 0x9E3779B97F4A7C15ull * (static_cast<std::uint64_t>(sink->kind()) + 1);
  sinks_.push_back(Slot{std::move(sink), Rng(latency_.seed ^ salt)});
}

std::optional<DeliveryRecord> AlertDispatcher::try_deliver(std::size_t slot, const AlertMessage& message,
                                                           Timestamp now) {
  Slot& s = sinks_[slot];
  if (!s.sink->available(now)) {
    failures_.push_back({s.sink->kind(), now, message.episode_id});
    retry_.push_back({slot, message});
    return std::nullopt;
  }
  DeliveryRecord rec;
  rec.message = message;
  rec.sink = s.sink->kind();
  rec.dispatched_at_ms = now.unix_seconds * 1000;
  const std::int64_t latency =
      rec.sink == SinkKind::kMessenger ? s.rng.between(latency_.min_ms, latency_.max_ms) : 0;
  rec.delivered_at_ms = rec.dispatched_at_ms + latency;
  s.sink->deliver(rec);
  records_.push_back(rec);
  return rec;
}

std::vector<DeliveryRecord> AlertDispatcher::dispatch(const AlertMessage& message, Timestamp now) {
  if (sinks_.empty()) throw Error(ErrorCode::kSinkUnavailable, "no alert sinks registered");
  std::vector<DeliveryRecord> out;
  for (std::size_t i = 0; i < sinks_.size(); ++i) {
    if (auto r = try_deliver(i, message, now)) out.push_back(*r);
  }
  return out;
}

std::vector<DeliveryRecord> AlertDispatcher::dispatch_to(const AlertMessage& message, Timestamp now,
                                                         SinkKind only) {
  std::vector<DeliveryRecord> out;
  bool any = false;
  for (std::size_t i = 0; i < sinks_.size(); ++i) {
    if (sinks_[i].sink->kind() != only) continue;
    any = true;
    if (auto r = try_deliver(i, message, now)) out.push_back(*r);
  }
  if (!any) throw Error(ErrorCode::kSinkUnavailable, std::string("no ") + to_string(only) + " sink");
  return out;
}

std::vector<DeliveryRecord> AlertDispatcher::pump(Timestamp now) {
  std::vector<DeliveryRecord> out;
  const std::size_t n = retry_.size();
  for (std::size_t i = 0; i < n; ++i) {
    Retry r = std::move(retry_.front());
    retry_.pop_front();
    if (sinks_[r.slot].sink->available(now)) {
      if (auto rec = try_deliver(r.slot, r.message, now)) out.push_back(*rec);
    } else {
      retry_.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace pizzamon
