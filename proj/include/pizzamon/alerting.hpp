#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pizzamon/events.hpp"
#include "pizzamon/rng.hpp"

namespace pizzamon {

enum class Severity : std::uint8_t { kCritical, kResolved, kNotice };

const char* to_string(Severity s);

struct AlertMessage {
  std::uint64_t episode_id = 0;
  std::string device_id;
  Severity severity = Severity::kCritical;
  Reading reading;
  Timestamp since;
  std::int64_t duration_s = 0;  // Resolved only
  std::string text;
  bool operator==(const AlertMessage&) const = default;
};

// Critical:  ALERT|CRITICAL|dev=<id>|temp=<x.x>C|hum=<y.y>%|since=<iso8601>
// Resolved:  RESOLVED|dev=<id>|temp=<x.x>C|hum=<y.y>%|since=<iso8601>|duration=<n>s
// Anything other than CriticalEscalated / BreachResolved throws Error(kUnsupportedEvent).
AlertMessage render_alert(const MonitorEvent& event);

// Free-text notice (daily report digests). Not tied to an episode.
AlertMessage make_notice(const std::string& device_id, Timestamp at, std::string text);

enum class SinkKind : std::uint8_t { kBuzzer, kDisplay, kMessenger };

const char* to_string(SinkKind s);

struct DeliveryRecord {
  AlertMessage message;
  SinkKind sink = SinkKind::kBuzzer;
  std::int64_t dispatched_at_ms = 0;
  std::int64_t delivered_at_ms = 0;

  std::int64_t latency_ms() const { return delivered_at_ms - dispatched_at_ms; }
  bool operator==(const DeliveryRecord&) const = default;
};

class AlertSink {
 public:
  virtual ~AlertSink() = default;
  virtual SinkKind kind() const = 0;
  virtual bool available(Timestamp at) const { (void)at; return true; }
  virtual void deliver(const DeliveryRecord& record) = 0;
};

// Local actuators: deliver instantly and remember what they showed.
class BuzzerSink : public AlertSink {
 public:
  SinkKind kind() const override { return SinkKind::kBuzzer; }
  void deliver(const DeliveryRecord& record) override { activations.push_back(record); }
  std::vector<DeliveryRecord> activations;
};

class DisplaySink : public AlertSink {
 public:
  static constexpr std::int64_t kHoldSeconds = 10;
  SinkKind kind() const override { return SinkKind::kDisplay; }
  void deliver(const DeliveryRecord& record) override { shown.push_back(record); }
  // Text on screen at `t`: the last message within its hold window, else empty
  // (the live-readings line).
  std::string showing(Timestamp t) const;
  std::vector<DeliveryRecord> shown;
};

// Telegram-shaped messenger: body {"chat_id", "text"}. The default sink
// appends one JSON object per line to a capture stream, adding
// dispatched_at / delivered_at (unix seconds, millisecond fraction).
class CaptureMessenger : public AlertSink {
 public:
  CaptureMessenger(std::string chat_id, std::ostream* capture);
  SinkKind kind() const override { return SinkKind::kMessenger; }
  bool available(Timestamp at) const override;
  void deliver(const DeliveryRecord& record) override;

  void add_outage(Timestamp start, Timestamp end) { outages_.emplace_back(start, end); }
  const std::vector<DeliveryRecord>& delivered() const { return delivered_; }

  static std::string capture_line(const std::string& chat_id, const DeliveryRecord& record);

 private:
  std::string chat_id_;
  std::ostream* capture_;
  std::vector<std::pair<Timestamp, Timestamp>> outages_;
  std::vector<DeliveryRecord> delivered_;
};

// Messenger delivery latency, uniform over [min_ms, max_ms].
struct LatencyModel {
  std::uint64_t seed = 0;
  std::int64_t min_ms = 2000;
  std::int64_t max_ms = 4000;
};

struct SinkFailure {
  SinkKind sink;
  Timestamp at;
  std::uint64_t episode_id;
};

// Fans each message out to every sink. An unavailable sink gets the message
// re-queued for it alone and retried on pump(); other sinks are unaffected.
class AlertDispatcher {
 public:
  explicit AlertDispatcher(LatencyModel latency = {});

  void add_sink(std::shared_ptr<AlertSink> sink);
  std::size_t sink_count() const { return sinks_.size(); }

  // Throws Error(kSinkUnavailable) if no sink is registered.
  std::vector<DeliveryRecord> dispatch(const AlertMessage& message, Timestamp now);
  // Same, restricted to sinks of one kind (report notices go to the messenger only).
  std::vector<DeliveryRecord> dispatch_to(const AlertMessage& message, Timestamp now, SinkKind only);

  // Retries queued deliveries whose sink is available at `now`.
  std::vector<DeliveryRecord> pump(Timestamp now);

  std::size_t queued() const { return retry_.size(); }
  const std::vector<DeliveryRecord>& records() const { return records_; }
  const std::vector<SinkFailure>& failures() const { return failures_; }

 private:
  struct Slot {
    std::shared_ptr<AlertSink> sink;
    Rng rng;
  };
  struct Retry {
    std::size_t slot;
    AlertMessage message;
  };

  std::optional<DeliveryRecord> try_deliver(std::size_t slot, const AlertMessage& message, Timestamp now);

  LatencyModel latency_;
  std::vector<Slot> sinks_;
  std::deque<Retry> retry_;
  std::vector<DeliveryRecord> records_;
  std::vector<SinkFailure> failures_;
};

}  // namespace pizzamon
