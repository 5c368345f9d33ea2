#include "pizzamon/monitor.hpp"

#include <algorithm>
#include <map>

#include "pizzamon/codec.hpp"
#include "pizzamon/error.hpp"

namespace pizzamon {

Classification classify(const Reading& r, const Thresholds& t) {
  const bool temp_ok = r.temp_decicelsius >= t.temp_min_decic && r.temp_decicelsius <= t.temp_max_decic;
  const bool hum_ok = r.humidity_decipercent >= t.hum_min_decip && r.humidity_decipercent <= t.hum_max_decip;
  return temp_ok && hum_ok ? Classification::kInRange : Classification::kOutOfRange;
}

bool inside_hysteresis_band(const Reading& r, const Thresholds& t) {
  const std::int64_t h = t.hysteresis_decic;
  return r.temp_decicelsius > t.temp_min_decic + h && r.temp_decicelsius < t.temp_max_decic - h &&
         r.humidity_decipercent >= t.hum_min_decip && r.humidity_decipercent <= t.hum_max_decip;
}

std::vector<std::uint8_t> encode_state(const MonitorState& s) {
  ByteWriter w;
  w.u8(1);  // layout version
  w.u8(static_cast<std::uint8_t>(s.mode));
  w.u8(s.episode_start.has_value());
  w.i64(s.episode_start.value_or(Timestamp{}).unix_seconds);
  w.u64(s.episode_id);
  w.u32(s.consecutive_in_range);
  w.u8(s.critical_reached);
  w.u8(s.last_step.has_value());
  w.i64(s.last_step.value_or(Timestamp{}).unix_seconds);
  w.u8(s.last_local_log.has_value());
  w.i64(s.last_local_log.value_or(Timestamp{}).unix_seconds);
  w.i64(s.next_local_log_due.unix_seconds);
  w.i64(s.last_batch_anchor.unix_seconds);
  w.i64(s.next_batch_due.unix_seconds);
  w.i32(s.window_min);
  w.i32(s.window_max);
  w.i64(s.window_sum);
  w.u32(s.window_count);
  return std::move(w).take();
}

MonitorState decode_state(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, ErrorCode::kCorruptStore);
  if (r.u8() != 1) throw Error(ErrorCode::kCorruptStore, "unknown monitor state layout");
  MonitorState s;
  const auto mode = r.u8();
  if (mode > 2) throw Error(ErrorCode::kCorruptStore, "bad monitor mode");
  s.mode = static_cast<MonitorMode>(mode);
  auto opt_ts = [&]() -> std::optional<Timestamp> {
    const bool has = r.u8() != 0;
    const Timestamp t{r.i64()};
    return has ? std::optional(t) : std::nullopt;
  };
  s.episode_start = opt_ts();
  s.episode_id = r.u64();
  s.consecutive_in_range = r.u32();
  s.critical_reached = r.u8() != 0;
  s.last_step = opt_ts();
  s.last_local_log = opt_ts();
  s.next_local_log_due = Timestamp{r.i64()};
  s.last_batch_anchor = Timestamp{r.i64()};
  s.next_batch_due = Timestamp{r.i64()};
  s.window_min = r.i32();
  s.window_max = r.i32();
  s.window_sum = r.i64();
  s.window_count = r.u32();
  r.expect_done("monitor state");
  return s;
}

MonitorEngine::MonitorEngine(std::string device_id, Thresholds thresholds, std::uint64_t image_seed)
    : device_id_(std::move(device_id)), thresholds_(thresholds), image_seed_(image_seed) {
  validate(thresholds_);
}

Digest MonitorEngine::image_digest(std::uint64_t episode_id, Timestamp at) const {
  ByteWriter w;
  w.str("image");
  w.str(device_id_);
  w.u64(episode_id);
  w.i64(at.unix_seconds);
  w.u64(image_seed_);
  return sha256(w.data());
}

StepResult MonitorEngine::step(const MonitorState& state, const std::optional<Reading>& reading,
                               Timestamp now) const {
  const Thresholds& t = thresholds_;
  if (state.last_step && now <= *state.last_step) {
    throw Error(ErrorCode::kOutOfOrderSample,
                "sample at " + std::to_string(now.unix_seconds) + " does not follow " +
                    std::to_string(state.last_step->unix_seconds));
  }
  if (reading && reading->at != now) {
    throw Error(ErrorCode::kOutOfOrderSample, "reading timestamp does not match the tick");
  }
  if (reading && reading->device_id != device_id_) {
    throw Error(ErrorCode::kMalformedPayload, "reading for device '" + reading->device_id +
                                                  "' fed to engine for '" + device_id_ + "'");
  }

  StepResult out{state, {}};
  MonitorState& s = out.state;
  auto emit = [&](EventKind kind, EventPayload payload) {
    out.events.push_back(MonitorEvent{kind, now, device_id_, std::move(payload)});
  };

  if (!s.last_step) {
    s.next_local_log_due = now;
    s.last_batch_anchor = now;
    s.next_batch_due = now + t.batch_anchor_period;
  } else if (day_of(now) > day_of(*s.last_step)) {
    emit(EventKind::kDailyReportAnchored, ReportDay{day_of(*s.last_step)});
  }
  s.last_step = now;

  if (now >= s.next_batch_due) {
    Timestamp grid = s.next_batch_due;
    while (grid + t.batch_anchor_period <= now) grid = grid + t.batch_anchor_period;
    s.next_batch_due = grid + t.batch_anchor_period;
    if (is_midnight(grid)) {
      // The daily report anchor stands in for this tick.
      s.last_batch_anchor = grid;
    } else {
      const Timestamp begin = std::max(s.last_batch_anchor, day_of(now).begin());
      emit(EventKind::kBatchAnchored, AnchorWindow{begin, now});
      s.last_batch_anchor = now;
    }
  }

  if (!reading) return out;
  const Reading& r = *reading;
  emit(EventKind::kSampleTaken, r);

  if (s.window_count == 0) {
    s.window_min = s.window_max = r.temp_decicelsius;
  } else {
    s.window_min = std::min<std::int32_t>(s.window_min, r.temp_decicelsius);
    s.window_max = std::max<std::int32_t>(s.window_max, r.temp_decicelsius);
  }
  s.window_sum += r.temp_decicelsius;
  ++s.window_count;

  if (classify(r, t) == Classification::kOutOfRange) {
    s.consecutive_in_range = 0;
    if (s.mode == MonitorMode::kNormal) {
      ++s.episode_id;
      s.mode = MonitorMode::kBreachPending;
      s.episode_start = now;
      s.critical_reached = false;
      emit(EventKind::kBreachStarted, EpisodeInfo{s.episode_id, now, r});
    }
    if (s.mode == MonitorMode::kBreachPending && now - *s.episode_start >= t.breach_escalation) {
      s.mode = MonitorMode::kCritical;
      s.critical_reached = true;
      const EpisodeInfo info{s.episode_id, *s.episode_start, r};
      emit(EventKind::kCriticalEscalated, info);
      emit(EventKind::kImageCaptured, ImageInfo{s.episode_id, image_digest(s.episode_id, now)});
      emit(EventKind::kAlertDispatched, info);
    }
  } else if (s.mode != MonitorMode::kNormal) {
    s.consecutive_in_range = inside_hysteresis_band(r, t) ? s.consecutive_in_range + 1 : 0;
    if (s.consecutive_in_range >= kResolveAfterSamples) {
      emit(EventKind::kBreachResolved,
           ResolutionInfo{s.episode_id, *s.episode_start, now - *s.episode_start, r, s.critical_reached});
      s.mode = MonitorMode::kNormal;
      s.episode_start.reset();
      s.consecutive_in_range = 0;
      s.critical_reached = false;
    }
  }

  const bool scheduled = now >= s.next_local_log_due;
  const bool critical_due = s.mode == MonitorMode::kCritical &&
                            (!s.last_local_log || now - *s.last_local_log >= t.critical_log_period);
  if (scheduled || critical_due) {
    LocalRecord rec;
    rec.at = now;
    rec.reading = r;
    rec.mode = s.mode;
    rec.window_min_temp_decic = s.window_min;
    rec.window_max_temp_decic = s.window_max;
    // Round half away from zero.
    const std::int64_t n = s.window_count;
    rec.window_avg_temp_decic = static_cast<std::int32_t>(
        s.window_sum >= 0 ? (2 * s.window_sum + n) / (2 * n) : -((-2 * s.window_sum + n) / (2 * n)));
    rec.scheduled = scheduled;
    emit(EventKind::kLocalLogWritten, rec);
    s.last_local_log = now;
    s.window_count = 0;
    s.window_sum = 0;
    if (scheduled) {
      while (s.next_local_log_due <= now) s.next_local_log_due = s.next_local_log_due + t.normal_log_period;
    }
  }
  return out;
}

std::vector<MonitorEvent> MonitorEngine::finish(const MonitorState& state, Timestamp now) const {
  if (!state.last_step) return {};
  return {MonitorEvent{EventKind::kDailyReportAnchored, now, device_id_, ReportDay{day_of(*state.last_step)}}};
}

std::vector<MonitorEvent> run_engine(const MonitorEngine& engine, const std::vector<Reading>& trace,
                                     Timestamp start, std::int64_t horizon) {
  const std::int64_t period = engine.thresholds().sample_period;
  const Timestamp end = start + horizon;
  std::map<Timestamp, const Reading*> by_time;
  for (const auto& r : trace) {
    if (r.at < start || r.at >= end || (r.at - start) % period != 0) {
      throw Error(ErrorCode::kInvalidScenario,
                  "reading at " + std::to_string(r.at.unix_seconds) + " is off the sample grid");
    }
    if (!by_time.emplace(r.at, &r).second) {
      throw Error(ErrorCode::kInvalidScenario, "two readings for one tick");
    }
  }
  MonitorState state;
  std::vector<MonitorEvent> events;
  for (Timestamp t = start; t < end; t = t + period) {
    std::optional<Reading> reading;
    if (auto it = by_time.find(t); it != by_time.end()) reading = *it->second;
    auto res = engine.step(state, reading, t);
    state = std::move(res.state);
    events.insert(events.end(), std::make_move_iterator(res.events.begin()),
                  std::make_move_iterator(res.events.end()));
  }
  auto tail = engine.finish(state, end);
  events.insert(events.end(), tail.begin(), tail.end());
  return events;
}

}  // namespace pizzamon
