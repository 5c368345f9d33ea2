#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pizzamon/events.hpp"
#include "pizzamon/types.hpp"

namespace pizzamon {

enum class Classification { kInRange, kOutOfRange };

// Closed bands: a value equal to a threshold is in range.
Classification classify(const Reading& reading, const Thresholds& thresholds);

// Debounce test used while an episode is open: temperature strictly inside the
// band shrunk by hysteresis, humidity inside its closed band.
bool inside_hysteresis_band(const Reading& reading, const Thresholds& thresholds);

// Number of consecutive hysteresis-band samples that close an episode.
inline constexpr std::uint32_t kResolveAfterSamples = 2;

struct MonitorState {
  MonitorMode mode = MonitorMode::kNormal;
  std::optional<Timestamp> episode_start;
  std::uint64_t episode_id = 0;  // last assigned; 0 before the first episode
  std::uint32_t consecutive_in_range = 0;
  bool critical_reached = false;

  // Grid bookkeeping. The grid origin is the first stepped instant.
  std::optional<Timestamp> last_step;
  std::optional<Timestamp> last_local_log;
  Timestamp next_local_log_due;
  Timestamp last_batch_anchor;
  Timestamp next_batch_due;

  // Temperature stats over the open local-log window.
  std::int32_t window_min = 0;
  std::int32_t window_max = 0;
  std::int64_t window_sum = 0;
  std::uint32_t window_count = 0;

  bool operator==(const MonitorState&) const = default;
};

std::vector<std::uint8_t> encode_state(const MonitorState& s);
// Throws Error(kCorruptStore).
MonitorState decode_state(std::span<const std::uint8_t> bytes);

struct StepResult {
  MonitorState state;
  std::vector<MonitorEvent> events;
};

// Pure per-device state machine. One call per sample tick; `reading` is empty
// when the sensor produced nothing (dropout). Image digests are derived from
// image_seed so a run is a pure function of (trace, thresholds, seed).
class MonitorEngine {
 public:
  MonitorEngine(std::string device_id, Thresholds thresholds, std::uint64_t image_seed = 0);

  const std::string& device_id() const { return device_id_; }
  const Thresholds& thresholds() const { return thresholds_; }

  // Throws Error(kOutOfOrderSample) if now is not after the previous step, or
  // if the reading's timestamp/device disagree with the tick.
  StepResult step(const MonitorState& state, const std::optional<Reading>& reading,
                  Timestamp now) const;

  // End-of-run flush: emits DailyReportAnchored for the day of the last step
  // (nothing if the engine never stepped).
  std::vector<MonitorEvent> finish(const MonitorState& state, Timestamp now) const;

 private:
  Digest image_digest(std::uint64_t episode_id, Timestamp at) const;

  std::string device_id_;
  Thresholds thresholds_;
  std::uint64_t image_seed_;
};

// Steps a whole trace on the sample grid from `start` for `horizon` seconds,
// feeding gaps for missing ticks, then calls finish(). Readings off the grid
// or outside the horizon throw Error(kInvalidScenario).
std::vector<MonitorEvent> run_engine(const MonitorEngine& engine, const std::vector<Reading>& trace,
                                     Timestamp start, std::int64_t horizon);

}  // namespace pizzamon
