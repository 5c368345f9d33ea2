#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pizzamon/types.hpp"

namespace pizzamon {

enum class ScenarioKind { kNormalDay, kBreachDay, kPeakHours, kReplay };

const char* to_string(ScenarioKind k);
// "normal", "breach", "peak", "replay". Throws Error(kInvalidConfig).
ScenarioKind scenario_kind_from_string(const std::string& s);

enum class FaultKind { kSensorDropout, kProcessCrash, kLedgerOutage };

const char* to_string(FaultKind k);
FaultKind fault_kind_from_string(const std::string& s);

// Active over [start, end).
struct FaultSpec {
  FaultKind kind = FaultKind::kSensorDropout;
  Timestamp start;
  Timestamp end;

  bool covers(Timestamp t) const { return start <= t && t < end; }
  bool operator==(const FaultSpec&) const = default;
};

// Rectangular door-opening excursion over [start, end).
struct SpikeWindow {
  Timestamp start;
  Timestamp end;
  std::int32_t temp_delta_decic = 0;
  std::int32_t hum_delta_decip = 0;
  bool operator==(const SpikeWindow&) const = default;
};

// Temperature pinned to forced_temp_decic over [start, end), noise still applied.
struct BreachWindow {
  Timestamp start;
  Timestamp end;
  std::int32_t forced_temp_decic = 85;
  bool operator==(const BreachWindow&) const = default;
};

// Truncated symmetric noise: every deviation d satisfies |d| <= bound.
struct NoiseModel {
  std::uint32_t temp_bound_decic = 5;
  std::uint32_t hum_bound_decip = 20;
  bool operator==(const NoiseModel&) const = default;
};

struct ScenarioSpec {
  ScenarioKind kind = ScenarioKind::kNormalDay;
  std::uint64_t seed = 0;
  std::string device_id = "fridge-1";
  Timestamp start = kDefaultEpoch;
  std::int32_t base_temp_decic = 40;
  std::int32_t base_hum_decip = 550;
  NoiseModel noise;
  std::vector<SpikeWindow> spike_windows;
  std::optional<BreachWindow> breach_window;
  std::vector<FaultSpec> faults;
  bool operator==(const ScenarioSpec&) const = default;
};

// Presets used by the CLI. Windows are clipped to [start, start + horizon).
// The breach preset forces 8.5 C from 10:00 to 11:30 UTC; the peak preset adds
// door-opening spikes around lunch and dinner that stay inside the band.
ScenarioSpec make_scenario(ScenarioKind kind, std::uint64_t seed, std::int64_t horizon,
                           Timestamp start = kDefaultEpoch);

bool in_fault(const std::vector<FaultSpec>& faults, FaultKind kind, Timestamp t);

// One Reading per sample_period tick in [start, start + horizon), skipping
// SensorDropout windows. Throws Error(kInvalidScenario) for windows outside the
// horizon, inverted windows, or horizon < 0. Replay specs are rejected; use
// replay_trace.
std::vector<Reading> generate_trace(const ScenarioSpec& spec, const Thresholds& thresholds,
                                    std::int64_t horizon);

// Trace CSV: header `timestamp,device_id,temp_decic,hum_decip`, LF endings.
inline constexpr const char* kTraceHeader = "timestamp,device_id,temp_decic,hum_decip";

void write_trace(std::ostream& out, const std::vector<Reading>& readings);
std::string write_trace(const std::vector<Reading>& readings);

// Throws Error(kParseError, row) or Error(kNonMonotonicTimestamp, row); row is
// the 1-based file line.
std::vector<Reading> replay_trace(std::istream& in);
std::vector<Reading> replay_trace_file(const std::string& path);

}  // namespace pizzamon
