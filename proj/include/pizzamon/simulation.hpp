#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pizzamon/alerting.hpp"
#include "pizzamon/config.hpp"
#include "pizzamon/energy.hpp"
#include "pizzamon/ledger.hpp"
#include "pizzamon/monitor.hpp"
#include "pizzamon/report.hpp"
#include "pizzamon/scenario.hpp"

namespace pizzamon {

// `gas.daily_usd`, `gas.txs_per_day`, `gas.per_tx`.
GasSchedule gas_schedule_from(const KeyValueFile& file);

struct SimulationConfig {
  Thresholds thresholds;
  ScenarioSpec scenario;
  std::int64_t horizon = kSecondsPerDay;
  // Used instead of generate_trace when scenario.kind == kReplay.
  std::vector<Reading> replay;
  // Artifacts go here when non-empty; otherwise the run is in-memory except
  // for the local store, which lives in a temporary file.
  std::string out_dir;
  std::string owner_key = "owner";
  std::string writer_key = "gateway";
  GasSchedule gas = GasSchedule::calibrated();
  PowerProfile power;
  DutyPolicy duty;
  std::string chat_id = "local";
  // > 0 paces ticks against the wall clock: one simulated second takes
  // 1/realtime_factor wall seconds.
  double realtime_factor = 0.0;
  // Flush every outbox append to disk. Simulated crashes keep the page cache,
  // so this only matters when the run stands in for a live gateway.
  bool sync_store = false;
};

struct RunCounters {
  std::uint64_t samples = 0;
  std::uint64_t dropouts = 0;
  std::uint64_t local_records = 0;
  std::uint64_t txs = 0;
  std::uint64_t alerts = 0;
  std::uint64_t resolutions = 0;
  std::uint64_t images = 0;
  std::uint64_t reports = 0;
  std::uint64_t messenger_deliveries = 0;
  std::uint64_t crashes = 0;
  std::uint64_t recovered_records_dropped = 0;

  bool operator==(const RunCounters&) const = default;
};

struct SimulationResult {
  std::vector<Reading> trace;
  std::vector<MonitorEvent> events;
  Ledger ledger{"owner"};
  std::vector<DailyReport> reports;
  std::vector<DeliveryRecord> deliveries;
  RunCounters counters;
  VerificationReport chain;
};

// Runs the whole pipeline on the virtual clock: sensor trace -> engine ->
// local store/outbox -> ledger, alert sinks and daily reports. Writes
// trace.csv, events.log, ledger.bin, store.bin, reports/, messenger.jsonl and
// manifest.json when out_dir is set. Deterministic in (config, seed).
SimulationResult simulate(const SimulationConfig& config);

std::string manifest_json(const SimulationConfig& config, const SimulationResult& result);

}  // namespace pizzamon
