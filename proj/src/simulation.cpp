#include "pizzamon/simulation.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "pizzamon/error.hpp"
#include "pizzamon/store.hpp"

namespace fs = std::filesystem;

namespace pizzamon {
namespace {

void write_file(const fs::path& path, std::string_view bytes) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

fs::path temp_store_path() {
  std::random_device rd;
  const auto name = "pizzamon-store-" + std::to_string(rd()) + "-" + std::to_string(rd()) + ".bin";
  return fs::temp_directory_path() / name;
}

// Everything the run owns besides the engine state. Grouped so a simulated
// process crash can drop the store and in-memory alert queue in one place.
class Pipeline {
 public:
  Pipeline(const SimulationConfig& cfg, SimulationResult& result, fs::path store_path,
           std::ostream* messenger_capture)
      : cfg_(cfg),
        result_(result),
        store_path_(std::move(store_path)),
        engine_(cfg.scenario.device_id, cfg.thresholds, cfg.scenario.seed),
        dispatcher_(LatencyModel{cfg.scenario.seed ^ 0xA1E27ull, 2000, 4000}),
        messenger_(std::make_shared<CaptureMessenger>(cfg.chat_id, messenger_capture)) {
    dispatcher_.add_sink(std::make_shared<BuzzerSink>());
    dispatcher_.add_sink(std::make_shared<DisplaySink>());
    dispatcher_.add_sink(messenger_);
  }

  void start() {
    fs::remove(store_path_);
    open_store();
  }

  void crash() {
    store_.reset();
    ++result_.counters.crashes;
  }

  void restart() {
    open_store();
    if (auto cp = store_->last_checkpoint(engine_.device_id())) state_ = decode_state(*cp);
  }

  bool up() const { return store_.has_value(); }

  void tick(Timestamp now, const std::optional<Reading>& reading) {
    auto res = engine_.step(state_, reading, now);
    state_ = std::move(res.state);
    if (!reading) ++result_.counters.dropouts;
    handle(res.events, now);
    service(now);
  }

  void finish(Timestamp end) {
    if (!up()) restart();
    handle(engine_.finish(state_, end), end);
    service(end);
    // Outages are finite, so the outbox always empties.
    Timestamp t = end;
    const Timestamp limit = end + 400 * kSecondsPerDay;
    while (store_->pending_count() > 0 || dispatcher_.queued() > 0) {
      t = t + cfg_.thresholds.sample_period;
      if (t > limit) throw std::logic_error("outbox failed to drain");
      service(t);
    }
  }

  const LocalStore& store() const { return *store_; }

 private:
  void open_store() {
    auto [store, report] = LocalStore::recover(store_path_.string());
    store.set_sync(cfg_.sync_store);
    result_.counters.recovered_records_dropped += report.dropped_records;
    store_.emplace(std::move(store));
  }

  void service(Timestamp now) {
    drain(*store_, result_.ledger, now, cfg_.writer_key);
    for (auto& r : dispatcher_.pump(now)) record_delivery(r);
  }

  void record_delivery(const DeliveryRecord& r) {
    if (r.sink == SinkKind::kMessenger) ++result_.counters.messenger_deliveries;
    result_.deliveries.push_back(r);
  }

  void dispatch(const AlertMessage& m, Timestamp now) {
    for (auto& r : dispatcher_.dispatch(m, now)) record_delivery(r);
  }

  void handle(const std::vector<MonitorEvent>& events, Timestamp now) {
    const std::string& device = engine_.device_id();
    bool durable_change = false;
    for (const auto& e : events) {
      result_.events.push_back(e);
      switch (e.kind) {
        case EventKind::kSampleTaken:
          ++result_.counters.samples;
          continue;
        case EventKind::kLocalLogWritten:
          store_->append_local(device, std::get<LocalRecord>(e.payload));
          ++result_.counters.local_records;
          break;
        case EventKind::kBreachStarted:
          break;
        case EventKind::kCriticalEscalated: {
          const auto& info = std::get<EpisodeInfo>(e.payload);
          store_->enqueue({EntryKind::kAlert, device, 0, e.at,
                           encode(AlertPayload{info.episode_id, info.since, info.reading.temp_decicelsius,
                                               info.reading.humidity_decipercent})},
                          now);
          store_->append_event_row(device, {e.at, info.reading, MonitorMode::kCritical, RowEvent::kAlert});
          ++result_.counters.alerts;
          break;
        }
        case EventKind::kImageCaptured:
          ++result_.counters.images;
          break;
        case EventKind::kAlertDispatched: {
          MonitorEvent critical = e;
          critical.kind = EventKind::kCriticalEscalated;
          dispatch(render_alert(critical), now);
          break;
        }
        case EventKind::kBreachResolved: {
          const auto& info = std::get<ResolutionInfo>(e.payload);
          if (!info.reached_critical) break;
          store_->enqueue({EntryKind::kResolution, device, 0, e.at,
                           encode(ResolutionPayload{info.episode_id, info.since,
                                                    static_cast<std::uint32_t>(info.duration_s),
                                                    info.reading.temp_decicelsius,
                                                    info.reading.humidity_decipercent})},
                          now);
          store_->append_event_row(device, {e.at, info.reading, MonitorMode::kNormal, RowEvent::kResolved});
          ++result_.counters.resolutions;
          dispatch(render_alert(e), now);
          break;
        }
        case EventKind::kBatchAnchored: {
          const auto& w = std::get<AnchorWindow>(e.payload);
          const auto records = store_->local_records(device, w.begin, w.end);
          const std::size_t limit = result_.ledger.batch_limit();
          for (std::size_t i = 0; i < records.size(); i += limit) {
            BatchPayload batch;
            for (std::size_t j = i; j < std::min(records.size(), i + limit); ++j) {
              batch.readings.push_back(records[j].reading);
            }
            store_->enqueue({EntryKind::kReadingBatch, device, 0, e.at, encode(batch)}, now);
          }
          break;
        }
        case EventKind::kDailyReportAnchored: {
          const Day day = std::get<ReportDay>(e.payload).day;
          auto report = build_report(*store_, device, day);
          if (!cfg_.out_dir.empty()) write_file(report_path(cfg_.out_dir, device, day), report.csv);
          store_->enqueue(report_anchor_request(report, e.at), now);
          const std::string notice = "REPORT|dev=" + device + "|day=" + to_date_string(day) +
                                     "|rows=" + std::to_string(report.row_count) +
                                     "|sha256=" + to_hex(report.digest);
          for (auto& r : dispatcher_.dispatch_to(make_notice(device, now, notice), now, SinkKind::kMessenger)) {
            record_delivery(r);
          }
          ++result_.counters.reports;
          result_.reports.push_back(std::move(report));
          store_->compact(Day{day.days_since_epoch + 1});
          break;
        }
      }
      durable_change = true;
    }
    if (durable_change) store_->checkpoint(device, encode_state(state_));
  }

  const SimulationConfig& cfg_;
  SimulationResult& result_;
  fs::path store_path_;
  MonitorEngine engine_;
  MonitorState state_;
  std::optional<LocalStore> store_;
  AlertDispatcher dispatcher_;
  std::shared_ptr<CaptureMessenger> messenger_;
};

}  // namespace

GasSchedule gas_schedule_from(const KeyValueFile& file) {
  double daily = 0.0107;
  std::int64_t txs = 12, per_tx = 50000;
  auto get = [&](const char* key, auto& out) {
    auto it = file.entries.find(key);
    if (it == file.entries.end()) return;
    try {
      std::size_t used = 0;
      if constexpr (std::is_same_v<std::decay_t<decltype(out)>, double>) {
        out = std::stod(it->second.value, &used);
      } else {
        out = std::stoll(it->second.value, &used);
      }
      if (used == it->second.value.size() && out > 0) return;
    } catch (const std::exception&) {
    }
    throw Error(ErrorCode::kInvalidConfig,
                "line " + std::to_string(it->second.line) + ": " + key + ": expected a positive number");
  };
  get("gas.daily_usd", daily);
  get("gas.txs_per_day", txs);
  get("gas.per_tx", per_tx);
  return GasSchedule::calibrated(daily, static_cast<std::uint64_t>(txs), static_cast<std::uint64_t>(per_tx));
}

SimulationResult simulate(const SimulationConfig& cfg) {
  validate(cfg.thresholds);
  validate(cfg.power);
  validate(cfg.duty, cfg.thresholds.sample_period);
  if (cfg.horizon < 0) throw Error(ErrorCode::kInvalidScenario, "negative duration");

  SimulationResult result;
  result.ledger = Ledger(cfg.owner_key, {cfg.writer_key});
  const ScenarioSpec& spec = cfg.scenario;
  if (spec.kind == ScenarioKind::kReplay) {
    result.trace = cfg.replay;
  } else {
    result.trace = generate_trace(spec, cfg.thresholds, cfg.horizon);
  }
  for (const auto& f : spec.faults) {
    if (!(f.start < f.end)) throw Error(ErrorCode::kInvalidScenario, "fault window start must be before end");
    if (f.kind == FaultKind::kLedgerOutage) result.ledger.add_outage(f.start, f.end);
  }

  const Timestamp start = spec.start;
  const Timestamp end = start + cfg.horizon;
  std::map<Timestamp, const Reading*> by_tick;
  for (const auto& r : result.trace) {
    if (r.device_id != spec.device_id || r.at < start || r.at >= end ||
        (r.at - start) % cfg.thresholds.sample_period != 0) {
      throw Error(ErrorCode::kInvalidScenario, "trace row at " + std::to_string(r.at.unix_seconds) +
                                                   " is not on the sample grid of device " + spec.device_id);
    }
    if (!by_tick.emplace(r.at, &r).second) throw Error(ErrorCode::kInvalidScenario, "duplicate trace tick");
  }

  const fs::path out_dir = cfg.out_dir;
  if (!cfg.out_dir.empty()) fs::create_directories(out_dir);
  const fs::path store_path = cfg.out_dir.empty() ? temp_store_path() : out_dir / "store.bin";
  std::ostringstream messenger_capture;

  {
    Pipeline pipeline(cfg, result, store_path, &messenger_capture);
    pipeline.start();
    const auto tick_wall = std::chrono::duration<double>(
        cfg.realtime_factor > 0 ? static_cast<double>(cfg.thresholds.sample_period) / cfg.realtime_factor : 0.0);
    auto next_wall = std::chrono::steady_clock::now();
    for (Timestamp t = start; t < end; t = t + cfg.thresholds.sample_period) {
      if (in_fault(spec.faults, FaultKind::kProcessCrash, t)) {
        if (pipeline.up()) pipeline.crash();
        continue;
      }
      if (!pipeline.up()) pipeline.restart();
      std::optional<Reading> reading;
      if (auto it = by_tick.find(t); it != by_tick.end()) reading = *it->second;
      pipeline.tick(t, reading);
      if (cfg.realtime_factor > 0) {
        next_wall += std::chrono::duration_cast<std::chrono::steady_clock::duration>(tick_wall);
        std::this_thread::sleep_until(next_wall);
      }
    }
    pipeline.finish(end);
  }
  if (cfg.out_dir.empty()) fs::remove(store_path);

  result.counters.txs = result.ledger.size();
  result.chain = result.ledger.verify();

  if (!cfg.out_dir.empty()) {
    write_file(out_dir / "trace.csv", write_trace(result.trace));
    std::string events;
    for (const auto& e : result.events) events += to_json_line(e);
    write_file(out_dir / "events.log", events);
    result.ledger.save((out_dir / "ledger.bin").string());
    write_file(out_dir / "messenger.jsonl", messenger_capture.str());
    write_file(out_dir / "manifest.json", manifest_json(cfg, result));
  }
  return result;
}

std::string manifest_json(const SimulationConfig& cfg, const SimulationResult& r) {
  const auto& t = cfg.thresholds;
  const auto& s = cfg.scenario;
  nlohmann::ordered_json j;
  j["config"] = {
      {"temp_min_decic", t.temp_min_decic},       {"temp_max_decic", t.temp_max_decic},
      {"hum_min_decip", t.hum_min_decip},         {"hum_max_decip", t.hum_max_decip},
      {"hysteresis_decic", t.hysteresis_decic},   {"breach_escalation", t.breach_escalation},
      {"sample_period", t.sample_period},         {"normal_log_period", t.normal_log_period},
      {"critical_log_period", t.critical_log_period}, {"batch_anchor_period", t.batch_anchor_period},
      {"fee_per_gas_usd", cfg.gas.fee_per_gas_usd},
  };
  nlohmann::ordered_json faults = nlohmann::ordered_json::array();
  for (const auto& f : s.faults) {
    faults.push_back({{"kind", to_string(f.kind)}, {"start", f.start.unix_seconds}, {"end", f.end.unix_seconds}});
  }
  j["scenario"] = {
      {"kind", to_string(s.kind)},
      {"device_id", s.device_id},
      {"start", to_iso8601(s.start)},
      {"duration_s", cfg.horizon},
      {"base_temp_decic", s.base_temp_decic},
      {"base_hum_decip", s.base_hum_decip},
      {"noise_temp_bound_decic", s.noise.temp_bound_decic},
      {"noise_hum_bound_decip", s.noise.hum_bound_decip},
      {"spike_windows", s.spike_windows.size()},
      {"breach_window", s.breach_window ? nlohmann::ordered_json{{"start", s.breach_window->start.unix_seconds},
                                                                 {"end", s.breach_window->end.unix_seconds},
                                                                 {"forced_temp_decic", s.breach_window->forced_temp_decic}}
                                        : nlohmann::ordered_json(nullptr)},
      {"faults", faults},
  };
  j["seed"] = s.seed;
  j["layout"] = {{"trace", "trace.csv"},       {"events", "events.log"},       {"ledger", "ledger.bin"},
                 {"store", "store.bin"},       {"reports", "reports/"},        {"messenger", "messenger.jsonl"}};
  const auto& c = r.counters;
  j["counters"] = {{"samples", c.samples},
                   {"dropouts", c.dropouts},
                   {"local_records", c.local_records},
                   {"txs", c.txs},
                   {"alerts", c.alerts},
                   {"resolutions", c.resolutions},
                   {"images", c.images},
                   {"reports", c.reports},
                   {"messenger_deliveries", c.messenger_deliveries},
                   {"crashes", c.crashes}};
  j["chain_ok"] = r.chain.ok;
  return j.dump(2) + "\n";
}

}  // namespace pizzamon
