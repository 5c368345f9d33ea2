// pizzamon: run fridge-monitor scenarios and audit their artifacts.
//
// Exit codes: 0 ok, 1 internal error, 2 usage or I/O error, 3 verification
// failure.
//
// Optional messenger relay: set MONITOR_BOT_TOKEN and MONITOR_CHAT_ID to
// forward the messenger capture of a `simulate` run to a Telegram chat.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pizzamon/config.hpp"
#include "pizzamon/energy.hpp"
#include "pizzamon/error.hpp"
#include "pizzamon/events.hpp"
#include "pizzamon/ledger.hpp"
#include "pizzamon/report.hpp"
#include "pizzamon/scenario.hpp"
#include "pizzamon/simulation.hpp"
#include "telegram.hpp"

namespace fs = std::filesystem;
using namespace pizzamon;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitUsage = 2;
constexpr int kExitVerify = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig:
    case ErrorCode::kInvalidScenario:
    case ErrorCode::kParseError:
    case ErrorCode::kNonMonotonicTimestamp:
    case ErrorCode::kIo:
      return kExitUsage;
    case ErrorCode::kCorruptStore:
      return kExitVerify;
    default:
      return kExitInternal;
  }
}

FaultSpec parse_fault(const std::string& text, Timestamp start) {
  // kind:start:end, offsets relative to the run start.
  const auto a = text.find(':');
  const auto b = a == std::string::npos ? std::string::npos : text.find(':', a + 1);
  if (b == std::string::npos) throw UsageError("--fault expects kind:start:end, got '" + text + "'");
  FaultSpec f;
  try {
    f.kind = fault_kind_from_string(text.substr(0, a));
  } catch (const Error&) {
    throw UsageError("--fault: unknown kind '" + text.substr(0, a) + "'");
  }
  f.start = start + parse_duration(text.substr(a + 1, b - a - 1));
  f.end = start + parse_duration(text.substr(b + 1));
  if (f.end <= f.start) throw UsageError("--fault: end must be after start in '" + text + "'");
  return f;
}

struct SimulateArgs {
  std::string scenario = "normal";
  std::string duration = "24h";
  std::uint64_t seed = 0;
  std::string config;
  std::string out = "run";
  std::optional<double> realtime;
  std::vector<std::string> faults;
  std::string trace;
  std::string device;
  std::string start;
};

int cmd_simulate(const SimulateArgs& a) {
  SimulationConfig cfg;
  if (!a.config.empty()) {
    const auto file = KeyValueFile::load(a.config);
    cfg.thresholds = thresholds_from(file);
    cfg.power = profile_from(file);
    cfg.duty = policy_from(file);
    cfg.gas = gas_schedule_from(file);
  }
  cfg.horizon = parse_duration(a.duration);
  Timestamp start = kDefaultEpoch;
  if (!a.start.empty()) start = a.start.size() == 10 ? parse_date(a.start).begin() : parse_iso8601(a.start);

  ScenarioKind kind = a.trace.empty() ? scenario_kind_from_string(a.scenario) : ScenarioKind::kReplay;
  if (kind == ScenarioKind::kReplay) {
    if (a.trace.empty()) throw UsageError("--scenario replay requires --trace");
    cfg.replay = replay_trace_file(a.trace);
    if (!cfg.replay.empty() && a.start.empty()) start = cfg.replay.front().at;
  }
  cfg.scenario = make_scenario(kind, a.seed, cfg.horizon, start);
  if (!a.device.empty()) {
    cfg.scenario.device_id = a.device;
  } else if (!cfg.replay.empty()) {
    cfg.scenario.device_id = cfg.replay.front().device_id;
  }
  for (const auto& f : a.faults) cfg.scenario.faults.push_back(parse_fault(f, start));
  cfg.out_dir = a.out;
  if (a.realtime) {
    cfg.realtime_factor = *a.realtime;
    cfg.sync_store = true;
  }

  const auto result = simulate(cfg);
  const auto& c = result.counters;
  std::printf("samples=%llu local_records=%llu txs=%llu alerts=%llu resolutions=%llu reports=%llu\n",
              static_cast<unsigned long long>(c.samples), static_cast<unsigned long long>(c.local_records),
              static_cast<unsigned long long>(c.txs), static_cast<unsigned long long>(c.alerts),
              static_cast<unsigned long long>(c.resolutions), static_cast<unsigned long long>(c.reports));
  std::printf("artifacts in %s\n", a.out.c_str());

  std::string diagnostic;
  const int relayed = cli::relay_capture((fs::path(a.out) / "messenger.jsonl").string(), diagnostic);
  if (relayed >= 0) std::printf("relayed %d message(s) to telegram\n", relayed);
  if (!diagnostic.empty()) std::fprintf(stderr, "warning: %s\n", diagnostic.c_str());

  if (!result.chain.ok) {
    std::fprintf(stderr, "internal: ledger chain broken at %s\n", result.chain.reason.c_str());
    return kExitInternal;
  }
  return kExitOk;
}

int cmd_verify(const std::string& ledger_path, const std::string& report_path_arg) {
  const std::string bytes = read_file(ledger_path);
  std::string csv;
  if (!report_path_arg.empty()) csv = read_file(report_path_arg);

  const auto chain = verify_ledger_bytes(as_bytes(bytes));
  if (!chain.ok) {
    std::printf("ledger: FAILED at index %llu (%s)\n",
                static_cast<unsigned long long>(chain.first_bad_index.value_or(0)), chain.reason.c_str());
    return kExitVerify;
  }
  std::printf("ledger: ok (%llu entries)\n", static_cast<unsigned long long>(chain.entries_checked));
  if (report_path_arg.empty()) return kExitOk;

  const auto id = identify_report(report_path_arg, csv);
  if (!id) {
    std::printf("report: NoAnchor (cannot identify device/day)\n");
    return kExitVerify;
  }
  const auto ledger = Ledger::from_bytes(as_bytes(bytes), "owner");
  const auto verdict = verify_report(csv, ledger, id->device_id, id->day);
  std::printf("report: %s (%s %s)\n", to_string(verdict), id->device_id.c_str(),
              to_date_string(id->day).c_str());
  return verdict == ReportVerdict::kAuthentic ? kExitOk : kExitVerify;
}

void write_csv(const std::string& path, const std::string& csv) {
  if (path.empty()) return;
  if (path == "-") {
    std::fputs(csv.c_str(), stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << csv)) throw UsageError("cannot write " + path);
}

int cmd_cost(const std::string& ledger_path, const std::string& day_arg, const std::string& config,
             const std::string& csv_path) {
  const std::string bytes = read_file(ledger_path);
  const auto ledger = Ledger::from_bytes(as_bytes(bytes), "owner");
  const GasSchedule gas = config.empty() ? GasSchedule::calibrated() : gas_schedule_from(KeyValueFile::load(config));

  std::vector<CostTally> tallies;
  if (day_arg.empty()) {
    tallies = cost_by_day(ledger.entries(), gas);
  } else {
    tallies.push_back(cost_report(ledger.entries(), parse_date(day_arg), gas));
  }

  std::ostringstream csv;
  csv << "day,txs,gas,usd\n";
  char line[128];
  for (const auto& t : tallies) {
    std::printf("%s  %llu tx  $%.4f\n", to_date_string(t.day).c_str(),
                static_cast<unsigned long long>(t.total_txs), t.usd);
    std::snprintf(line, sizeof line, "%s,%llu,%llu,%.6f\n", to_date_string(t.day).c_str(),
                  static_cast<unsigned long long>(t.total_txs), static_cast<unsigned long long>(t.gas), t.usd);
    csv << line;
  }
  if (tallies.size() > 1 || day_arg.empty()) {
    std::printf("annual  $%.2f\n", annualized_usd(tallies));
  }
  write_csv(csv_path, csv.str());
  return kExitOk;
}

int cmd_energy(const std::string& events_path, const std::string& profile_path, const std::string& csv_path) {
  const auto events = parse_event_log(read_file(events_path));
  PowerProfile power;
  DutyPolicy duty;
  if (!profile_path.empty()) {
    const auto file = KeyValueFile::load(profile_path);
    power = profile_from(file);
    duty = policy_from(file);
  }
  if (events.empty()) {
    std::printf("no events\n");
    return kExitOk;
  }
  const Timestamp begin = events.front().at;
  Timestamp end = events.back().at;
  if (end <= begin) end = begin + 1;
  const auto rows = saving_ratio(power, duty, events, begin, end);
  std::fputs(savings_table(rows).c_str(), stdout);
  write_csv(csv_path, savings_csv(rows));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pizzamon: fridge temperature monitor with a tamper-evident ledger"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate_cmd = app.add_subcommand("simulate", "Run a scenario and write artifacts");
  simulate_cmd->add_option("--scenario", sim.scenario, "normal | breach | peak | replay")->capture_default_str();
  simulate_cmd->add_option("--duration", sim.duration, "Run length, s/m/h/d suffixes")->capture_default_str();
  simulate_cmd->add_option("--seed", sim.seed, "Deterministic seed")->capture_default_str();
  simulate_cmd->add_option("--config", sim.config, "key = value threshold/energy/gas config");
  simulate_cmd->add_option("--out", sim.out, "Output directory")->capture_default_str();
  simulate_cmd->add_option("--realtime", sim.realtime,
                           "Pace the virtual clock: simulated seconds per wall second (default 1)")
      ->expected(0, 1)
      ->default_str("1");
  simulate_cmd->add_option("--fault", sim.faults, "kind:start:end, offsets from the run start");
  simulate_cmd->add_option("--trace", sim.trace, "Replay a recorded trace CSV");
  simulate_cmd->add_option("--device", sim.device, "Device id");
  simulate_cmd->add_option("--start", sim.start, "Run start, YYYY-MM-DD or ISO-8601 UTC");

  std::string ledger_path, report_arg, day_arg, cost_config, events_path, profile_path, csv_path;
  auto* verify_cmd = app.add_subcommand("verify", "Check ledger integrity and report authenticity");
  verify_cmd->add_option("--ledger", ledger_path, "ledger.bin")->required();
  verify_cmd->add_option("--report", report_arg, "Daily report CSV");

  auto* cost_cmd = app.add_subcommand("cost", "Per-day transaction cost");
  cost_cmd->add_option("--ledger", ledger_path, "ledger.bin")->required();
  cost_cmd->add_option("--day", day_arg, "YYYY-MM-DD");
  cost_cmd->add_option("--config", cost_config, "Config with gas.* keys");
  cost_cmd->add_option("--csv", csv_path, "Write CSV here ('-' for stdout)");

  auto* energy_cmd = app.add_subcommand("energy", "Duty-cycled energy vs always-on");
  energy_cmd->add_option("--events", events_path, "events.log")->required();
  energy_cmd->add_option("--profile", profile_path, "Config with energy.* keys");
  energy_cmd->add_option("--csv", csv_path, "Write CSV here ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*simulate_cmd) return cmd_simulate(sim);
    if (*verify_cmd) return cmd_verify(ledger_path, report_arg);
    if (*cost_cmd) return cmd_cost(ledger_path, day_arg, cost_config, csv_path);
    if (*energy_cmd) return cmd_energy(events_path, profile_path, csv_path);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s: %s\n", to_string(e.code()), e.what());
    return exit_code_for(e.code());
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return kExitInternal;
  }
  return kExitUsage;
}
