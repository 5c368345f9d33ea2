// Python bindings: whole-run entry points mirroring the CLI subcommands.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "pizzamon/digest.hpp"
#include "pizzamon/error.hpp"
#include "pizzamon/events.hpp"
#include "pizzamon/simulation.hpp"

namespace py = pybind11;
using namespace pizzamon;

namespace {

using Offset = std::variant<std::int64_t, std::string>;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::span<const std::uint8_t> as_bytes(const std::string& s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

std::int64_t seconds(const Offset& o) {
  if (const auto* s = std::get_if<std::int64_t>(&o)) return *s;
  return parse_duration(std::get<std::string>(o));
}

py::dict counters_dict(const RunCounters& c) {
  py::dict d;
  d["samples"] = c.samples;
  d["dropouts"] = c.dropouts;
  d["local_records"] = c.local_records;
  d["txs"] = c.txs;
  d["alerts"] = c.alerts;
  d["resolutions"] = c.resolutions;
  d["images"] = c.images;
  d["reports"] = c.reports;
  d["messenger_deliveries"] = c.messenger_deliveries;
  d["crashes"] = c.crashes;
  d["recovered_records_dropped"] = c.recovered_records_dropped;
  return d;
}

py::dict chain_dict(const VerificationReport& v) {
  py::dict d;
  d["ok"] = v.ok;
  d["first_bad_index"] = v.first_bad_index;
  d["reason"] = v.reason;
  d["entries_checked"] = v.entries_checked;
  return d;
}

py::dict run(const std::string& scenario, const Offset& duration, std::uint64_t seed,
             const std::optional<std::string>& out_dir,
             const std::vector<std::tuple<std::string, Offset, Offset>>& faults,
             const std::optional<std::string>& config, const std::optional<std::string>& device,
             const std::optional<std::string>& trace) {
  SimulationConfig cfg;
  if (config) {
    const auto file = KeyValueFile::load(*config);
    cfg.thresholds = thresholds_from(file);
    cfg.power = profile_from(file);
    cfg.duty = policy_from(file);
    cfg.gas = gas_schedule_from(file);
  }
  cfg.horizon = seconds(duration);
  Timestamp start = kDefaultEpoch;
  const ScenarioKind kind = trace ? ScenarioKind::kReplay : scenario_kind_from_string(scenario);
  if (kind == ScenarioKind::kReplay) {
    if (!trace) throw Error(ErrorCode::kInvalidConfig, "replay scenario requires a trace");
    cfg.replay = replay_trace_file(*trace);
    if (!cfg.replay.empty()) start = cfg.replay.front().at;
  }
  cfg.scenario = make_scenario(kind, seed, cfg.horizon, start);
  if (device) {
    cfg.scenario.device_id = *device;
  } else if (!cfg.replay.empty()) {
    cfg.scenario.device_id = cfg.replay.front().device_id;
  }
  for (const auto& [k, a, b] : faults) {
    cfg.scenario.faults.push_back({fault_kind_from_string(k), start + seconds(a), start + seconds(b)});
  }
  if (out_dir) cfg.out_dir = *out_dir;

  SimulationResult result;
  {
    py::gil_scoped_release release;
    result = simulate(cfg);
  }
  py::list reports;
  for (const auto& r : result.reports) {
    py::dict d;
    d["device_id"] = r.device_id;
    d["day"] = to_date_string(r.day);
    d["rows"] = r.row_count;
    d["digest"] = to_hex(r.digest);
    reports.append(d);
  }
  py::dict out;
  out["counters"] = counters_dict(result.counters);
  out["chain"] = chain_dict(result.chain);
  out["ledger_entries"] = result.ledger.size();
  out["reports"] = reports;
  return out;
}

py::dict verify_ledger(const std::string& path) { return chain_dict(verify_ledger_bytes(as_bytes(read_file(path)))); }

std::string verify_report_file(const std::string& ledger_path, const std::string& report_file) {
  const std::string bytes = read_file(ledger_path);
  const std::string csv = read_file(report_file);
  const auto chain = verify_ledger_bytes(as_bytes(bytes));
  if (!chain.ok) throw Error(ErrorCode::kCorruptStore, "ledger fails verification: " + chain.reason);
  const auto id = identify_report(report_file, csv);
  if (!id) return to_string(ReportVerdict::kNoAnchor);
  return to_string(verify_report(csv, Ledger::from_bytes(as_bytes(bytes), "owner"), id->device_id, id->day));
}

py::dict cost(const std::string& ledger_path, const std::optional<std::string>& config) {
  const auto ledger = Ledger::from_bytes(as_bytes(read_file(ledger_path)), "owner");
  const GasSchedule gas = config ? gas_schedule_from(KeyValueFile::load(*config)) : GasSchedule::calibrated();
  const auto tallies = cost_by_day(ledger.entries(), gas);
  py::list days;
  for (const auto& t : tallies) {
    py::dict d;
    d["day"] = to_date_string(t.day);
    d["txs"] = t.total_txs;
    d["gas"] = t.gas;
    d["usd"] = t.usd;
    days.append(d);
  }
  py::dict out;
  out["days"] = days;
  out["annual_usd"] = annualized_usd(tallies);
  return out;
}

py::list energy_savings(const std::string& events_path, const std::optional<std::string>& profile) {
  const auto events = parse_event_log(read_file(events_path));
  PowerProfile power;
  DutyPolicy duty;
  if (profile) {
    const auto file = KeyValueFile::load(*profile);
    power = profile_from(file);
    duty = policy_from(file);
  }
  py::list rows;
  if (events.empty()) return rows;
  const Timestamp begin = events.front().at;
  const Timestamp end = std::max(events.back().at, begin + 1);
  for (const auto& r : saving_ratio(power, duty, events, begin, end)) {
    py::dict d;
    d["component"] = to_string(r.component);
    d["baseline_j"] = r.baseline_j;
    d["duty_j"] = r.duty_j;
    d["saving"] = r.saving;
    rows.append(d);
  }
  return rows;
}

}  // namespace

PYBIND11_MODULE(_pizzamon, m) {
  m.doc() = "Pizza fridge monitoring simulator";

  // Leaked on purpose: the translator may run during interpreter teardown.
  static py::handle error_type = py::exception<Error>(m, "PizzamonError", PyExc_ValueError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = error_type(e.what());
      inst.attr("code") = to_string(e.code());
      inst.attr("row") = e.row();
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  m.def("parse_duration", &parse_duration, py::arg("text"), "Seconds in a duration such as '90s', '20m', '24h', '365d'.");
  m.def("simulate", &run, py::arg("scenario") = "normal", py::arg("duration") = Offset{std::string("24h")},
        py::arg("seed") = 0, py::arg("out_dir") = std::nullopt,
        py::arg("faults") = std::vector<std::tuple<std::string, Offset, Offset>>{}, py::arg("config") = std::nullopt,
        py::arg("device") = std::nullopt, py::arg("trace") = std::nullopt,
        "Run the pipeline on the virtual clock. Fault offsets are relative to the run start.");
  m.def("verify_ledger", &verify_ledger, py::arg("path"));
  m.def("verify_report", &verify_report_file, py::arg("ledger"), py::arg("report"),
        "Authentic, DigestMismatch or NoAnchor.");
  m.def("cost", &cost, py::arg("ledger"), py::arg("config") = std::nullopt);
  m.def("energy_savings", &energy_savings, py::arg("events"), py::arg("profile") = std::nullopt);
}
