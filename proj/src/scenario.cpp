#include "pizzamon/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "pizzamon/error.hpp"
#include "pizzamon/rng.hpp"

namespace pizzamon {
namespace {

void check_window(Timestamp start, Timestamp end, Timestamp lo, Timestamp hi, const char* what) {
  if (!(start < end)) {
    throw Error(ErrorCode::kInvalidScenario, std::string(what) + ": start must be before end");
  }
  if (start < lo || end > hi) {
    throw Error(ErrorCode::kInvalidScenario, std::string(what) + " exceeds the simulated horizon");
  }
}

template <typename T>
bool parse_field(std::string_view s, T& out) {
  if (s.empty()) return false;
  const char* b = s.data();
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, out);
  return ec == std::errc{} && p == e;
}

}  // namespace

const char* to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::kNormalDay: return "normal";
    case ScenarioKind::kBreachDay: return "breach";
    case ScenarioKind::kPeakHours: return "peak";
    case ScenarioKind::kReplay: return "replay";
  }
  return "?";
}

ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "normal") return ScenarioKind::kNormalDay;
  if (s == "breach") return ScenarioKind::kBreachDay;
  if (s == "peak") return ScenarioKind::kPeakHours;
  if (s == "replay") return ScenarioKind::kReplay;
  throw Error(ErrorCode::kInvalidConfig, "unknown scenario '" + s + "' (normal|breach|peak|replay)");
}

const char* to_string(FaultKind k) {
  switch (k) {
    case FaultKind::kSensorDropout: return "sensor-dropout";
    case FaultKind::kProcessCrash: return "process-crash";
    case FaultKind::kLedgerOutage: return "ledger-outage";
  }
  return "?";
}

FaultKind fault_kind_from_string(const std::string& s) {
  if (s == "sensor-dropout") return FaultKind::kSensorDropout;
  if (s == "process-crash") return FaultKind::kProcessCrash;
  if (s == "ledger-outage") return FaultKind::kLedgerOutage;
  throw Error(ErrorCode::kInvalidConfig,
              "unknown fault '" + s + "' (sensor-dropout|process-crash|ledger-outage)");
}

ScenarioSpec make_scenario(ScenarioKind kind, std::uint64_t seed, std::int64_t horizon,
                           Timestamp start) {
  ScenarioSpec spec;
  spec.kind = kind;
  spec.seed = seed;
  spec.start = start;
  const Timestamp end = start + std::max<std::int64_t>(horizon, 0);

  auto clipped = [&](Timestamp b, Timestamp e) -> std::optional<std::pair<Timestamp, Timestamp>> {
    b = std::max(b, start);
    e = std::min(e, end);
    if (!(b < e)) return std::nullopt;
    return std::make_pair(b, e);
  };

  if (kind == ScenarioKind::kBreachDay) {
    if (auto w = clipped(start + 10 * 3600, start + 11 * 3600 + 1800)) {
      spec.breach_window = BreachWindow{w->first, w->second, 85};
    }
  } else if (kind == ScenarioKind::kPeakHours) {
    // A 3-minute door opening every 15 minutes through lunch and dinner service.
    const std::pair<int, int> services[] = {{12, 14}, {19, 22}};
    for (auto [from_h, to_h] : services) {
      for (std::int64_t t = from_h * 3600; t < to_h * 3600; t += 900) {
        if (auto w = clipped(start + t, start + t + 180)) {
          spec.spike_windows.push_back({w->first, w->second, 12, 60});
        }
      }
    }
  }
  return spec;
}

bool in_fault(const std::vector<FaultSpec>& faults, FaultKind kind, Timestamp t) {
  return std::any_of(faults.begin(), faults.end(),
                     [&](const FaultSpec& f) { return f.kind == kind && f.covers(t); });
}

std::vector<Reading> generate_trace(const ScenarioSpec& spec, const Thresholds& thresholds,
                                    std::int64_t horizon) {
  if (spec.kind == ScenarioKind::kReplay) {
    throw Error(ErrorCode::kInvalidScenario, "replay scenarios are read with replay_trace");
  }
  if (horizon < 0) throw Error(ErrorCode::kInvalidScenario, "negative horizon");
  if (thresholds.sample_period <= 0) throw Error(ErrorCode::kInvalidScenario, "sample_period must be > 0");
  if (spec.device_id.empty() || spec.device_id.find_first_of(",\n\r") != std::string::npos) {
    throw Error(ErrorCode::kInvalidScenario, "device_id must be non-empty without commas or newlines");
  }
  const Timestamp end = spec.start + horizon;
  for (const auto& w : spec.spike_windows) check_window(w.start, w.end, spec.start, end, "spike window");
  if (spec.breach_window) {
    check_window(spec.breach_window->start, spec.breach_window->end, spec.start, end, "breach window");
  }
  for (const auto& f : spec.faults) check_window(f.start, f.end, spec.start, end, "fault window");

  const auto& n = spec.noise;
  if (spec.kind == ScenarioKind::kNormalDay && spec.spike_windows.empty() && !spec.breach_window) {
    const bool temp_ok = spec.base_temp_decic - std::int64_t{n.temp_bound_decic} > thresholds.temp_min_decic &&
                         spec.base_temp_decic + std::int64_t{n.temp_bound_decic} < thresholds.temp_max_decic;
    const bool hum_ok = spec.base_hum_decip - std::int64_t{n.hum_bound_decip} > std::int64_t{thresholds.hum_min_decip} &&
                        spec.base_hum_decip + std::int64_t{n.hum_bound_decip} < std::int64_t{thresholds.hum_max_decip};
    if (!temp_ok || !hum_ok) {
      throw Error(ErrorCode::kInvalidScenario, "normal day base +/- noise bound leaves the threshold band");
    }
  }

  Rng rng(spec.seed);
  std::vector<Reading> out;
  out.reserve(static_cast<std::size_t>(horizon / thresholds.sample_period + 1));
  for (Timestamp t = spec.start; t < end; t = t + thresholds.sample_period) {
    // Noise is drawn every tick, even under dropout, so a fault window never
    // shifts the values of the samples around it.
    const std::int64_t temp_noise = rng.between(-std::int64_t{n.temp_bound_decic}, n.temp_bound_decic);
    const std::int64_t hum_noise = rng.between(-std::int64_t{n.hum_bound_decip}, n.hum_bound_decip);
    if (in_fault(spec.faults, FaultKind::kSensorDropout, t)) continue;

    std::int64_t temp = spec.base_temp_decic;
    std::int64_t hum = spec.base_hum_decip;
    for (const auto& w : spec.spike_windows) {
      if (w.start <= t && t < w.end) {
        temp += w.temp_delta_decic;
        hum += w.hum_delta_decip;
      }
    }
    if (spec.breach_window && spec.breach_window->start <= t && t < spec.breach_window->end) {
      temp = spec.breach_window->forced_temp_decic;
    }
    temp = std::clamp<std::int64_t>(temp + temp_noise, kTempMinDecic, kTempMaxDecic);
    hum = std::clamp<std::int64_t>(hum + hum_noise, 0, kHumMaxDecip);
    out.push_back(Reading{spec.device_id, t, static_cast<std::int16_t>(temp),
                          static_cast<std::uint16_t>(hum)});
  }
  return out;
}

void write_trace(std::ostream& out, const std::vector<Reading>& readings) {
  out << kTraceHeader << '\n';
  for (const auto& r : readings) {
    out << r.at.unix_seconds << ',' << r.device_id << ',' << r.temp_decicelsius << ','
        << r.humidity_decipercent << '\n';
  }
}

std::string write_trace(const std::vector<Reading>& readings) {
  std::ostringstream o;
  write_trace(o, readings);
  return o.str();
}

std::vector<Reading> replay_trace(std::istream& in) {
  std::vector<Reading> out;
  std::string line;
  std::size_t row = 0;
  auto fail = [&](const std::string& why) {
    throw Error(ErrorCode::kParseError, "trace row " + std::to_string(row) + ": " + why, row);
  };
  if (!std::getline(in, line)) {
    row = 1;
    fail("missing header");
  }
  row = 1;
  if (line != kTraceHeader) fail("expected header '" + std::string(kTraceHeader) + "'");
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) {
      if (in.peek() == std::char_traits<char>::eof()) break;
      fail("empty row");
    }
    std::vector<std::string_view> fields;
    std::string_view v(line);
    for (std::size_t pos = 0;;) {
      const auto comma = v.find(',', pos);
      fields.push_back(v.substr(pos, comma == v.npos ? v.npos : comma - pos));
      if (comma == v.npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 4) fail("expected 4 fields");
    std::int64_t ts = 0;
    int temp = 0;
    unsigned hum = 0;
    if (!parse_field(fields[0], ts)) fail("bad timestamp");
    if (fields[1].empty()) fail("empty device_id");
    if (!parse_field(fields[2], temp) || temp < kTempMinDecic || temp > kTempMaxDecic) fail("bad temp_decic");
    if (!parse_field(fields[3], hum) || hum > kHumMaxDecip) fail("bad hum_decip");
    Reading r{std::string(fields[1]), Timestamp{ts}, static_cast<std::int16_t>(temp),
              static_cast<std::uint16_t>(hum)};
    if (!out.empty() && r.at < out.back().at) {
      throw Error(ErrorCode::kNonMonotonicTimestamp,
                  "trace row " + std::to_string(row) + ": timestamp earlier than previous row", row);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Reading> replay_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open trace " + path);
  return replay_trace(in);
}

}  // namespace pizzamon
