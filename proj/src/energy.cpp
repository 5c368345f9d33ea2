#include "pizzamon/energy.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

#include "pizzamon/error.hpp"

namespace pizzamon {
namespace {

using Interval = std::pair<std::int64_t, std::int64_t>;

// Total length of the union of intervals clipped to [lo, hi). Input sorted by start.
std::int64_t covered(const std::vector<Interval>& sorted, std::int64_t lo, std::int64_t hi) {
  std::int64_t total = 0;
  std::int64_t cur_b = 0, cur_e = 0;
  bool open = false;
  for (auto [b, e] : sorted) {
    b = std::max(b, lo);
    e = std::min(e, hi);
    if (b >= e) continue;
    if (open && b <= cur_e) {
      cur_e = std::max(cur_e, e);
      continue;
    }
    if (open) total += cur_e - cur_b;
    cur_b = b;
    cur_e = e;
    open = true;
  }
  if (open) total += cur_e - cur_b;
  return total;
}

void require_disjoint(const std::vector<Interval>& sorted, Component c) {
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].first < sorted[i - 1].second) {
      throw Error(ErrorCode::kInconsistentTimeline,
                  std::string(to_string(c)) + " activity overlaps at t=" + std::to_string(sorted[i].first));
    }
  }
}

double joules(double mw, std::int64_t seconds) { return mw * static_cast<double>(seconds) / 1000.0; }

double parse_double(const KeyValueFile::Entry& e, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(e.value, &used);
    if (used == e.value.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(e.line) + ": " + key + ": not a number");
}

}  // namespace

const char* to_string(Component c) {
  switch (c) {
    case Component::kController: return "controller";
    case Component::kSensor: return "sensor";
    case Component::kDisplay: return "display";
    case Component::kCamera: return "camera";
    case Component::kBuzzer: return "buzzer";
  }
  return "?";
}

const ComponentPower& PowerProfile::of(Component c) const {
  switch (c) {
    case Component::kController: return controller;
    case Component::kSensor: return sensor;
    case Component::kDisplay: return display;
    case Component::kCamera: return camera;
    case Component::kBuzzer: return buzzer;
  }
  return controller;
}

ComponentPower& PowerProfile::of(Component c) {
  return const_cast<ComponentPower&>(static_cast<const PowerProfile*>(this)->of(c));
}

void validate(const PowerProfile& p) {
  for (auto c : kComponents) {
    const auto& cp = p.of(c);
    if (cp.idle_mw < 0 || cp.active_mw < cp.idle_mw) {
      throw Error(ErrorCode::kInvalidConfig,
                  std::string("energy.") + to_string(c) + ": need active_mw >= idle_mw >= 0");
    }
  }
}

void validate(const DutyPolicy& p, std::int64_t sample_period) {
  if (p.sensor_active_s_per_sample < 0 || p.sensor_active_s_per_sample > sample_period) {
    throw Error(ErrorCode::kInvalidConfig, "energy.sensor_active_s_per_sample must be in [0, sample_period]");
  }
  if (p.dim_mw < 0 || p.display_hold_s < 0 || p.camera_active_s_per_capture < 0 ||
      p.buzzer_active_s_per_alert < 0 || p.controller_busy_s_per_event < 0) {
    throw Error(ErrorCode::kInvalidConfig, "energy policy durations and dim_mw must be >= 0");
  }
}

PowerProfile profile_from(const KeyValueFile& file, PowerProfile p) {
  for (auto c : kComponents) {
    const std::string prefix = std::string("energy.") + to_string(c) + ".";
    if (auto it = file.entries.find(prefix + "active_mw"); it != file.entries.end()) {
      p.of(c).active_mw = parse_double(it->second, it->first);
    }
    if (auto it = file.entries.find(prefix + "idle_mw"); it != file.entries.end()) {
      p.of(c).idle_mw = parse_double(it->second, it->first);
    }
  }
  validate(p);
  return p;
}

DutyPolicy policy_from(const KeyValueFile& file, DutyPolicy p) {
  auto seconds = [&](const char* key, std::int64_t& out) {
    if (auto it = file.entries.find(key); it != file.entries.end()) {
      try {
        out = parse_duration(it->second.value);
      } catch (const Error& e) {
        throw Error(ErrorCode::kInvalidConfig,
                    "line " + std::to_string(it->second.line) + ": " + key + ": " + e.what());
      }
    }
  };
  seconds("energy.sensor_active_s_per_sample", p.sensor_active_s_per_sample);
  seconds("energy.display_hold_s", p.display_hold_s);
  seconds("energy.camera_active_s_per_capture", p.camera_active_s_per_capture);
  seconds("energy.buzzer_active_s_per_alert", p.buzzer_active_s_per_alert);
  seconds("energy.controller_busy_s_per_event", p.controller_busy_s_per_event);
  if (auto it = file.entries.find("energy.display_dim"); it != file.entries.end()) {
    p.display_dim = parse_double(it->second, it->first) != 0.0;
  }
  if (auto it = file.entries.find("energy.dim_mw"); it != file.entries.end()) {
    p.dim_mw = parse_double(it->second, it->first);
  }
  return p;
}

double EnergyBreakdown::total() const {
  double t = 0.0;
  for (double j : joules) t += j;
  return t;
}

EnergyBreakdown energy_for_window(std::span<const MonitorEvent> events, Timestamp begin, Timestamp end,
                                  const PowerProfile& profile, const DutyPolicy& policy) {
  EnergyBreakdown out;
  const std::int64_t lo = begin.unix_seconds;
  const std::int64_t hi = std::max(lo, end.unix_seconds);
  const std::int64_t span = hi - lo;

  std::vector<Interval> sensor, display, camera, buzzer, controller;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (i > 0 && e.at < events[i - 1].at) {
      throw Error(ErrorCode::kInconsistentTimeline, "events are not in timestamp order");
    }
    const std::int64_t t = e.at.unix_seconds;
    switch (e.kind) {
      case EventKind::kSampleTaken:
        sensor.emplace_back(t, t + policy.sensor_active_s_per_sample);
        break;
      case EventKind::kLocalLogWritten:
        display.emplace_back(t, t + policy.display_hold_s);
        break;
      case EventKind::kImageCaptured:
        camera.emplace_back(t, t + policy.camera_active_s_per_capture);
        controller.emplace_back(t, t + policy.controller_busy_s_per_event);
        break;
      case EventKind::kAlertDispatched:
        buzzer.emplace_back(t, t + policy.buzzer_active_s_per_alert);
        display.emplace_back(t, t + policy.display_hold_s);
        break;
      case EventKind::kBreachResolved:
        display.emplace_back(t, t + policy.display_hold_s);
        controller.emplace_back(t, t + policy.controller_busy_s_per_event);
        break;
      case EventKind::kCriticalEscalated:
      case EventKind::kBatchAnchored:
      case EventKind::kDailyReportAnchored:
        controller.emplace_back(t, t + policy.controller_busy_s_per_event);
        break;
      case EventKind::kBreachStarted:
        break;
    }
  }
  // Zero-length activity never overlaps anything.
  auto drop_empty = [](std::vector<Interval>& v) {
    std::erase_if(v, [](const Interval& x) { return x.first >= x.second; });
  };
  for (auto* v : {&sensor, &display, &camera, &buzzer, &controller}) drop_empty(*v);
  require_disjoint(sensor, Component::kSensor);
  require_disjoint(camera, Component::kCamera);
  require_disjoint(buzzer, Component::kBuzzer);

  auto two_level = [&](Component c, const std::vector<Interval>& active, double active_mw, double idle_mw) {
    const std::int64_t on = covered(active, lo, hi);
    out.joules[static_cast<std::size_t>(c)] = joules(active_mw, on) + joules(idle_mw, span - on);
  };
  two_level(Component::kController, controller, profile.controller.active_mw, profile.controller.idle_mw);
  two_level(Component::kSensor, sensor, profile.sensor.active_mw, profile.sensor.idle_mw);
  if (policy.display_dim) {
    two_level(Component::kDisplay, display, profile.display.active_mw, policy.dim_mw);
  } else {
    out.joules[static_cast<std::size_t>(Component::kDisplay)] = joules(profile.display.active_mw, span);
  }
  two_level(Component::kCamera, camera, profile.camera.active_mw, profile.camera.idle_mw);
  two_level(Component::kBuzzer, buzzer, profile.buzzer.active_mw, profile.buzzer.idle_mw);
  return out;
}

EnergyBreakdown always_on_energy(const PowerProfile& profile, Timestamp begin, Timestamp end) {
  EnergyBreakdown out;
  const std::int64_t span = std::max<std::int64_t>(0, end - begin);
  for (auto c : kComponents) out.joules[static_cast<std::size_t>(c)] = joules(profile.of(c).active_mw, span);
  return out;
}

std::vector<SavingRow> saving_ratio(const PowerProfile& baseline, const DutyPolicy& policy,
                                    std::span<const MonitorEvent> events, Timestamp begin, Timestamp end) {
  const auto base = always_on_energy(baseline, begin, end);
  const auto duty = energy_for_window(events, begin, end, baseline, policy);
  std::vector<SavingRow> rows;
  for (auto c : kComponents) {
    SavingRow r{c, base.of(c), duty.of(c), 0.0};
    if (r.baseline_j > 0.0) r.saving = 1.0 - r.duty_j / r.baseline_j;
    rows.push_back(r);
  }
  return rows;
}

std::string savings_csv(std::span<const SavingRow> rows) {
  std::ostringstream o;
  o << "component,baseline_j,duty_j,saving_pct\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%.3f,%.3f,%.1f\n", to_string(r.component), r.baseline_j, r.duty_j,
                  r.saving * 100.0);
    o << buf;
  }
  return o.str();
}

std::string savings_table(std::span<const SavingRow> rows) {
  std::ostringstream o;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-12s %16s %16s %9s\n", "component", "baseline_j", "duty_j", "saving");
  o << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-12s %16.3f %16.3f %8.1f%%\n", to_string(r.component), r.baseline_j,
                  r.duty_j, r.saving * 100.0);
    o << buf;
  }
  return o.str();
}

}  // namespace pizzamon
