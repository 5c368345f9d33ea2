#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pizzamon/config.hpp"
#include "pizzamon/events.hpp"

namespace pizzamon {

enum class Component : std::uint8_t { kController, kSensor, kDisplay, kCamera, kBuzzer };

inline constexpr std::array<Component, 5> kComponents{Component::kController, Component::kSensor,
                                                      Component::kDisplay, Component::kCamera,
                                                      Component::kBuzzer};

const char* to_string(Component c);

struct ComponentPower {
  double active_mw = 0.0;
  double idle_mw = 0.0;
};

// Defaults are illustrative draws, not measurements; only the controller's
// 2500-6000 mW band is a reported figure.
struct PowerProfile {
  ComponentPower controller{6000.0, 2500.0};
  ComponentPower sensor{2.5, 0.0};
  ComponentPower display{200.0, 20.0};
  ComponentPower camera{1400.0, 0.0};
  ComponentPower buzzer{50.0, 0.0};

  const ComponentPower& of(Component c) const;
  ComponentPower& of(Component c);
};

struct DutyPolicy {
  std::int64_t sensor_active_s_per_sample = 1;
  bool display_dim = true;
  double dim_mw = 20.0;
  std::int64_t display_hold_s = 10;
  std::int64_t camera_active_s_per_capture = 3;
  std::int64_t buzzer_active_s_per_alert = 10;
  std::int64_t controller_busy_s_per_event = 2;
};

// Throws Error(kInvalidConfig) for negative draws, active < idle, or a sensor
// active time longer than the sample period.
void validate(const PowerProfile& p);
void validate(const DutyPolicy& p, std::int64_t sample_period);

// `energy.<component>.active_mw`, `energy.<component>.idle_mw`,
// `energy.sensor_active_s_per_sample`, `energy.display_dim` (0/1),
// `energy.dim_mw`, `energy.display_hold_s`, `energy.camera_active_s_per_capture`,
// `energy.buzzer_active_s_per_alert`, `energy.controller_busy_s_per_event`.
PowerProfile profile_from(const KeyValueFile& file, PowerProfile base = {});
DutyPolicy policy_from(const KeyValueFile& file, DutyPolicy base = {});

struct EnergyBreakdown {
  std::array<double, 5> joules{};
  double total() const;
  double of(Component c) const { return joules[static_cast<std::size_t>(c)]; }
};

// Duty-cycled energy over [begin, end), from the event timeline. Events
// before `begin` still count where their active windows reach into the range,
// so splitting a day into pieces sums to the whole. Throws
// Error(kInconsistentTimeline) on unsorted events or overlapping activity of
// a single-activity component (sensor, camera, buzzer).
EnergyBreakdown energy_for_window(std::span<const MonitorEvent> events, Timestamp begin, Timestamp end,
                                  const PowerProfile& profile, const DutyPolicy& policy);

// Every component at active power for the whole range.
EnergyBreakdown always_on_energy(const PowerProfile& profile, Timestamp begin, Timestamp end);

struct SavingRow {
  Component component;
  double baseline_j = 0.0;
  double duty_j = 0.0;
  double saving = 0.0;  // 1 - duty/baseline, 0 when baseline is 0
};

std::vector<SavingRow> saving_ratio(const PowerProfile& baseline, const DutyPolicy& policy,
                                    std::span<const MonitorEvent> events, Timestamp begin, Timestamp end);

// component,baseline_j,duty_j,saving_pct
std::string savings_csv(std::span<const SavingRow> rows);
std::string savings_table(std::span<const SavingRow> rows);

}  // namespace pizzamon
