#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pizzamon {

// Seconds since the unix epoch, UTC. 64-bit so 2020..2100 is trivially covered.
struct Timestamp {
  std::int64_t unix_seconds = 0;

  constexpr Timestamp() = default;
  constexpr explicit Timestamp(std::int64_t s) : unix_seconds(s) {}

  constexpr auto operator<=>(const Timestamp&) const = default;
  constexpr Timestamp operator+(std::int64_t s) const { return Timestamp{unix_seconds + s}; }
  constexpr std::int64_t operator-(Timestamp o) const { return unix_seconds - o.unix_seconds; }
  constexpr Timestamp operator-(std::int64_t s) const { return Timestamp{unix_seconds - s}; }
};

inline constexpr std::int64_t kSecondsPerDay = 86400;

// 2025-01-01T00:00:00Z, default origin for simulated runs.
inline constexpr Timestamp kDefaultEpoch{1735689600};

// Days since 1970-01-01 (UTC).
struct Day {
  std::int32_t days_since_epoch = 0;
  constexpr auto operator<=>(const Day&) const = default;
  constexpr Timestamp begin() const { return Timestamp{std::int64_t{days_since_epoch} * kSecondsPerDay}; }
  constexpr Timestamp end() const { return begin() + kSecondsPerDay; }
};

constexpr Day day_of(Timestamp t) {
  std::int64_t s = t.unix_seconds;
  std::int64_t d = s >= 0 ? s / kSecondsPerDay : -((-s + kSecondsPerDay - 1) / kSecondsPerDay);
  return Day{static_cast<std::int32_t>(d)};
}

constexpr bool is_midnight(Timestamp t) { return day_of(t).begin() == t; }

// 2025-01-01T00:40:00Z
std::string to_iso8601(Timestamp t);
// YYYY-MM-DD
std::string to_date_string(Day d);
// Parses YYYY-MM-DD; throws Error(kParseError).
Day parse_date(const std::string& s);
// Parses 2025-01-01T00:40:00Z; throws Error(kParseError).
Timestamp parse_iso8601(const std::string& s);

inline constexpr std::int32_t kTempMinDecic = -400;
inline constexpr std::int32_t kTempMaxDecic = 1250;
inline constexpr std::uint32_t kHumMaxDecip = 1000;

struct Reading {
  std::string device_id;
  Timestamp at;
  std::int16_t temp_decicelsius = 0;
  std::uint16_t humidity_decipercent = 0;

  bool operator==(const Reading&) const = default;
};

bool is_valid(const Reading& r);

// "8.2", "-0.5", "61.0": tenths rendered with exactly one decimal.
std::string format_tenths(std::int64_t tenths);
// Inverse of format_tenths; throws Error(kParseError) on anything else.
std::int64_t parse_tenths(const std::string& s);

struct Thresholds {
  std::int32_t temp_min_decic = 20;
  std::int32_t temp_max_decic = 60;
  std::uint32_t hum_min_decip = 400;
  std::uint32_t hum_max_decip = 650;
  std::uint32_t hysteresis_decic = 3;
  std::int64_t breach_escalation = 2400;
  std::int64_t sample_period = 30;
  std::int64_t normal_log_period = 1200;
  std::int64_t critical_log_period = 30;
  std::int64_t batch_anchor_period = 7200;

  bool operator==(const Thresholds&) const = default;
};

// Throws Error(kInvalidConfig) naming the offending field.
void validate(const Thresholds& t);

}  // namespace pizzamon
