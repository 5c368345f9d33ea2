#pragma once

#include <istream>
#include <map>
#include <string>

#include "pizzamon/types.hpp"

namespace pizzamon {

// Flat `key = value` text, `#` comments. Keys are the Thresholds field names:
//
//   temp_min_decic, temp_max_decic, hum_min_decip, hum_max_decip,
//   hysteresis_decic, breach_escalation, sample_period, normal_log_period,
//   critical_log_period, batch_anchor_period
//
// Durations accept s/m/h/d suffixes. Keys under the `energy.` and `gas.`
// prefixes belong to the energy and cost models; any other unknown key is
// rejected so a typo never silently falls back to a default.
struct KeyValueFile {
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::map<std::string, Entry> entries;

  static KeyValueFile parse(std::istream& in);
  static KeyValueFile load(const std::string& path);
};

// "30", "30s", "20m", "2h", "1d" -> seconds. Throws Error(kInvalidConfig).
std::int64_t parse_duration(const std::string& text);

// Applies every threshold key onto `base` and validates the result. Throws
// Error(kInvalidConfig) with a "line N: field" diagnostic.
Thresholds thresholds_from(const KeyValueFile& file, Thresholds base = {});

std::string to_config_text(const Thresholds& t);

}  // namespace pizzamon
