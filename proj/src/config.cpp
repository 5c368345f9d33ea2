#include "pizzamon/config.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "pizzamon/error.hpp"

namespace pizzamon {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::int64_t parse_int(const std::string& text) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kInvalidConfig, "not an integer: '" + text + "'");
  }
  if (used != text.size()) throw Error(ErrorCode::kInvalidConfig, "not an integer: '" + text + "'");
  return v;
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::istream& in) {
  KeyValueFile out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(n) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(n) + ": empty key");
    }
    if (out.entries.contains(key)) {
      throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(n) + ": " + key + ": duplicate key");
    }
    out.entries[key] = Entry{std::move(value), n};
  }
  return out;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path);
  return parse(in);
}

std::int64_t parse_duration(const std::string& text) {
  if (text.empty()) throw Error(ErrorCode::kInvalidConfig, "empty duration");
  std::int64_t mult = 1;
  std::string digits = text;
  switch (text.back()) {
    case 's': mult = 1; digits.pop_back(); break;
    case 'm': mult = 60; digits.pop_back(); break;
    case 'h': mult = 3600; digits.pop_back(); break;
    case 'd': mult = 86400; digits.pop_back(); break;
    default: break;
  }
  const std::int64_t v = parse_int(digits);
  if (v < 0) throw Error(ErrorCode::kInvalidConfig, "negative duration: " + text);
  return v * mult;
}

Thresholds thresholds_from(const KeyValueFile& file, Thresholds t) {
  for (const auto& [key, entry] : file.entries) {
    const std::string where = "line " + std::to_string(entry.line) + ": " + key + ": ";
    try {
      if (key == "temp_min_decic") t.temp_min_decic = static_cast<std::int32_t>(parse_int(entry.value));
      else if (key == "temp_max_decic") t.temp_max_decic = static_cast<std::int32_t>(parse_int(entry.value));
      else if (key == "hum_min_decip") t.hum_min_decip = static_cast<std::uint32_t>(parse_int(entry.value));
      else if (key == "hum_max_decip") t.hum_max_decip = static_cast<std::uint32_t>(parse_int(entry.value));
      else if (key == "hysteresis_decic") t.hysteresis_decic = static_cast<std::uint32_t>(parse_int(entry.value));
      else if (key == "breach_escalation") t.breach_escalation = parse_duration(entry.value);
      else if (key == "sample_period") t.sample_period = parse_duration(entry.value);
      else if (key == "normal_log_period") t.normal_log_period = parse_duration(entry.value);
      else if (key == "critical_log_period") t.critical_log_period = parse_duration(entry.value);
      else if (key == "batch_anchor_period") t.batch_anchor_period = parse_duration(entry.value);
      else if (key.starts_with("energy.") || key.starts_with("gas.")) continue;
      else throw Error(ErrorCode::kInvalidConfig, "unknown key");
      if ((key == "hum_min_decip" || key == "hum_max_decip" || key == "hysteresis_decic") &&
          parse_int(entry.value) < 0) {
        throw Error(ErrorCode::kInvalidConfig, "must be >= 0");
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::kInvalidConfig, where + e.what());
    }
  }
  try {
    validate(t);
  } catch (const Error& e) {
    // Point at the line that set the offending field when there is one.
    const std::string msg = e.what();
    const std::string field = msg.substr(0, msg.find(':'));
    if (auto it = file.entries.find(field); it != file.entries.end()) {
      throw Error(ErrorCode::kInvalidConfig, "line " + std::to_string(it->second.line) + ": " + msg);
    }
    throw;
  }
  return t;
}

std::string to_config_text(const Thresholds& t) {
  std::ostringstream o;
  o << "temp_min_decic = " << t.temp_min_decic << "\n"
    << "temp_max_decic = " << t.temp_max_decic << "\n"
    << "hum_min_decip = " << t.hum_min_decip << "\n"
    << "hum_max_decip = " << t.hum_max_decip << "\n"
    << "hysteresis_decic = " << t.hysteresis_decic << "\n"
    << "breach_escalation = " << t.breach_escalation << "s\n"
    << "sample_period = " << t.sample_period << "s\n"
    << "normal_log_period = " << t.normal_log_period << "s\n"
    << "critical_log_period = " << t.critical_log_period << "s\n"
    << "batch_anchor_period = " << t.batch_anchor_period << "s\n";
  return o.str();
}

}  // namespace pizzamon
