#include "pizzamon/types.hpp"

#include <cstdio>

#include "pizzamon/error.hpp"

namespace pizzamon {
namespace {

// Howard Hinnant's civil-calendar conversions.
struct Civil {
  std::int64_t y;
  unsigned m;
  unsigned d;
};

Civil civil_from_days(std::int64_t z) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const auto doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  const unsigned d = doy - (153 * mp + 2) / 5 + 1;
  const unsigned m = mp < 10 ? mp + 3 : mp - 9;
  return {y + (m <= 2), m, d};
}

std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

unsigned days_in_month(std::int64_t y, unsigned m) {
  static constexpr unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

bool parse_digits(const std::string& s, std::size_t pos, std::size_t n, std::int64_t& out) {
  if (pos + n > s.size()) return false;
  out = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    out = out * 10 + (s[i] - '0');
  }
  return true;
}

Day parse_date_prefix(const std::string& s) {
  std::int64_t y, m, d;
  if (s.size() < 10 || !parse_digits(s, 0, 4, y) || s[4] != '-' || !parse_digits(s, 5, 2, m) ||
      s[7] != '-' || !parse_digits(s, 8, 2, d) || m < 1 || m > 12 || d < 1 ||
      d > days_in_month(y, static_cast<unsigned>(m))) {
    throw Error(ErrorCode::kParseError, "bad date: " + s);
  }
  return Day{static_cast<std::int32_t>(
      days_from_civil(y, static_cast<unsigned>(m), static_cast<unsigned>(d)))};
}

}  // namespace

std::string to_date_string(Day d) {
  const Civil c = civil_from_days(d.days_since_epoch);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", static_cast<long long>(c.y), c.m, c.d);
  return buf;
}

std::string to_iso8601(Timestamp t) {
  const Day d = day_of(t);
  const std::int64_t secs = t - d.begin();
  char buf[48];
  std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", to_date_string(d).c_str(),
                static_cast<int>(secs / 3600), static_cast<int>(secs / 60 % 60),
                static_cast<int>(secs % 60));
  return buf;
}

Day parse_date(const std::string& s) {
  if (s.size() != 10) throw Error(ErrorCode::kParseError, "bad date: " + s);
  return parse_date_prefix(s);
}

Timestamp parse_iso8601(const std::string& s) {
  std::int64_t hh, mm, ss;
  if (s.size() != 20 || s[10] != 'T' || !parse_digits(s, 11, 2, hh) || s[13] != ':' ||
      !parse_digits(s, 14, 2, mm) || s[16] != ':' || !parse_digits(s, 17, 2, ss) || s[19] != 'Z' ||
      hh > 23 || mm > 59 || ss > 59) {
    throw Error(ErrorCode::kParseError, "bad timestamp: " + s);
  }
  return parse_date_prefix(s).begin() + (hh * 3600 + mm * 60 + ss);
}

bool is_valid(const Reading& r) {
  return !r.device_id.empty() && r.temp_decicelsius >= kTempMinDecic && r.temp_decicelsius <= kTempMaxDecic &&
         r.humidity_decipercent <= kHumMaxDecip;
}

std::string format_tenths(std::int64_t tenths) {
  const bool neg = tenths < 0;
  const std::uint64_t mag = neg ? static_cast<std::uint64_t>(-(tenths + 1)) + 1
                                : static_cast<std::uint64_t>(tenths);
  return (neg ? "-" : "") + std::to_string(mag / 10) + "." + std::to_string(mag % 10);
}

std::int64_t parse_tenths(const std::string& s) {
  std::size_t i = 0;
  bool neg = false;
  if (i < s.size() && s[i] == '-') {
    neg = true;
    ++i;
  }
  const std::size_t dot = s.find('.', i);
  if (dot == std::string::npos || dot == i || dot + 2 != s.size() || dot - i > 15) {
    throw Error(ErrorCode::kParseError, "expected one decimal place: " + s);
  }
  std::int64_t whole = 0, frac = 0;
  if (!parse_digits(s, i, dot - i, whole) || !parse_digits(s, dot + 1, 1, frac)) {
    throw Error(ErrorCode::kParseError, "expected one decimal place: " + s);
  }
  const std::int64_t v = whole * 10 + frac;
  if (neg && v == 0) throw Error(ErrorCode::kParseError, "negative zero: " + s);
  return neg ? -v : v;
}

void validate(const Thresholds& t) {
  auto fail = [](const char* field, const std::string& why) {
    throw Error(ErrorCode::kInvalidConfig, std::string(field) + ": " + why);
  };
  if (t.temp_min_decic >= t.temp_max_decic) fail("temp_min_decic", "must be < temp_max_decic");
  if (t.hum_min_decip >= t.hum_max_decip) fail("hum_min_decip", "must be < hum_max_decip");
  if (t.hum_max_decip > kHumMaxDecip) fail("hum_max_decip", "must be <= 1000");
  if (t.sample_period <= 0) fail("sample_period", "must be > 0");
  if (t.breach_escalation < 0) fail("breach_escalation", "must be >= 0");
  if (t.normal_log_period <= 0 || t.normal_log_period % t.sample_period != 0) {
    fail("normal_log_period", "must be a positive multiple of sample_period");
  }
  if (t.batch_anchor_period <= 0 || t.batch_anchor_period % t.sample_period != 0) {
    fail("batch_anchor_period", "must be a positive multiple of sample_period");
  }
  if (t.critical_log_period <= 0 || t.critical_log_period % t.sample_period != 0) {
    fail("critical_log_period", "must be a positive multiple of sample_period");
  }
  if (2 * static_cast<std::int64_t>(t.hysteresis_decic) >=
      std::int64_t{t.temp_max_decic} - t.temp_min_decic) {
    fail("hysteresis_decic", "shrunk band would be empty");
  }
}

}  // namespace pizzamon
