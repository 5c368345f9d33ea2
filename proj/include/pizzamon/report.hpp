#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pizzamon/digest.hpp"
#include "pizzamon/ledger.hpp"
#include "pizzamon/store.hpp"

namespace pizzamon {

inline constexpr std::string_view kReportHeader = "timestamp,device_id,temp_c,hum_pct,mode,event";

struct DailyReport {
  std::string device_id;
  Day day;
  std::vector<DayRow> rows;
  std::string csv;
  Digest digest{};
  std::uint32_t row_count = 0;
};

// Canonical CSV: header, then one row per DayRow ordered by timestamp (ties
// keep input order), ISO-8601 UTC timestamps, one decimal for temp/humidity,
// LF endings, trailing newline. Rows outside the day are dropped.
DailyReport build_report(const std::string& device_id, Day day, std::vector<DayRow> rows);
DailyReport build_report(const LocalStore& store, const std::string& device_id, Day day);

LedgerRequest report_anchor_request(const DailyReport& report, Timestamp at);

// Submits the ReportAnchor directly (outside the outbox).
LedgerEntry anchor_report(const DailyReport& report, Ledger& ledger, std::uint64_t seq,
                          const std::string& credential, Timestamp at);

enum class ReportVerdict { kAuthentic, kDigestMismatch, kNoAnchor };

const char* to_string(ReportVerdict v);

ReportVerdict verify_report(std::string_view csv_bytes, const Ledger& ledger,
                            const std::string& device_id, Day day);

// reports/<device_id>/<YYYY-MM-DD>.csv under `root`.
std::string report_path(const std::string& root, const std::string& device_id, Day day);

// Device and day from a path following report_path(); falls back to the first
// data row of the CSV. Empty when neither identifies the report.
struct ReportIdentity {
  std::string device_id;
  Day day;
};
std::optional<ReportIdentity> identify_report(const std::string& path, std::string_view csv_bytes);

}  // namespace pizzamon
