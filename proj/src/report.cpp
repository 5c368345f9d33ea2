#include "pizzamon/report.hpp"

#include <algorithm>
#include <filesystem>

#include "pizzamon/error.hpp"

namespace pizzamon {

DailyReport build_report(const std::string& device_id, Day day, std::vector<DayRow> rows) {
  std::erase_if(rows, [&](const DayRow& r) { return day_of(r.at) != day; });
  std::stable_sort(rows.begin(), rows.end(), [](const DayRow& a, const DayRow& b) { return a.at < b.at; });

  DailyReport rep;
  rep.device_id = device_id;
  rep.day = day;
  rep.csv.reserve(64 * (rows.size() + 1));
  rep.csv.append(kReportHeader).push_back('\n');
  for (const auto& r : rows) {
    rep.csv += to_iso8601(r.at);
    rep.csv += ',';
    rep.csv += device_id;
    rep.csv += ',';
    rep.csv += format_tenths(r.reading.temp_decicelsius);
    rep.csv += ',';
    rep.csv += format_tenths(r.reading.humidity_decipercent);
    rep.csv += ',';
    rep.csv += to_string(r.mode);
    rep.csv += ',';
    rep.csv += to_string(r.event);
    rep.csv += '\n';
  }
  rep.row_count = static_cast<std::uint32_t>(rows.size());
  rep.rows = std::move(rows);
  rep.digest = sha256(rep.csv);
  return rep;
}

DailyReport build_report(const LocalStore& store, const std::string& device_id, Day day) {
  return build_report(device_id, day, store.day_rows(device_id, day));
}

LedgerRequest report_anchor_request(const DailyReport& report, Timestamp at) {
  return LedgerRequest{EntryKind::kReportAnchor, report.device_id, 0, at,
                       encode(ReportAnchorPayload{report.day, report.digest, report.row_count})};
}

LedgerEntry anchor_report(const DailyReport& report, Ledger& ledger, std::uint64_t seq,
                          const std::string& credential, Timestamp at) {
  auto req = report_anchor_request(report, at);
  req.seq = seq;
  return ledger.submit(req, credential);
}

const char* to_string(ReportVerdict v) {
  switch (v) {
    case ReportVerdict::kAuthentic: return "Authentic";
    case ReportVerdict::kDigestMismatch: return "DigestMismatch";
    case ReportVerdict::kNoAnchor: return "NoAnchor";
  }
  return "?";
}

ReportVerdict verify_report(std::string_view csv_bytes, const Ledger& ledger, const std::string& device_id,
                            Day day) {
  const auto anchor = ledger.find_report_anchor(device_id, day);
  if (!anchor) return ReportVerdict::kNoAnchor;
  return sha256(csv_bytes) == anchor->digest ? ReportVerdict::kAuthentic : ReportVerdict::kDigestMismatch;
}

std::string report_path(const std::string& root, const std::string& device_id, Day day) {
  return (std::filesystem::path(root) / "reports" / device_id / (to_date_string(day) + ".csv")).string();
}

std::optional<ReportIdentity> identify_report(const std::string& path, std::string_view csv) {
  const std::filesystem::path p(path);
  if (p.extension() == ".csv" && p.has_parent_path()) {
    try {
      const Day day = parse_date(p.stem().string());
      const std::string device = p.parent_path().filename().string();
      if (!device.empty()) return ReportIdentity{device, day};
    } catch (const Error&) {
    }
  }
  const auto first_nl = csv.find('\n');
  if (first_nl == std::string_view::npos) return std::nullopt;
  const auto row = csv.substr(first_nl + 1, csv.find('\n', first_nl + 1) - first_nl - 1);
  const auto c1 = row.find(',');
  const auto c2 = c1 == std::string_view::npos ? c1 : row.find(',', c1 + 1);
  if (c2 == std::string_view::npos) return std::nullopt;
  try {
    const Timestamp t = parse_iso8601(std::string(row.substr(0, c1)));
    return ReportIdentity{std::string(row.substr(c1 + 1, c2 - c1 - 1)), day_of(t)};
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace pizzamon
