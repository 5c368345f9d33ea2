#include <gtest/gtest.h>

#include "pizzamon/error.hpp"
#include "pizzamon/report.hpp"
#include "pizzamon/rng.hpp"
#include "pizzamon/store.hpp"
#include "test_util.hpp"

using namespace pizzamon;
using pizzamon::testing::TempDir;

namespace {

const Timestamp t0 = kDefaultEpoch;
const Day d0 = day_of(t0);

DayRow log_row(std::int64_t offset, std::int16_t temp = 40, MonitorMode mode = MonitorMode::kNormal) {
  return {t0 + offset, Reading{"fridge-1", t0 + offset, temp, 553}, mode, RowEvent::kLog};
}

std::vector<DayRow> quiet_day() {
  std::vector<DayRow> rows;
  for (int i = 0; i < 72; ++i) rows.push_back(log_row(1200 * i, static_cast<std::int16_t>(35 + i % 8)));
  return rows;
}

}  // namespace

TEST(Report, EmptyDayIsHeaderOnly) {
  const auto r = build_report("fridge-1", d0, {});
  EXPECT_EQ(r.csv, "timestamp,device_id,temp_c,hum_pct,mode,event\n");
  EXPECT_EQ(r.csv.size(), 46u);
  EXPECT_EQ(r.row_count, 0u);
  // sha256 of the header line, computed with an external tool.
  EXPECT_EQ(to_hex(r.digest), "92308fdb50d26857128a1e20e802bd0a8c9cfae481b53fb553fbf64ec8c3637b");
}

TEST(Report, QuietDayHas72Rows) {
  const auto r = build_report("fridge-1", d0, quiet_day());
  EXPECT_EQ(r.row_count, 72u);
  EXPECT_EQ(std::count(r.csv.begin(), r.csv.end(), '\n'), 73);
  EXPECT_NE(r.csv.find("\n2025-01-01T00:20:00Z,fridge-1,3.6,55.3,NORMAL,LOG\n"), std::string::npos);
  EXPECT_EQ(r.digest, sha256(r.csv));
}

TEST(Report, RowsAreOrderedAndClippedToTheDay) {
  std::vector<DayRow> rows{log_row(2400, 85, MonitorMode::kCritical), log_row(-30), log_row(0),
                           log_row(kSecondsPerDay)};
  rows.push_back({t0 + 2400, Reading{"fridge-1", t0 + 2400, 85, 553}, MonitorMode::kCritical, RowEvent::kAlert});
  const auto r = build_report("fridge-1", d0, rows);
  EXPECT_EQ(r.csv,
            "timestamp,device_id,temp_c,hum_pct,mode,event\n"
            "2025-01-01T00:00:00Z,fridge-1,4.0,55.3,NORMAL,LOG\n"
            "2025-01-01T00:40:00Z,fridge-1,8.5,55.3,CRITICAL,LOG\n"
            "2025-01-01T00:40:00Z,fridge-1,8.5,55.3,CRITICAL,ALERT\n");
}

TEST(Report, CanonicalFromStore) {
  TempDir dir;
  auto [store, rep] = LocalStore::recover(dir.file("s.bin"));
  for (const auto& row : quiet_day()) {
    LocalRecord rec;
    rec.at = row.at;
    rec.reading = row.reading;
    store.append_local("fridge-1", rec);
  }
  store.append_event_row("fridge-1", {t0 + 600, Reading{"fridge-1", t0 + 600, 41, 553}, MonitorMode::kNormal,
                                      RowEvent::kResolved});
  const auto a = build_report(store, "fridge-1", d0);
  const auto b = build_report(store, "fridge-1", d0);
  EXPECT_EQ(a.csv, b.csv);
  EXPECT_EQ(a.row_count, 73u);
  EXPECT_NE(a.csv.find("00:10:00Z,fridge-1,4.1,55.3,NORMAL,RESOLVED\n"), std::string::npos);
  EXPECT_EQ(build_report(store, "fridge-2", d0).row_count, 0u);
}

TEST(Report, AnchorAndVerify) {
  Ledger ledger("owner", {"gateway"});
  const auto r = build_report("fridge-1", d0, quiet_day());
  EXPECT_EQ(verify_report(r.csv, ledger, "fridge-1", d0), ReportVerdict::kNoAnchor);
  const auto e = anchor_report(r, ledger, 0, "gateway", d0.end());
  EXPECT_EQ(e.kind, EntryKind::kReportAnchor);
  EXPECT_EQ(verify_report(r.csv, ledger, "fridge-1", d0), ReportVerdict::kAuthentic);
  EXPECT_EQ(verify_report(r.csv, ledger, "fridge-1", Day{d0.days_since_epoch + 1}), ReportVerdict::kNoAnchor);
  EXPECT_EQ(verify_report(r.csv, ledger, "fridge-2", d0), ReportVerdict::kNoAnchor);

  const auto again = anchor_report(r, ledger, 0, "gateway", d0.end());
  EXPECT_EQ(again.entry_hash, e.entry_hash);
  EXPECT_EQ(ledger.size(), 1u);
  EXPECT_THROW(anchor_report(r, ledger, 1, "mallory", d0.end()), Error);
}

TEST(Report, EverySingleByteEditIsDetected) {
  Ledger ledger("owner", {"gateway"});
  const auto r = build_report("fridge-1", d0, quiet_day());
  anchor_report(r, ledger, 0, "gateway", d0.end());
  Rng rng(8);
  for (std::size_t i = 0; i < r.csv.size(); ++i) {
    std::string edited = r.csv;
    edited[i] = static_cast<char>(edited[i] ^ (1 + rng.below(255)));
    ASSERT_EQ(verify_report(edited, ledger, "fridge-1", d0), ReportVerdict::kDigestMismatch) << i;
  }
  EXPECT_EQ(verify_report(r.csv + "\n", ledger, "fridge-1", d0), ReportVerdict::kDigestMismatch);
  EXPECT_EQ(verify_report(r.csv.substr(0, r.csv.size() - 1), ledger, "fridge-1", d0),
            ReportVerdict::kDigestMismatch);
}

TEST(Report, PathsAndIdentification) {
  const auto path = report_path("run", "fridge-1", d0);
  EXPECT_EQ(path, "run/reports/fridge-1/2025-01-01.csv");
  const auto r = build_report("fridge-1", d0, quiet_day());
  auto id = identify_report(path, "");
  ASSERT_TRUE(id);
  EXPECT_EQ(id->device_id, "fridge-1");
  EXPECT_EQ(id->day, d0);
  id = identify_report("/tmp/copy.csv", r.csv);
  ASSERT_TRUE(id);
  EXPECT_EQ(id->device_id, "fridge-1");
  EXPECT_EQ(id->day, d0);
  EXPECT_FALSE(identify_report("/tmp/copy.csv", build_report("fridge-1", d0, {}).csv));
}
