#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pizzamon/events.hpp"
#include "pizzamon/ledger.hpp"

namespace pizzamon {

// Thrown by CrashInjector-armed code paths to emulate the process dying.
// Deliberately not a pizzamon::Error so nothing in the library catches it.
struct SimulatedCrash : std::exception {
  const char* what() const noexcept override { return "simulated crash"; }
};

// Counts crash boundaries (before/torn/after every store append, and right
// after each ledger acknowledgement) and fires once at the armed ordinal.
class CrashInjector {
 public:
  CrashInjector() = default;
  explicit CrashInjector(std::uint64_t crash_at) : crash_at_(crash_at) {}

  // 1-based ordinal of the boundary being passed; true exactly once.
  bool should_crash() {
    ++hits_;
    return crash_at_ && hits_ == *crash_at_;
  }
  std::uint64_t hits() const { return hits_; }
  bool fired() const { return crash_at_ && hits_ >= *crash_at_; }

 private:
  std::optional<std::uint64_t> crash_at_;
  std::uint64_t hits_ = 0;
};

enum class OutboxState : std::uint8_t { kPending, kSubmitted, kConfirmed };

const char* to_string(OutboxState s);

struct OutboxItem {
  std::uint64_t seq = 0;
  LedgerRequest request;  // request.seq == seq
  OutboxState state = OutboxState::kPending;
  std::uint32_t attempts = 0;
  Timestamp created_at;
  Timestamp next_attempt_at;  // in-memory backoff, not persisted
  std::optional<std::uint64_t> ledger_index;
};

enum class RowEvent : std::uint8_t { kLog = 1, kAlert = 2, kResolved = 3 };

const char* to_string(RowEvent e);

// A line of the daily report: either a local log record or an alert/resolution.
struct DayRow {
  Timestamp at;
  Reading reading;
  MonitorMode mode = MonitorMode::kNormal;
  RowEvent event = RowEvent::kLog;
  bool operator==(const DayRow&) const = default;
};

struct RecoveryReport {
  std::size_t records_applied = 0;
  std::size_t dropped_records = 0;  // torn or checksum-failing tail records
  std::size_t dropped_bytes = 0;
  std::size_t downgraded_submitted = 0;
};

// Store file: 7-byte magic, version byte, then records
// `len (u32 BE) | payload | crc32 (u32 BE, over payload)`.
inline constexpr std::array<std::uint8_t, 7> kStoreMagic{'P', 'Z', 'O', 'U', 'T', 'B', 'X'};
inline constexpr std::uint8_t kStoreVersion = 1;

// Write-ahead local store: outbox items, the day's local records and event
// rows, and engine checkpoints. Single writer.
class LocalStore {
 public:
  // Opens (creating if absent) and replays the file. Torn or corrupt tail
  // records are truncated away and counted in the report. Throws
  // Error(kCorruptStore) if the file is not a store at all, Error(kIo) on I/O failure.
  static std::pair<LocalStore, RecoveryReport> recover(const std::string& path,
                                                       CrashInjector* injector = nullptr);

  LocalStore(LocalStore&&) noexcept;
  LocalStore& operator=(LocalStore&&) noexcept;
  ~LocalStore();

  const std::string& path() const { return path_; }
  void set_injector(CrashInjector* injector) { injector_ = injector; }
  // fsync after every append (default on). Crash tests only need fflush.
  void set_sync(bool sync) { sync_ = sync; }
  CrashInjector* injector() const { return injector_; }

  // Durably records the request as Pending with the device's next seq
  // before returning. request.seq is ignored.
  OutboxItem enqueue(LedgerRequest request, Timestamp created_at);

  void append_local(const std::string& device_id, const LocalRecord& record);
  void append_event_row(const std::string& device_id, const DayRow& row);
  void checkpoint(const std::string& device_id, const std::vector<std::uint8_t>& state);

  void mark_submitted(const std::string& device_id, std::uint64_t seq);
  void mark_confirmed(const std::string& device_id, std::uint64_t seq, std::uint64_t ledger_index);

  const std::vector<OutboxItem>& items() const { return items_; }
  OutboxItem* find(const std::string& device_id, std::uint64_t seq);
  std::size_t pending_count() const;
  std::uint64_t next_seq(const std::string& device_id) const;

  // Report rows for (device, day) in append order.
  std::vector<DayRow> day_rows(const std::string& device_id, Day day) const;
  // Local records with at in [begin, end), append order.
  std::vector<LocalRecord> local_records(const std::string& device_id, Timestamp begin,
                                         Timestamp end) const;
  std::optional<std::vector<std::uint8_t>> last_checkpoint(const std::string& device_id) const;

  // Rewrites the file keeping unconfirmed items, rows of days >= keep_from and
  // the latest checkpoints. Atomic via rename.
  void compact(Day keep_from);

 private:
  struct StoredRow {
    DayRow row;
    std::optional<LocalRecord> record;  // set for log rows
  };

  LocalStore() = default;
  void open_for_append();
  void append_record(const std::vector<std::uint8_t>& payload);
  void apply(const std::vector<std::uint8_t>& payload);
  std::vector<std::uint8_t> file_image() const;

  std::string path_;
  std::FILE* file_ = nullptr;
  CrashInjector* injector_ = nullptr;
  bool sync_ = true;

  std::vector<OutboxItem> items_;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> item_index_;
  std::map<std::string, std::uint64_t> next_seq_;
  std::map<std::string, std::vector<StoredRow>> rows_;
  std::map<std::string, std::vector<std::uint8_t>> checkpoints_;
};

struct Confirmation {
  std::string device_id;
  std::uint64_t seq = 0;
  std::uint64_t ledger_index = 0;
  Timestamp confirmed_at;
};

// Retry delay after the n-th consecutive outage (n >= 1): 30, 60, 120, 120, ...
std::int64_t backoff_after(std::uint32_t failures);

// Submits due Pending items in seq order per device. A LedgerOutage parks the
// device until its backoff elapses; later items of that device wait behind it.
std::vector<Confirmation> drain(LocalStore& store, Ledger& ledger, Timestamp now,
                                const std::string& credential);

}  // namespace pizzamon
