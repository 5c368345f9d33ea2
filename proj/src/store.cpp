#include "pizzamon/store.hpp"

#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

#include "pizzamon/codec.hpp"
#include "pizzamon/error.hpp"

namespace pizzamon {
namespace {

enum class RecordType : std::uint8_t {
  kEnqueue = 1,
  kSubmitted = 2,
  kConfirmed = 3,
  kLocalRecord = 4,
  kEventRow = 5,
  kCheckpoint = 6,
  kSeqFloor = 7,
};

constexpr ErrorCode kCorrupt = ErrorCode::kCorruptStore;

std::vector<std::uint8_t> header_bytes() {
  std::vector<std::uint8_t> h(kStoreMagic.begin(), kStoreMagic.end());
  h.push_back(kStoreVersion);
  return h;
}

std::vector<std::uint8_t> frame(const std::vector<std::uint8_t>& payload) {
  ByteWriter w;
  w.bytes(payload);
  w.u32(crc32(payload));
  return std::move(w).take();
}

std::vector<std::uint8_t> enqueue_record(const OutboxItem& item) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(RecordType::kEnqueue));
  w.str(item.request.device_id);
  w.u64(item.seq);
  w.i64(item.created_at.unix_seconds);
  w.u8(static_cast<std::uint8_t>(item.request.kind));
  w.i64(item.request.at.unix_seconds);
  w.bytes(item.request.payload);
  return std::move(w).take();
}

std::vector<std::uint8_t> key_record(RecordType type, const std::string& device, std::uint64_t seq) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(type));
  w.str(device);
  w.u64(seq);
  return std::move(w).take();
}

std::vector<std::uint8_t> local_record(const std::string& device, const LocalRecord& r) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(RecordType::kLocalRecord));
  w.str(device);
  w.i64(r.at.unix_seconds);
  w.i16(r.reading.temp_decicelsius);
  w.u16(r.reading.humidity_decipercent);
  w.u8(static_cast<std::uint8_t>(r.mode));
  w.i32(r.window_min_temp_decic);
  w.i32(r.window_max_temp_decic);
  w.i32(r.window_avg_temp_decic);
  w.u8(r.scheduled);
  return std::move(w).take();
}

std::vector<std::uint8_t> event_row_record(const std::string& device, const DayRow& r) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(RecordType::kEventRow));
  w.str(device);
  w.i64(r.at.unix_seconds);
  w.i16(r.reading.temp_decicelsius);
  w.u16(r.reading.humidity_decipercent);
  w.u8(static_cast<std::uint8_t>(r.mode));
  w.u8(static_cast<std::uint8_t>(r.event));
  return std::move(w).take();
}

std::vector<std::uint8_t> checkpoint_record(const std::string& device, const std::vector<std::uint8_t>& state) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(RecordType::kCheckpoint));
  w.str(device);
  w.bytes(state);
  return std::move(w).take();
}

MonitorMode read_mode(ByteReader& r) {
  const auto m = r.u8();
  if (m > 2) throw Error(kCorrupt, "bad mode");
  return static_cast<MonitorMode>(m);
}

}  // namespace

const char* to_string(OutboxState s) {
  switch (s) {
    case OutboxState::kPending: return "Pending";
    case OutboxState::kSubmitted: return "Submitted";
    case OutboxState::kConfirmed: return "Confirmed";
  }
  return "?";
}

const char* to_string(RowEvent e) {
  switch (e) {
    case RowEvent::kLog: return "LOG";
    case RowEvent::kAlert: return "ALERT";
    case RowEvent::kResolved: return "RESOLVED";
  }
  return "?";
}

LocalStore::LocalStore(LocalStore&& o) noexcept { *this = std::move(o); }

LocalStore& LocalStore::operator=(LocalStore&& o) noexcept {
  if (this != &o) {
    if (file_) std::fclose(file_);
    path_ = std::move(o.path_);
    file_ = std::exchange(o.file_, nullptr);
    injector_ = o.injector_;
    sync_ = o.sync_;
    items_ = std::move(o.items_);
    item_index_ = std::move(o.item_index_);
    next_seq_ = std::move(o.next_seq_);
    rows_ = std::move(o.rows_);
    checkpoints_ = std::move(o.checkpoints_);
  }
  return *this;
}

LocalStore::~LocalStore() {
  if (file_) std::fclose(file_);
}

std::pair<LocalStore, RecoveryReport> LocalStore::recover(const std::string& path, CrashInjector* injector) {
  LocalStore store;
  store.path_ = path;
  store.injector_ = injector;
  RecoveryReport report;

  std::vector<std::uint8_t> bytes;
  if (std::ifstream in{path, std::ios::binary}) {
    bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  }
  const auto header = header_bytes();
  if (bytes.size() < header.size()) {
    // Missing file or a header torn mid-write: nothing durable yet.
    if (!std::equal(bytes.begin(), bytes.end(), header.begin())) {
      throw Error(kCorrupt, path + " is not an outbox store");
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(header.data()), static_cast<std::streamsize>(header.size()));
    if (!out) throw Error(ErrorCode::kIo, "cannot create store " + path);
    report.dropped_bytes = bytes.size();
    store.open_for_append();
    return {std::move(store), report};
  }
  if (!std::equal(header.begin(), header.end(), bytes.begin())) {
    throw Error(kCorrupt, path + " has an unknown store header");
  }

  std::size_t pos = header.size();
  while (pos < bytes.size()) {
    const std::size_t start = pos;
    ByteReader r(std::span<const std::uint8_t>(bytes).subspan(pos), kCorrupt);
    bool valid = false;
    std::vector<std::uint8_t> payload;
    try {
      payload = r.bytes();
      valid = r.u32() == crc32(payload);
    } catch (const Error&) {
      valid = false;
    }
    if (!valid) {
      report.dropped_records = 1;
      report.dropped_bytes = bytes.size() - start;
      std::filesystem::resize_file(path, start);
      break;
    }
    store.apply(payload);
    ++report.records_applied;
    pos = start + r.position();
  }

  for (auto& item : store.items_) {
    if (item.state == OutboxState::kSubmitted) {
      item.state = OutboxState::kPending;
      ++report.downgraded_submitted;
    }
  }
  store.open_for_append();
  return {std::move(store), report};
}

void LocalStore::apply(const std::vector<std::uint8_t>& payload) {
  ByteReader r(payload, kCorrupt);
  const auto type = static_cast<RecordType>(r.u8());
  switch (type) {
    case RecordType::kEnqueue: {
      OutboxItem item;
      item.request.device_id = r.str();
      item.seq = r.u64();
      item.created_at = Timestamp{r.i64()};
      const auto kind = entry_kind_from_u8(r.u8());
      if (!kind) throw Error(kCorrupt, "bad entry kind in store");
      item.request.kind = *kind;
      item.request.at = Timestamp{r.i64()};
      item.request.payload = r.bytes();
      item.request.seq = item.seq;
      item.next_attempt_at = item.created_at;
      auto& next = next_seq_[item.request.device_id];
      if (item.seq != next) throw Error(kCorrupt, "non-dense outbox seq");
      next = item.seq + 1;
      item_index_[{item.request.device_id, item.seq}] = items_.size();
      items_.push_back(std::move(item));
      break;
    }
    case RecordType::kSubmitted:
    case RecordType::kConfirmed: {
      const std::string device = r.str();
      const std::uint64_t seq = r.u64();
      OutboxItem* item = find(device, seq);
      if (!item) throw Error(kCorrupt, "state change for unknown outbox item");
      if (type == RecordType::kSubmitted) {
        if (item->state != OutboxState::kConfirmed) item->state = OutboxState::kSubmitted;
        ++item->attempts;
      } else {
        item->state = OutboxState::kConfirmed;
        item->ledger_index = r.u64();
      }
      break;
    }
    case RecordType::kLocalRecord: {
      const std::string device = r.str();
      LocalRecord rec;
      rec.at = Timestamp{r.i64()};
      rec.reading = Reading{device, rec.at, r.i16(), r.u16()};
      rec.mode = read_mode(r);
      rec.window_min_temp_decic = r.i32();
      rec.window_max_temp_decic = r.i32();
      rec.window_avg_temp_decic = r.i32();
      rec.scheduled = r.u8() != 0;
      rows_[device].push_back({DayRow{rec.at, rec.reading, rec.mode, RowEvent::kLog}, rec});
      break;
    }
    case RecordType::kEventRow: {
      const std::string device = r.str();
      DayRow row;
      row.at = Timestamp{r.i64()};
      row.reading = Reading{device, row.at, r.i16(), r.u16()};
      row.mode = read_mode(r);
      const auto ev = r.u8();
      if (ev < 1 || ev > 3) throw Error(kCorrupt, "bad row event");
      row.event = static_cast<RowEvent>(ev);
      rows_[device].push_back({row, std::nullopt});
      break;
    }
    case RecordType::kCheckpoint: {
      const std::string device = r.str();
      checkpoints_[device] = r.bytes();
      break;
    }
    case RecordType::kSeqFloor: {
      const std::string device = r.str();
      auto& next = next_seq_[device];
      next = std::max(next, r.u64());
      break;
    }
    default:
      throw Error(kCorrupt, "unknown store record type");
  }
  r.expect_done("store record");
}

void LocalStore::open_for_append() {
  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw Error(ErrorCode::kIo, "cannot open store " + path_);
}

void LocalStore::append_record(const std::vector<std::uint8_t>& payload) {
  const auto bytes = frame(payload);
  auto write = [&](std::size_t n) {
    if (std::fwrite(bytes.data(), 1, n, file_) != n || std::fflush(file_) != 0) {
      throw Error(ErrorCode::kIo, "write to store " + path_ + " failed");
    }
  };
  if (injector_ && injector_->should_crash()) throw SimulatedCrash{};
  if (injector_ && injector_->should_crash()) {
    write(bytes.size() / 2);
    throw SimulatedCrash{};
  }
  write(bytes.size());
  if (sync_) ::fdatasync(fileno(file_));
  if (injector_ && injector_->should_crash()) throw SimulatedCrash{};
}

OutboxItem LocalStore::enqueue(LedgerRequest request, Timestamp created_at) {
  OutboxItem item;
  item.seq = next_seq(request.device_id);
  request.seq = item.seq;
  item.request = std::move(request);
  item.created_at = created_at;
  item.next_attempt_at = created_at;
  append_record(enqueue_record(item));
  next_seq_[item.request.device_id] = item.seq + 1;
  item_index_[{item.request.device_id, item.seq}] = items_.size();
  items_.push_back(item);
  return item;
}

void LocalStore::append_local(const std::string& device_id, const LocalRecord& record) {
  append_record(local_record(device_id, record));
  rows_[device_id].push_back({DayRow{record.at, record.reading, record.mode, RowEvent::kLog}, record});
}

void LocalStore::append_event_row(const std::string& device_id, const DayRow& row) {
  append_record(event_row_record(device_id, row));
  rows_[device_id].push_back({row, std::nullopt});
}

void LocalStore::checkpoint(const std::string& device_id, const std::vector<std::uint8_t>& state) {
  append_record(checkpoint_record(device_id, state));
  checkpoints_[device_id] = state;
}

void LocalStore::mark_submitted(const std::string& device_id, std::uint64_t seq) {
  OutboxItem* item = find(device_id, seq);
  if (!item) throw Error(kCorrupt, "unknown outbox item");
  append_record(key_record(RecordType::kSubmitted, device_id, seq));
  item->state = OutboxState::kSubmitted;
  ++item->attempts;
}

void LocalStore::mark_confirmed(const std::string& device_id, std::uint64_t seq, std::uint64_t ledger_index) {
  OutboxItem* item = find(device_id, seq);
  if (!item) throw Error(kCorrupt, "unknown outbox item");
  auto rec = key_record(RecordType::kConfirmed, device_id, seq);
  ByteWriter tail;
  tail.u64(ledger_index);
  rec.insert(rec.end(), tail.data().begin(), tail.data().end());
  append_record(rec);
  item->state = OutboxState::kConfirmed;
  item->ledger_index = ledger_index;
}

OutboxItem* LocalStore::find(const std::string& device_id, std::uint64_t seq) {
  auto it = item_index_.find({device_id, seq});
  return it == item_index_.end() ? nullptr : &items_[it->second];
}

std::size_t LocalStore::pending_count() const {
  return static_cast<std::size_t>(std::count_if(items_.begin(), items_.end(), [](const OutboxItem& i) {
    return i.state != OutboxState::kConfirmed;
  }));
}

std::uint64_t LocalStore::next_seq(const std::string& device_id) const {
  auto it = next_seq_.find(device_id);
  return it == next_seq_.end() ? 0 : it->second;
}

std::vector<DayRow> LocalStore::day_rows(const std::string& device_id, Day day) const {
  std::vector<DayRow> out;
  if (auto it = rows_.find(device_id); it != rows_.end()) {
    for (const auto& s : it->second) {
      if (day_of(s.row.at) == day) out.push_back(s.row);
    }
  }
  return out;
}

std::vector<LocalRecord> LocalStore::local_records(const std::string& device_id, Timestamp begin,
                                                   Timestamp end) const {
  std::vector<LocalRecord> out;
  if (auto it = rows_.find(device_id); it != rows_.end()) {
    for (const auto& s : it->second) {
      if (s.record && begin <= s.record->at && s.record->at < end) out.push_back(*s.record);
    }
  }
  return out;
}

std::optional<std::vector<std::uint8_t>> LocalStore::last_checkpoint(const std::string& device_id) const {
  if (auto it = checkpoints_.find(device_id); it != checkpoints_.end()) return it->second;
  return std::nullopt;
}

void LocalStore::compact(Day keep_from) {
  std::vector<OutboxItem> kept_items;
  for (const auto& item : items_) {
    if (item.state != OutboxState::kConfirmed) kept_items.push_back(item);
  }
  for (auto& [device, rows] : rows_) {
    std::erase_if(rows, [&](const StoredRow& s) { return day_of(s.row.at) < keep_from; });
  }

  std::vector<std::uint8_t> image = header_bytes();
  auto put = [&](const std::vector<std::uint8_t>& payload) {
    const auto f = frame(payload);
    image.insert(image.end(), f.begin(), f.end());
  };
  for (const auto& [device, next] : next_seq_) {
    // Floor at the first kept seq so replayed Enqueue records stay dense.
    std::uint64_t floor = next;
    for (const auto& item : kept_items) {
      if (item.request.device_id == device) floor = std::min(floor, item.seq);
    }
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(RecordType::kSeqFloor));
    w.str(device);
    w.u64(floor);
    put(std::move(w).take());
  }
  for (const auto& item : kept_items) {
    put(enqueue_record(item));
    if (item.state == OutboxState::kSubmitted) {
      put(key_record(RecordType::kSubmitted, item.request.device_id, item.seq));
    }
  }
  for (const auto& [device, rows] : rows_) {
    for (const auto& s : rows) {
      put(s.record ? local_record(device, *s.record) : event_row_record(device, s.row));
    }
  }
  for (const auto& [device, state] : checkpoints_) put(checkpoint_record(device, state));
  // Trailing floor restores next_seq past every confirmed item that was dropped.
  for (const auto& [device, next] : next_seq_) {
    ByteWriter w;
    w.u8(static_cast<std::uint8_t>(RecordType::kSeqFloor));
    w.str(device);
    w.u64(next);
    put(std::move(w).take());
  }

  const std::string tmp = path_ + ".tmp";
  {
    std::FILE* f = std::fopen(tmp.c_str(), "wb");
    if (!f) throw Error(ErrorCode::kIo, "cannot write " + tmp);
    const bool ok = std::fwrite(image.data(), 1, image.size(), f) == image.size() && std::fflush(f) == 0;
    if (sync_) ::fdatasync(fileno(f));
    std::fclose(f);
    if (!ok) throw Error(ErrorCode::kIo, "cannot write " + tmp);
  }
  std::fclose(file_);
  file_ = nullptr;
  std::filesystem::rename(tmp, path_);
  open_for_append();

  items_ = std::move(kept_items);
  item_index_.clear();
  for (std::size_t i = 0; i < items_.size(); ++i) {
    item_index_[{items_[i].request.device_id, items_[i].seq}] = i;
  }
}

std::int64_t backoff_after(std::uint32_t failures) {
  if (failures == 0) return 0;
  if (failures >= 3) return 120;
  return std::int64_t{30} << (failures - 1);
}

std::vector<Confirmation> drain(LocalStore& store, Ledger& ledger, Timestamp now,
                                const std::string& credential) {
  std::vector<Confirmation> out;
  std::set<std::string> parked;
  // Index loop: mark_* append to the file but never reallocate items().
  for (std::size_t i = 0; i < store.items().size(); ++i) {
    const OutboxItem& item = store.items()[i];
    if (item.state == OutboxState::kConfirmed) continue;
    const std::string device = item.request.device_id;
    const std::uint64_t seq = item.seq;
    if (parked.contains(device)) continue;
    if (now < item.next_attempt_at) {
      parked.insert(device);
      continue;
    }
    store.mark_submitted(device, seq);
    LedgerEntry entry;
    try {
      entry = ledger.submit(item.request, credential, now);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kLedgerOutage) throw;
      OutboxItem* live = store.find(device, seq);
      live->state = OutboxState::kPending;
      // attempts counts submissions; the failures since the last success drive backoff.
      live->next_attempt_at = now + backoff_after(live->attempts);
      parked.insert(device);
      continue;
    }
    if (store.injector() && store.injector()->should_crash()) throw SimulatedCrash{};
    store.mark_confirmed(device, seq, entry.index);
    out.push_back({device, seq, entry.index, now});
  }
  return out;
}

}  // namespace pizzamon
