#include "pizzamon/ledger.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "pizzamon/codec.hpp"
#include "pizzamon/error.hpp"

namespace pizzamon {
namespace {

constexpr ErrorCode kMalformed = ErrorCode::kMalformedPayload;

void check_reading_bounds(std::int16_t temp, std::uint16_t hum) {
  if (temp < kTempMinDecic || temp > kTempMaxDecic || hum > kHumMaxDecip) {
    throw Error(kMalformed, "reading outside sensor envelope");
  }
}

}  // namespace

const char* to_string(EntryKind k) {
  switch (k) {
    case EntryKind::kReadingBatch: return "ReadingBatch";
    case EntryKind::kAlert: return "Alert";
    case EntryKind::kResolution: return "Resolution";
    case EntryKind::kReportAnchor: return "ReportAnchor";
    case EntryKind::kAdminChange: return "AdminChange";
  }
  return "?";
}

std::optional<EntryKind> entry_kind_from_u8(std::uint8_t v) {
  if (v >= 1 && v <= 5) return static_cast<EntryKind>(v);
  return std::nullopt;
}

// ---- payload codecs ----

std::vector<std::uint8_t> encode(const BatchPayload& p) {
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(p.readings.size()));
  for (const auto& r : p.readings) {
    w.i64(r.at.unix_seconds);
    w.i16(r.temp_decicelsius);
    w.u16(r.humidity_decipercent);
  }
  return std::move(w).take();
}

std::vector<std::uint8_t> encode(const AlertPayload& p) {
  ByteWriter w;
  w.u64(p.episode_id);
  w.i64(p.since.unix_seconds);
  w.i16(p.temp_decic);
  w.u16(p.hum_decip);
  return std::move(w).take();
}

std::vector<std::uint8_t> encode(const ResolutionPayload& p) {
  ByteWriter w;
  w.u64(p.episode_id);
  w.i64(p.since.unix_seconds);
  w.u32(p.duration_s);
  w.i16(p.temp_decic);
  w.u16(p.hum_decip);
  return std::move(w).take();
}

std::vector<std::uint8_t> encode(const ReportAnchorPayload& p) {
  ByteWriter w;
  w.i32(p.day.days_since_epoch);
  w.digest(p.digest);
  w.u32(p.row_count);
  return std::move(w).take();
}

std::vector<std::uint8_t> encode(const AdminPayload& p) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(p.op));
  w.str(p.key);
  return std::move(w).take();
}

BatchPayload decode_batch(std::span<const std::uint8_t> b) {
  ByteReader r(b, kMalformed);
  BatchPayload p;
  const auto n = r.u16();
  if (n == 0) throw Error(kMalformed, "empty reading batch");
  p.readings.reserve(n);
  for (std::uint16_t i = 0; i < n; ++i) {
    Reading x;
    x.at = Timestamp{r.i64()};
    x.temp_decicelsius = r.i16();
    x.humidity_decipercent = r.u16();
    check_reading_bounds(x.temp_decicelsius, x.humidity_decipercent);
    if (!p.readings.empty() && x.at < p.readings.back().at) {
      throw Error(kMalformed, "batch readings out of timestamp order");
    }
    p.readings.push_back(std::move(x));
  }
  r.expect_done("reading batch");
  return p;
}

AlertPayload decode_alert(std::span<const std::uint8_t> b) {
  ByteReader r(b, kMalformed);
  AlertPayload p{r.u64(), Timestamp{r.i64()}, r.i16(), r.u16()};
  r.expect_done("alert");
  check_reading_bounds(p.temp_decic, p.hum_decip);
  return p;
}

ResolutionPayload decode_resolution(std::span<const std::uint8_t> b) {
  ByteReader r(b, kMalformed);
  ResolutionPayload p;
  p.episode_id = r.u64();
  p.since = Timestamp{r.i64()};
  p.duration_s = r.u32();
  p.temp_decic = r.i16();
  p.hum_decip = r.u16();
  r.expect_done("resolution");
  check_reading_bounds(p.temp_decic, p.hum_decip);
  return p;
}

ReportAnchorPayload decode_report_anchor(std::span<const std::uint8_t> b) {
  ByteReader r(b, kMalformed);
  ReportAnchorPayload p;
  p.day = Day{r.i32()};
  p.digest = r.digest();
  p.row_count = r.u32();
  r.expect_done("report anchor");
  return p;
}

AdminPayload decode_admin(std::span<const std::uint8_t> b) {
  ByteReader r(b, kMalformed);
  AdminPayload p;
  const auto op = r.u8();
  if (op != 1 && op != 2) throw Error(kMalformed, "unknown admin op");
  p.op = static_cast<AdminOp>(op);
  p.key = r.str();
  r.expect_done("admin change");
  if (p.key.empty()) throw Error(kMalformed, "empty key");
  return p;
}

// ---- hashing ----

std::vector<std::uint8_t> canonical_bytes(const LedgerEntry& e) {
  ByteWriter w;
  w.u64(e.index);
  w.u8(static_cast<std::uint8_t>(e.kind));
  w.str(e.device_id);
  w.u64(e.seq);
  w.i64(e.at.unix_seconds);
  w.bytes(e.payload);
  w.digest(e.prev_hash);
  return std::move(w).take();
}

Digest compute_entry_hash(const LedgerEntry& e) { return sha256(canonical_bytes(e)); }

VerificationReport verify_chain(std::span<const LedgerEntry> entries) {
  VerificationReport rep;
  Digest prev = kZeroDigest;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    auto fail = [&](std::string why) {
      rep.ok = false;
      rep.first_bad_index = i;
      rep.reason = std::move(why);
      return rep;
    };
    if (e.index != i) return fail("index out of sequence");
    if (e.prev_hash != prev) return fail("prev_hash does not link to previous entry");
    if (compute_entry_hash(e) != e.entry_hash) return fail("entry_hash mismatch");
    prev = e.entry_hash;
    rep.entries_checked = i + 1;
  }
  return rep;
}

// ---- persistence ----

std::vector<std::uint8_t> serialize_entries(std::span<const LedgerEntry> entries,
                                            const AtRestCipher* cipher) {
  ByteWriter w;
  w.raw(kLedgerMagic);
  for (const auto& e : entries) {
    auto body = canonical_bytes(e);
    body.insert(body.end(), e.entry_hash.begin(), e.entry_hash.end());
    if (cipher) body = cipher->seal(body);
    w.bytes(body);
  }
  return std::move(w).take();
}

ParsedLedger parse_entries(std::span<const std::uint8_t> bytes, const AtRestCipher* cipher) {
  ParsedLedger out;
  if (bytes.size() < kLedgerMagic.size() ||
      !std::equal(kLedgerMagic.begin(), kLedgerMagic.end(), bytes.begin())) {
    out.structural_error = "bad ledger magic";
    return out;
  }
  ByteReader file(bytes.subspan(kLedgerMagic.size()), ErrorCode::kCorruptStore);
  while (!file.done()) {
    try {
      auto body = file.bytes();
      if (cipher) body = cipher->open(body);
      ByteReader r(body, ErrorCode::kCorruptStore);
      LedgerEntry e;
      e.index = r.u64();
      const auto kind = entry_kind_from_u8(r.u8());
      if (!kind) throw Error(ErrorCode::kCorruptStore, "unknown entry kind");
      e.kind = *kind;
      e.device_id = r.str();
      e.seq = r.u64();
      e.at = Timestamp{r.i64()};
      e.payload = r.bytes();
      e.prev_hash = r.digest();
      e.entry_hash = r.digest();
      r.expect_done("ledger entry");
      out.entries.push_back(std::move(e));
    } catch (const Error& ex) {
      out.structural_error = "entry " + std::to_string(out.entries.size()) + ": " + ex.what();
      break;
    }
  }
  return out;
}

VerificationReport verify_ledger_bytes(std::span<const std::uint8_t> bytes, const AtRestCipher* cipher) {
  auto parsed = parse_entries(bytes, cipher);
  auto rep = verify_chain(parsed.entries);
  if (!rep.ok) return rep;
  if (parsed.structural_error) {
    rep.ok = false;
    rep.first_bad_index = parsed.entries.size();
    rep.reason = *parsed.structural_error;
  }
  return rep;
}

// ---- contract ----

Ledger::Ledger(std::string owner, std::set<std::string> writers, std::size_t batch_limit)
    : policy_{std::move(owner), std::move(writers)}, batch_limit_(batch_limit) {}

bool Ledger::in_outage(Timestamp t) const {
  return std::any_of(outages_.begin(), outages_.end(),
                     [&](const auto& w) { return w.first <= t && t < w.second; });
}

void Ledger::validate_payload(const LedgerRequest& req) const {
  switch (req.kind) {
    case EntryKind::kReadingBatch: {
      auto b = decode_batch(req.payload);
      if (b.readings.size() > batch_limit_) {
        throw Error(ErrorCode::kBatchTooLarge, "batch of " + std::to_string(b.readings.size()) +
                                                   " exceeds limit " + std::to_string(batch_limit_));
      }
      break;
    }
    case EntryKind::kAlert: decode_alert(req.payload); break;
    case EntryKind::kResolution: decode_resolution(req.payload); break;
    case EntryKind::kReportAnchor: decode_report_anchor(req.payload); break;
    case EntryKind::kAdminChange: decode_admin(req.payload); break;
  }
  if (req.device_id.empty()) throw Error(kMalformed, "empty device_id");
}

LedgerEntry Ledger::append(const LedgerRequest& req) {
  LedgerEntry e;
  e.index = entries_.size();
  e.kind = req.kind;
  e.device_id = req.device_id;
  e.seq = req.seq;
  e.at = req.at;
  e.payload = req.payload;
  e.prev_hash = entries_.empty() ? kZeroDigest : entries_.back().entry_hash;
  e.entry_hash = compute_entry_hash(e);
  by_key_.emplace(std::make_pair(e.device_id, e.seq), entries_.size());
  entries_.push_back(e);
  return e;
}

void Ledger::apply_admin(const LedgerEntry& e) {
  const auto p = decode_admin(e.payload);
  if (p.op == AdminOp::kGrant) {
    policy_.authorized_writers.insert(p.key);
  } else {
    policy_.authorized_writers.erase(p.key);
  }
}

LedgerEntry Ledger::submit(const LedgerRequest& request, const std::string& credential,
                           std::optional<Timestamp> now) {
  if (in_outage(now.value_or(request.at))) {
    throw Error(ErrorCode::kLedgerOutage, "ledger unavailable");
  }
  const bool admin = request.kind == EntryKind::kAdminChange;
  if (admin ? credential != policy_.owner : !policy_.may_write(credential)) {
    throw Error(ErrorCode::kUnauthorized, "credential '" + credential + "' may not submit " +
                                              to_string(request.kind));
  }
  if (auto it = by_key_.find({request.device_id, request.seq}); it != by_key_.end()) {
    return entries_[it->second];
  }
  validate_payload(request);
  auto e = append(request);
  if (admin) apply_admin(e);
  return e;
}

LedgerEntry Ledger::submit_reading_batch(const std::vector<Reading>& readings, std::uint64_t seq,
                                         Timestamp at, const std::string& credential,
                                         std::optional<Timestamp> now) {
  if (readings.empty()) throw Error(kMalformed, "empty reading batch");
  if (readings.size() > batch_limit_) {
    throw Error(ErrorCode::kBatchTooLarge, "batch of " + std::to_string(readings.size()) +
                                               " exceeds limit " + std::to_string(batch_limit_));
  }
  const std::string& device = readings.front().device_id;
  for (std::size_t i = 0; i < readings.size(); ++i) {
    if (readings[i].device_id != device) throw Error(kMalformed, "batch mixes devices");
    if (i > 0 && readings[i].at < readings[i - 1].at) throw Error(kMalformed, "batch not timestamp-ordered");
    if (!is_valid(readings[i])) throw Error(kMalformed, "reading outside sensor envelope");
  }
  return submit(LedgerRequest{EntryKind::kReadingBatch, device, seq, at, encode(BatchPayload{readings})},
                credential, now);
}

LedgerEntry Ledger::grant_writer(const std::string& key, std::uint64_t seq, Timestamp at,
                                 const std::string& credential) {
  return submit({EntryKind::kAdminChange, kAdminDevice, seq, at, encode(AdminPayload{AdminOp::kGrant, key})},
                credential);
}

LedgerEntry Ledger::revoke_writer(const std::string& key, std::uint64_t seq, Timestamp at,
                                  const std::string& credential) {
  return submit({EntryKind::kAdminChange, kAdminDevice, seq, at, encode(AdminPayload{AdminOp::kRevoke, key})},
                credential);
}

std::optional<LedgerEntry> Ledger::find(const std::string& device_id, std::uint64_t seq) const {
  if (auto it = by_key_.find({device_id, seq}); it != by_key_.end()) return entries_[it->second];
  return std::nullopt;
}

std::optional<ReportAnchorPayload> Ledger::find_report_anchor(const std::string& device_id, Day day) const {
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->kind != EntryKind::kReportAnchor || it->device_id != device_id) continue;
    auto p = decode_report_anchor(it->payload);
    if (p.day == day) return p;
  }
  return std::nullopt;
}

void Ledger::save(const std::string& path, const AtRestCipher* cipher) const {
  const auto bytes = to_bytes(cipher);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "cannot write ledger " + path);
}

Ledger Ledger::from_bytes(std::span<const std::uint8_t> bytes, std::string owner,
                          std::set<std::string> writers, const AtRestCipher* cipher) {
  auto parsed = parse_entries(bytes, cipher);
  if (parsed.structural_error) throw Error(ErrorCode::kCorruptStore, *parsed.structural_error);
  Ledger l(std::move(owner), std::move(writers));
  for (auto& e : parsed.entries) {
    l.by_key_.emplace(std::make_pair(e.device_id, e.seq), l.entries_.size());
    if (e.kind == EntryKind::kAdminChange) {
      try {
        l.apply_admin(e);
      } catch (const Error&) {
        // Leave policy untouched; verify() reports the damage.
      }
    }
    l.entries_.push_back(std::move(e));
  }
  return l;
}

Ledger Ledger::load(const std::string& path, std::string owner, std::set<std::string> writers,
                    const AtRestCipher* cipher) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open ledger " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes, std::move(owner), std::move(writers), cipher);
}

// ---- cost ----

std::uint64_t GasSchedule::gas_for(EntryKind k) const {
  auto it = gas_units.find(k);
  return it == gas_units.end() ? 0 : it->second;
}

GasSchedule GasSchedule::calibrated(double daily_usd, std::uint64_t txs_per_day, std::uint64_t gas_per_tx) {
  GasSchedule g;
  for (auto k : kContractOperations) g.gas_units[k] = gas_per_tx;
  g.fee_per_gas_usd = daily_usd / static_cast<double>(txs_per_day) / static_cast<double>(gas_per_tx);
  return g;
}

Day billing_day(const LedgerEntry& e) {
  if (e.kind == EntryKind::kReportAnchor) {
    try {
      return decode_report_anchor(e.payload).day;
    } catch (const Error&) {
    }
  }
  return day_of(e.at);
}

CostTally cost_report(std::span<const LedgerEntry> entries, Day day, const GasSchedule& schedule) {
  CostTally t;
  t.day = day;
  for (const auto& e : entries) {
    if (billing_day(e) != day) continue;
    ++t.tx_count[e.kind];
    ++t.total_txs;
    t.gas += schedule.gas_for(e.kind);
  }
  t.usd = static_cast<double>(t.gas) * schedule.fee_per_gas_usd;
  return t;
}

std::vector<CostTally> cost_by_day(std::span<const LedgerEntry> entries, const GasSchedule& schedule) {
  std::vector<Day> days;
  for (const auto& e : entries) days.push_back(billing_day(e));
  std::sort(days.begin(), days.end());
  days.erase(std::unique(days.begin(), days.end()), days.end());
  std::vector<CostTally> out;
  for (auto d : days) out.push_back(cost_report(entries, d, schedule));
  return out;
}

double annualized_usd(std::span<const CostTally> tallies) {
  if (tallies.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& t : tallies) sum += t.usd;
  return sum / static_cast<double>(tallies.size()) * 365.0;
}

}  // namespace pizzamon
