#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pizzamon/digest.hpp"
#include "pizzamon/types.hpp"

namespace pizzamon {

// The contract surface: one entry kind per externally callable function.
enum class EntryKind : std::uint8_t {
  kReadingBatch = 1,
  kAlert = 2,
  kResolution = 3,
  kReportAnchor = 4,
  kAdminChange = 5,
};

inline constexpr std::array<EntryKind, 5> kContractOperations{
    EntryKind::kReadingBatch, EntryKind::kAlert, EntryKind::kResolution,
    EntryKind::kReportAnchor, EntryKind::kAdminChange};

const char* to_string(EntryKind k);
std::optional<EntryKind> entry_kind_from_u8(std::uint8_t v);

inline constexpr std::size_t kDefaultBatchLimit = 256;

// Compact payloads. Readings inside a batch carry no device id; the entry does.
struct BatchPayload {
  std::vector<Reading> readings;  // device_id left empty after decode
};

struct AlertPayload {
  std::uint64_t episode_id = 0;
  Timestamp since;
  std::int16_t temp_decic = 0;
  std::uint16_t hum_decip = 0;
  bool operator==(const AlertPayload&) const = default;
};

struct ResolutionPayload {
  std::uint64_t episode_id = 0;
  Timestamp since;
  std::uint32_t duration_s = 0;
  std::int16_t temp_decic = 0;
  std::uint16_t hum_decip = 0;
  bool operator==(const ResolutionPayload&) const = default;
};

struct ReportAnchorPayload {
  Day day;
  Digest digest{};
  std::uint32_t row_count = 0;
  bool operator==(const ReportAnchorPayload&) const = default;
};

enum class AdminOp : std::uint8_t { kGrant = 1, kRevoke = 2 };

struct AdminPayload {
  AdminOp op = AdminOp::kGrant;
  std::string key;
  bool operator==(const AdminPayload&) const = default;
};

std::vector<std::uint8_t> encode(const BatchPayload& p);
std::vector<std::uint8_t> encode(const AlertPayload& p);
std::vector<std::uint8_t> encode(const ResolutionPayload& p);
std::vector<std::uint8_t> encode(const ReportAnchorPayload& p);
std::vector<std::uint8_t> encode(const AdminPayload& p);

// Strict decoders: exact length, valid enums, readings inside sensor bounds.
// Throw Error(kMalformedPayload).
BatchPayload decode_batch(std::span<const std::uint8_t> b);
AlertPayload decode_alert(std::span<const std::uint8_t> b);
ResolutionPayload decode_resolution(std::span<const std::uint8_t> b);
ReportAnchorPayload decode_report_anchor(std::span<const std::uint8_t> b);
AdminPayload decode_admin(std::span<const std::uint8_t> b);

struct LedgerRequest {
  EntryKind kind = EntryKind::kReadingBatch;
  std::string device_id;
  std::uint64_t seq = 0;  // per-device idempotency key
  Timestamp at;
  std::vector<std::uint8_t> payload;
  bool operator==(const LedgerRequest&) const = default;
};

struct LedgerEntry {
  std::uint64_t index = 0;
  EntryKind kind = EntryKind::kReadingBatch;
  std::string device_id;
  std::uint64_t seq = 0;
  Timestamp at;
  std::vector<std::uint8_t> payload;
  Digest prev_hash{};
  Digest entry_hash{};
  bool operator==(const LedgerEntry&) const = default;
};

// index | kind | device_id | seq | at | payload | prev_hash, big-endian,
// strings and payload u32-length-prefixed.
std::vector<std::uint8_t> canonical_bytes(const LedgerEntry& e);
Digest compute_entry_hash(const LedgerEntry& e);

struct AccessPolicy {
  std::string owner;
  std::set<std::string> authorized_writers;

  bool may_write(const std::string& key) const {
    return key == owner || authorized_writers.contains(key);
  }
};

struct VerificationReport {
  bool ok = true;
  std::optional<std::uint64_t> first_bad_index;
  std::string reason;
  std::uint64_t entries_checked = 0;
};

VerificationReport verify_chain(std::span<const LedgerEntry> entries);

// At-rest transform applied to each persisted record body. Off by default;
// hashes always cover plaintext.
class AtRestCipher {
 public:
  virtual ~AtRestCipher() = default;
  virtual std::vector<std::uint8_t> seal(std::span<const std::uint8_t> plain) const = 0;
  virtual std::vector<std::uint8_t> open(std::span<const std::uint8_t> sealed) const = 0;
};

// File: 8-byte magic, then per entry `u32 len | canonical bytes | entry_hash`.
inline constexpr std::array<std::uint8_t, 8> kLedgerMagic{'P', 'Z', 'L', 'E', 'D', 'G', 'R', 1};

std::vector<std::uint8_t> serialize_entries(std::span<const LedgerEntry> entries,
                                            const AtRestCipher* cipher = nullptr);

struct ParsedLedger {
  std::vector<LedgerEntry> entries;
  // Set when the byte stream is structurally broken; entries holds the valid prefix.
  std::optional<std::string> structural_error;
};

ParsedLedger parse_entries(std::span<const std::uint8_t> bytes, const AtRestCipher* cipher = nullptr);

// Structure + chain check of a persisted ledger in one call.
VerificationReport verify_ledger_bytes(std::span<const std::uint8_t> bytes,
                                       const AtRestCipher* cipher = nullptr);

// In-process contract. Append-only, hash-chained, idempotent on (device_id, seq).
// Single writer: callers serialize submissions.
class Ledger {
 public:
  // `writers` are authorized at deployment, without an AdminChange entry.
  explicit Ledger(std::string owner, std::set<std::string> writers = {},
                  std::size_t batch_limit = kDefaultBatchLimit);

  // Throws Unauthorized, MalformedPayload, LedgerOutage (when `now` falls in an
  // outage window; `now` defaults to request.at). A repeated (device_id, seq)
  // returns the stored entry without appending.
  LedgerEntry submit(const LedgerRequest& request, const std::string& credential,
                     std::optional<Timestamp> now = std::nullopt);

  // Packs readings (same device, timestamp-ordered, non-empty) into one entry.
  // Throws BatchTooLarge above batch_limit, MalformedPayload otherwise.
  LedgerEntry submit_reading_batch(const std::vector<Reading>& readings, std::uint64_t seq,
                                   Timestamp at, const std::string& credential,
                                   std::optional<Timestamp> now = std::nullopt);

  // Owner-only authorization changes; recorded as AdminChange entries under
  // the device id "admin".
  LedgerEntry grant_writer(const std::string& key, std::uint64_t seq, Timestamp at,
                           const std::string& credential);
  LedgerEntry revoke_writer(const std::string& key, std::uint64_t seq, Timestamp at,
                            const std::string& credential);

  void add_outage(Timestamp start, Timestamp end) { outages_.emplace_back(start, end); }
  bool in_outage(Timestamp t) const;

  const std::vector<LedgerEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  const AccessPolicy& policy() const { return policy_; }
  std::size_t batch_limit() const { return batch_limit_; }

  std::optional<LedgerEntry> find(const std::string& device_id, std::uint64_t seq) const;
  // Latest ReportAnchor for (device, day).
  std::optional<ReportAnchorPayload> find_report_anchor(const std::string& device_id, Day day) const;

  VerificationReport verify() const { return verify_chain(entries_); }

  std::vector<std::uint8_t> to_bytes(const AtRestCipher* cipher = nullptr) const {
    return serialize_entries(entries_, cipher);
  }
  void save(const std::string& path, const AtRestCipher* cipher = nullptr) const;

  // Rebuilds a ledger from persisted bytes, replaying AdminChange entries into
  // the policy. Throws Error(kCorruptStore) on structural damage; hashes are
  // not checked here, use verify().
  static Ledger from_bytes(std::span<const std::uint8_t> bytes, std::string owner,
                           std::set<std::string> writers = {}, const AtRestCipher* cipher = nullptr);
  static Ledger load(const std::string& path, std::string owner, std::set<std::string> writers = {},
                     const AtRestCipher* cipher = nullptr);

 private:
  void validate_payload(const LedgerRequest& request) const;
  LedgerEntry append(const LedgerRequest& request);
  void apply_admin(const LedgerEntry& e);

  AccessPolicy policy_;
  std::size_t batch_limit_;
  std::vector<LedgerEntry> entries_;
  std::map<std::pair<std::string, std::uint64_t>, std::size_t> by_key_;
  std::vector<std::pair<Timestamp, Timestamp>> outages_;
};

inline constexpr const char* kAdminDevice = "admin";

// ---- cost accounting ----

struct GasSchedule {
  std::map<EntryKind, std::uint64_t> gas_units;
  double fee_per_gas_usd = 0.0;

  std::uint64_t gas_for(EntryKind k) const;

  // Uniform per-transaction gas, fee chosen so `txs_per_day` transactions cost
  // `daily_usd`. Defaults reproduce 12 tx/day at $0.0107/day.
  static GasSchedule calibrated(double daily_usd = 0.0107, std::uint64_t txs_per_day = 12,
                                std::uint64_t gas_per_tx = 50000);
};

struct CostTally {
  Day day;
  std::map<EntryKind, std::uint64_t> tx_count;
  std::uint64_t total_txs = 0;
  std::uint64_t gas = 0;
  double usd = 0.0;
};

// ReportAnchor entries count toward the day they anchor; everything else
// toward the UTC day of `at`.
Day billing_day(const LedgerEntry& e);

CostTally cost_report(std::span<const LedgerEntry> entries, Day day, const GasSchedule& schedule);
// One tally per billing day present in the ledger, ascending.
std::vector<CostTally> cost_by_day(std::span<const LedgerEntry> entries, const GasSchedule& schedule);
// Mean daily USD over the tallies x 365; 0 for no tallies.
double annualized_usd(std::span<const CostTally> tallies);

}  // namespace pizzamon
