#include <gtest/gtest.h>

#include <cmath>

#include "pizzamon/error.hpp"
#include "pizzamon/ledger.hpp"
#include "pizzamon/rng.hpp"

using namespace pizzamon;

namespace {

const Timestamp t0 = kDefaultEpoch;

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error";
  return ErrorCode::kIo;
}

std::vector<Reading> readings(std::size_t n, Timestamp from = t0, const std::string& dev = "fridge-1") {
  std::vector<Reading> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(Reading{dev, from + std::int64_t(1200 * i), static_cast<std::int16_t>(35 + i % 10), 550});
  }
  return out;
}

LedgerRequest alert_request(std::uint64_t seq, Timestamp at) {
  return LedgerRequest{EntryKind::kAlert, "fridge-1", seq, at, encode(AlertPayload{1, at - 2400, 85, 560})};
}

// Independent big-endian packer for the canonical-bytes oracle.
struct Packer {
  std::vector<std::uint8_t> out;
  void be(std::uint64_t v, int n) {
    for (int i = n - 1; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void blob(const void* p, std::size_t n) {
    be(n, 4);
    auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
};

}  // namespace

TEST(Ledger, GenesisEntry) {
  Ledger ledger("owner", {"gateway"});
  const auto e = ledger.submit(alert_request(0, t0 + 2400), "gateway");
  EXPECT_EQ(e.index, 0u);
  EXPECT_EQ(e.prev_hash, kZeroDigest);
  EXPECT_EQ(e.entry_hash, compute_entry_hash(e));
  EXPECT_TRUE(ledger.verify().ok);
}

TEST(Ledger, CanonicalBytesMatchHandPackedLayout) {
  LedgerEntry e;
  e.index = 3;
  e.kind = EntryKind::kAlert;
  e.device_id = "fridge-1";
  e.seq = 42;
  e.at = t0;
  e.payload = {0xde, 0xad, 0xbe, 0xef};
  e.prev_hash = sha256("prev");

  Packer p;
  p.be(3, 8);
  p.be(2, 1);
  p.blob("fridge-1", 8);
  p.be(42, 8);
  p.be(1735689600, 8);
  p.blob(e.payload.data(), e.payload.size());
  p.out.insert(p.out.end(), e.prev_hash.begin(), e.prev_hash.end());
  EXPECT_EQ(canonical_bytes(e), p.out);
  EXPECT_EQ(p.out.size(), 8u + 1 + 4 + 8 + 8 + 8 + 4 + 4 + 32);
  EXPECT_EQ(compute_entry_hash(e), sha256(std::span<const std::uint8_t>(p.out)));
}

TEST(Ledger, IdempotentOnDeviceAndSeq) {
  Ledger once("owner", {"gateway"});
  Ledger twice("owner", {"gateway"});
  const auto req = alert_request(0, t0 + 2400);
  const auto a = once.submit(req, "gateway");
  const auto b1 = twice.submit(req, "gateway");
  const auto b2 = twice.submit(req, "gateway");
  EXPECT_EQ(b1.entry_hash, b2.entry_hash);
  EXPECT_EQ(twice.size(), 1u);
  EXPECT_EQ(once.to_bytes(), twice.to_bytes());
  EXPECT_EQ(a, b1);
}

TEST(Ledger, UnauthorizedIsRejected) {
  Ledger ledger("owner", {"gateway"});
  EXPECT_EQ(code_of([&] { ledger.submit(alert_request(0, t0), "mallory"); }), ErrorCode::kUnauthorized);
  EXPECT_EQ(ledger.size(), 0u);
}

TEST(Ledger, AdminChangesAreOwnerOnly) {
  Ledger ledger("owner");
  EXPECT_EQ(code_of([&] { ledger.submit(alert_request(0, t0), "gateway"); }), ErrorCode::kUnauthorized);
  EXPECT_EQ(code_of([&] { ledger.grant_writer("gateway", 0, t0, "gateway"); }), ErrorCode::kUnauthorized);
  ledger.grant_writer("gateway", 0, t0, "owner");
  EXPECT_NO_THROW(ledger.submit(alert_request(0, t0 + 30), "gateway"));
  ledger.revoke_writer("gateway", 1, t0 + 60, "owner");
  EXPECT_EQ(code_of([&] { ledger.submit(alert_request(1, t0 + 90), "gateway"); }), ErrorCode::kUnauthorized);
  EXPECT_EQ(ledger.size(), 3u);

  // The persisted ledger replays admin changes into the policy.
  const auto reloaded = Ledger::from_bytes(ledger.to_bytes(), "owner");
  EXPECT_FALSE(reloaded.policy().may_write("gateway"));
  const auto granted_only = Ledger::from_bytes(serialize_entries(std::span(ledger.entries()).first(2)), "owner");
  EXPECT_TRUE(granted_only.policy().may_write("gateway"));
}

TEST(Ledger, BatchSubmission) {
  Ledger ledger("owner", {"gateway"});
  const auto e = ledger.submit_reading_batch(readings(4), 0, t0 + 7200, "gateway");
  EXPECT_EQ(ledger.size(), 1u);
  const auto batch = decode_batch(e.payload);
  ASSERT_EQ(batch.readings.size(), 4u);
  EXPECT_EQ(batch.readings[3].at, t0 + 3600);
  EXPECT_EQ(batch.readings[3].temp_decicelsius, 38);
  EXPECT_EQ(cost_report(ledger.entries(), day_of(t0), GasSchedule::calibrated()).total_txs, 1u);

  EXPECT_EQ(code_of([&] { ledger.submit_reading_batch({}, 1, t0, "gateway"); }), ErrorCode::kMalformedPayload);
  auto mixed = readings(2);
  mixed[1].device_id = "fridge-2";
  EXPECT_EQ(code_of([&] { ledger.submit_reading_batch(mixed, 1, t0, "gateway"); }), ErrorCode::kMalformedPayload);
  auto unordered = readings(2);
  std::swap(unordered[0], unordered[1]);
  EXPECT_EQ(code_of([&] { ledger.submit_reading_batch(unordered, 1, t0, "gateway"); }),
            ErrorCode::kMalformedPayload);
  Ledger small("owner", {"gateway"}, 3);
  EXPECT_EQ(code_of([&] { small.submit_reading_batch(readings(4), 0, t0, "gateway"); }), ErrorCode::kBatchTooLarge);
  EXPECT_EQ(ledger.size(), 1u);
}

TEST(Ledger, PayloadCodecsAreStrict) {
  const AlertPayload a{7, t0, -12, 999};
  EXPECT_EQ(decode_alert(encode(a)), a);
  const ResolutionPayload r{7, t0, 3000, 40, 550};
  EXPECT_EQ(decode_resolution(encode(r)), r);
  const ReportAnchorPayload p{day_of(t0), sha256("csv"), 72};
  EXPECT_EQ(decode_report_anchor(encode(p)), p);
  const AdminPayload ad{AdminOp::kRevoke, "gateway"};
  EXPECT_EQ(decode_admin(encode(ad)), ad);

  auto bytes = encode(a);
  bytes.push_back(0);
  EXPECT_EQ(code_of([&] { decode_alert(bytes); }), ErrorCode::kMalformedPayload);
  auto bad_admin = encode(ad);
  bad_admin[0] = 9;
  EXPECT_EQ(code_of([&] { decode_admin(bad_admin); }), ErrorCode::kMalformedPayload);
  EXPECT_EQ(code_of([&] { decode_alert(encode(AlertPayload{1, t0, 2000, 0})); }), ErrorCode::kMalformedPayload);

  Ledger ledger("owner", {"gateway"});
  LedgerRequest junk{EntryKind::kResolution, "fridge-1", 0, t0, {1, 2, 3}};
  EXPECT_EQ(code_of([&] { ledger.submit(junk, "gateway"); }), ErrorCode::kMalformedPayload);
}

TEST(Ledger, ExactlyFiveContractOperations) {
  EXPECT_EQ(kContractOperations.size(), 5u);
  std::set<EntryKind> distinct(kContractOperations.begin(), kContractOperations.end());
  EXPECT_EQ(distinct.size(), 5u);
  int valid = 0;
  for (int v = 0; v < 256; ++v) valid += entry_kind_from_u8(static_cast<std::uint8_t>(v)).has_value();
  EXPECT_EQ(valid, 5);
}

TEST(Ledger, FlippedBitIsLocated) {
  Ledger ledger("owner", {"gateway"});
  for (std::uint64_t i = 0; i < 1000; ++i) ledger.submit(alert_request(i, t0 + 30 * std::int64_t(i)), "gateway");
  EXPECT_TRUE(ledger.verify().ok);
  EXPECT_EQ(ledger.verify().entries_checked, 1000u);

  auto entries = ledger.entries();
  entries[500].payload[3] ^= 0x10;
  const auto rep = verify_chain(entries);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.first_bad_index, 500u);

  // Truncation keeps a valid prefix.
  std::vector<LedgerEntry> prefix(ledger.entries().begin(), ledger.entries().end() - 1);
  EXPECT_TRUE(verify_chain(prefix).ok);
}

TEST(Ledger, FileRoundTripAndMutations) {
  Ledger ledger("owner", {"gateway"});
  for (std::uint64_t i = 0; i < 20; ++i) ledger.submit_reading_batch(readings(6, t0 + 7200 * std::int64_t(i)), i, t0 + 7200 * std::int64_t(i + 1), "gateway");
  const auto bytes = ledger.to_bytes();
  const auto reloaded = Ledger::from_bytes(bytes, "owner", {"gateway"});
  EXPECT_EQ(reloaded.entries(), ledger.entries());
  EXPECT_TRUE(verify_ledger_bytes(bytes).ok);

  Rng rng(5);
  for (int i = 0; i < 300; ++i) {
    auto mutated = bytes;
    const auto bit = rng.below(mutated.size() * 8);
    mutated[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_FALSE(verify_ledger_bytes(mutated).ok) << "bit " << bit;
  }
  auto torn = bytes;
  torn.resize(torn.size() - 5);
  const auto rep = verify_ledger_bytes(torn);
  EXPECT_FALSE(rep.ok);
  EXPECT_EQ(rep.first_bad_index, 19u);
  EXPECT_THROW(Ledger::from_bytes(torn, "owner"), Error);
}

TEST(Ledger, AtRestCipherIsTransparentToHashes) {
  struct Xor : AtRestCipher {
    std::vector<std::uint8_t> seal(std::span<const std::uint8_t> p) const override {
      std::vector<std::uint8_t> out(p.begin(), p.end());
      for (auto& b : out) b ^= 0x5a;
      return out;
    }
    std::vector<std::uint8_t> open(std::span<const std::uint8_t> s) const override { return seal(s); }
  } cipher;
  Ledger ledger("owner", {"gateway"});
  ledger.submit(alert_request(0, t0), "gateway");
  const auto sealed = ledger.to_bytes(&cipher);
  EXPECT_NE(sealed, ledger.to_bytes());
  EXPECT_EQ(Ledger::from_bytes(sealed, "owner", {}, &cipher).entries(), ledger.entries());
  EXPECT_TRUE(verify_ledger_bytes(sealed, &cipher).ok);
}

TEST(Ledger, OutageWindowsRejectSubmissions) {
  Ledger ledger("owner", {"gateway"});
  ledger.add_outage(t0 + 100, t0 + 200);
  EXPECT_EQ(code_of([&] { ledger.submit(alert_request(0, t0 + 150), "gateway"); }), ErrorCode::kLedgerOutage);
  EXPECT_EQ(code_of([&] { ledger.submit(alert_request(0, t0), "gateway", t0 + 100); }), ErrorCode::kLedgerOutage);
  EXPECT_NO_THROW(ledger.submit(alert_request(0, t0 + 150), "gateway", t0 + 200));
}

TEST(LedgerProperty, RandomSubmissionsKeepChainValid) {
  Rng rng(77);
  Ledger ledger("owner", {"gateway"});
  std::size_t last_size = 0;
  std::map<std::string, std::uint64_t> seq;
  for (int i = 0; i < 400; ++i) {
    const std::string dev = "fridge-" + std::to_string(rng.below(3));
    const auto s = rng.below(5) == 0 && seq[dev] > 0 ? rng.below(seq[dev]) : seq[dev]++;
    const Timestamp at = t0 + 60 * std::int64_t(i);
    const auto cred = rng.below(10) == 0 ? "stranger" : "gateway";
    try {
      if (rng.below(2)) {
        ledger.submit_reading_batch(readings(1 + rng.below(12), at, dev), s, at, cred);
      } else {
        ledger.submit(LedgerRequest{EntryKind::kAlert, dev, s, at, encode(AlertPayload{s, at, 85, 500})}, cred);
      }
      EXPECT_STRNE(cred, "stranger");
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kUnauthorized);
    }
    ASSERT_GE(ledger.size(), last_size);
    last_size = ledger.size();
    ASSERT_TRUE(ledger.verify().ok);
  }
}

TEST(Cost, CalibratedQuietDay) {
  Ledger ledger("owner", {"gateway"});
  for (std::uint64_t i = 0; i < 11; ++i) {
    ledger.submit_reading_batch(readings(6, t0 + 7200 * std::int64_t(i)), i, t0 + 7200 * std::int64_t(i + 1), "gateway");
  }
  ledger.submit(LedgerRequest{EntryKind::kReportAnchor, "fridge-1", 11, t0 + kSecondsPerDay,
                              encode(ReportAnchorPayload{day_of(t0), sha256("r"), 72})},
                "gateway");
  const auto gas = GasSchedule::calibrated();
  const auto tally = cost_report(ledger.entries(), day_of(t0), gas);
  EXPECT_EQ(tally.total_txs, 12u);
  EXPECT_EQ(tally.tx_count.at(EntryKind::kReadingBatch), 11u);
  EXPECT_EQ(tally.tx_count.at(EntryKind::kReportAnchor), 1u);
  EXPECT_EQ(tally.gas, 12u * 50000u);
  EXPECT_NEAR(tally.usd, 0.0107, 1e-12);
  EXPECT_NEAR(gas.fee_per_gas_usd * 50000, 0.0107 / 12, 1e-15);
  // The report anchor written at midnight bills to the day it covers.
  EXPECT_EQ(cost_report(ledger.entries(), day_of(t0 + kSecondsPerDay), gas).total_txs, 0u);
}

TEST(Cost, AnnualisesAndHandlesEmptyDays) {
  const auto gas = GasSchedule::calibrated();
  EXPECT_EQ(cost_report({}, day_of(t0), gas).usd, 0.0);
  std::vector<CostTally> year(365);
  for (auto& t : year) t.usd = 0.0107;
  EXPECT_NEAR(annualized_usd(year), 3.9055, 1e-9);
  EXPECT_EQ(std::round(annualized_usd(year) * 100) / 100, 3.91);
  EXPECT_EQ(annualized_usd({}), 0.0);
}
