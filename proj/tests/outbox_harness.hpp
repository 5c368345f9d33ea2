#pragma once

// Crash-injection workload shared by the durability unit tests and the
// acceptance suite. A producer enqueues a fixed list of logical requests
// (each carries a unique payload) while draining into a ledger with outage
// windows. After a simulated crash the store is recovered and the producer
// resumes from what the store already holds, as a restarted process would.

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "pizzamon/ledger.hpp"
#include "pizzamon/store.hpp"

namespace pizzamon::testing {

struct OutboxWorkload {
  std::vector<LedgerRequest> requests;
  std::vector<std::pair<Timestamp, Timestamp>> outages;
  Timestamp start = kDefaultEpoch;
  std::int64_t step = 30;
  std::size_t enqueue_per_step = 2;
};

inline OutboxWorkload make_workload(std::size_t n, const std::vector<std::string>& devices) {
  OutboxWorkload w;
  for (std::size_t i = 0; i < n; ++i) {
    const Timestamp at = w.start + std::int64_t(30 * i);
    AlertPayload p{i + 1, at, static_cast<std::int16_t>(70 + i % 30), 550};
    w.requests.push_back({EntryKind::kAlert, devices[i % devices.size()], 0, at, encode(p)});
  }
  return w;
}

struct OutboxRunResult {
  std::uint64_t boundaries = 0;  // crash points passed on an uninterrupted run
  bool crashed = false;
  Ledger ledger{"owner", {"gateway"}};
};

inline Ledger make_ledger(const OutboxWorkload& w) {
  Ledger ledger("owner", {"gateway"});
  for (auto [a, b] : w.outages) ledger.add_outage(a, b);
  return ledger;
}

// Runs the workload once, crashing at boundary `crash_at` (0 = never), then
// recovers and finishes without injection.
inline OutboxRunResult run_outbox_workload(const OutboxWorkload& w, const std::string& path,
                                           std::uint64_t crash_at) {
  OutboxRunResult out;
  out.ledger = make_ledger(w);
  std::filesystem::remove(path);

  auto already_enqueued = [](const LocalStore& store) {
    std::set<std::vector<std::uint8_t>> have;
    for (const auto& item : store.items()) have.insert(item.request.payload);
    return have;
  };

  auto run = [&](CrashInjector* injector, Timestamp& now) {
    auto [store, report] = LocalStore::recover(path, injector);
    store.set_sync(false);
    auto have = already_enqueued(store);
    std::size_t next = 0;
    while (true) {
      std::size_t added = 0;
      while (next < w.requests.size() && added < w.enqueue_per_step) {
        if (!have.contains(w.requests[next].payload)) {
          store.enqueue(w.requests[next], now);
          ++added;
        }
        ++next;
      }
      drain(store, out.ledger, now, "gateway");
      if (next >= w.requests.size() && store.pending_count() == 0) break;
      now = now + w.step;
    }
  };

  Timestamp now = w.start;
  CrashInjector injector = crash_at ? CrashInjector(crash_at) : CrashInjector();
  try {
    run(&injector, now);
  } catch (const SimulatedCrash&) {
    out.crashed = true;
    run(nullptr, now);
  }
  out.boundaries = injector.hits();
  return out;
}

// Empty when every logical request is on the ledger exactly once, per-device
// seqs are in order and the chain verifies; otherwise a description.
inline std::string check_exactly_once(const OutboxWorkload& w, const Ledger& ledger) {
  std::map<std::vector<std::uint8_t>, int> seen;
  std::map<std::string, std::uint64_t> last_seq;
  for (const auto& e : ledger.entries()) {
    ++seen[e.payload];
    auto it = last_seq.find(e.device_id);
    if (it != last_seq.end() && e.seq <= it->second) return "seq order broken for " + e.device_id;
    last_seq[e.device_id] = e.seq;
  }
  for (const auto& r : w.requests) {
    const int n = seen[r.payload];
    if (n != 1) return "request at " + std::to_string(r.at.unix_seconds) + " on ledger " + std::to_string(n) + " times";
  }
  if (ledger.size() != w.requests.size()) return "unexpected extra entries";
  const auto v = ledger.verify();
  if (!v.ok) return "chain: " + v.reason;
  return {};
}

}  // namespace pizzamon::testing
