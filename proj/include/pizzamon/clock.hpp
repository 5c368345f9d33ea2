#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "pizzamon/types.hpp"

namespace pizzamon {

struct ScheduledEvent {
  Timestamp at;
  std::string tag;

  bool operator==(const ScheduledEvent&) const = default;
};

// Discrete-event clock. Events fire in timestamp order, ties in insertion
// order. Drive from one thread at a time.
class VirtualClock {
 public:
  explicit VirtualClock(Timestamp now = Timestamp{}) : now_(now) {}

  Timestamp now() const { return now_; }
  std::size_t pending() const { return queue_.size(); }

  // Throws Error(kSchedulingInPast) if at < now().
  void schedule(Timestamp at, std::string tag);

  // Pops every event with time <= target, in firing order, and moves now to
  // target. Throws Error(kSchedulingInPast) if target < now().
  std::vector<ScheduledEvent> advance_to(Timestamp target);

  // Next pending event time, if any.
  bool next_time(Timestamp& out) const;

 private:
  Timestamp now_;
  std::uint64_t next_insertion_ = 0;
  std::map<std::pair<Timestamp, std::uint64_t>, std::string> queue_;
};

}  // namespace pizzamon
