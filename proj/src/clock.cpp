#include "pizzamon/clock.hpp"

#include "pizzamon/error.hpp"

namespace pizzamon {

void VirtualClock::schedule(Timestamp at, std::string tag) {
  if (at < now_) {
    throw Error(ErrorCode::kSchedulingInPast, "cannot schedule '" + tag + "' at " +
                                                  std::to_string(at.unix_seconds) + " before now " +
                                                  std::to_string(now_.unix_seconds));
  }
  queue_.emplace(std::make_pair(at, next_insertion_++), std::move(tag));
}

std::vector<ScheduledEvent> VirtualClock::advance_to(Timestamp target) {
  if (target < now_) {
    throw Error(ErrorCode::kSchedulingInPast, "cannot advance backwards");
  }
  std::vector<ScheduledEvent> fired;
  while (!queue_.empty() && queue_.begin()->first.first <= target) {
    auto node = queue_.extract(queue_.begin());
    fired.push_back({node.key().first, std::move(node.mapped())});
  }
  now_ = target;
  return fired;
}

bool VirtualClock::next_time(Timestamp& out) const {
  if (queue_.empty()) return false;
  out = queue_.begin()->first.first;
  return true;
}

}  // namespace pizzamon
