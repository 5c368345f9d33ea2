#include <gtest/gtest.h>

#include <map>

#include "pizzamon/error.hpp"
#include "pizzamon/monitor.hpp"
#include "pizzamon/rng.hpp"
#include "pizzamon/scenario.hpp"

using namespace pizzamon;

namespace {

const Timestamp t0 = kDefaultEpoch;

Reading at(std::int64_t offset, std::int16_t temp, std::uint16_t hum = 550) {
  return Reading{"fridge-1", t0 + offset, temp, hum};
}

// One reading per 30 s tick from t0, temperatures given by f(tick).
template <typename F>
std::vector<Reading> trace_of(std::int64_t ticks, F f) {
  std::vector<Reading> out;
  for (std::int64_t i = 0; i < ticks; ++i) out.push_back(at(30 * i, static_cast<std::int16_t>(f(i))));
  return out;
}

std::vector<MonitorEvent> of_kind(const std::vector<MonitorEvent>& events, EventKind k) {
  std::vector<MonitorEvent> out;
  for (const auto& e : events) {
    if (e.kind == k) out.push_back(e);
  }
  return out;
}

}  // namespace

TEST(Classify, ClosedBands) {
  const Thresholds t;
  EXPECT_EQ(classify(at(0, 60), t), Classification::kInRange);
  EXPECT_EQ(classify(at(0, 20), t), Classification::kInRange);
  EXPECT_EQ(classify(at(0, 61), t), Classification::kOutOfRange);
  EXPECT_EQ(classify(at(0, 19), t), Classification::kOutOfRange);
  EXPECT_EQ(classify(at(0, 40, 999), t), Classification::kOutOfRange);
  EXPECT_EQ(classify(at(0, 40, 400), t), Classification::kInRange);
  EXPECT_EQ(classify(at(0, 40, 651), t), Classification::kOutOfRange);
}

TEST(Classify, HysteresisBandIsStrict) {
  const Thresholds t;  // (23, 57)
  EXPECT_TRUE(inside_hysteresis_band(at(0, 56), t));
  EXPECT_FALSE(inside_hysteresis_band(at(0, 57), t));
  EXPECT_FALSE(inside_hysteresis_band(at(0, 23), t));
  EXPECT_TRUE(inside_hysteresis_band(at(0, 24), t));
  EXPECT_FALSE(inside_hysteresis_band(at(0, 40, 660), t));
}

TEST(Engine, QuietDayCadence) {
  const auto spec = make_scenario(ScenarioKind::kNormalDay, 7, kSecondsPerDay);
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, generate_trace(spec, Thresholds{}, kSecondsPerDay), t0, kSecondsPerDay);
  const auto logs = of_kind(events, EventKind::kLocalLogWritten);
  ASSERT_EQ(logs.size(), 72u);
  for (std::size_t i = 1; i < logs.size(); ++i) EXPECT_EQ(logs[i].at - logs[i - 1].at, 1200);
  EXPECT_EQ(of_kind(events, EventKind::kSampleTaken).size(), 2880u);
  // 12 anchoring events: batches every 2 h, the midnight slot taken by the report.
  const auto batches = of_kind(events, EventKind::kBatchAnchored);
  ASSERT_EQ(batches.size(), 11u);
  for (std::size_t i = 0; i < batches.size(); ++i) EXPECT_EQ(batches[i].at, t0 + 7200 * std::int64_t(i + 1));
  EXPECT_EQ(of_kind(events, EventKind::kDailyReportAnchored).size(), 1u);
  EXPECT_TRUE(of_kind(events, EventKind::kBreachStarted).empty());
  EXPECT_TRUE(of_kind(events, EventKind::kAlertDispatched).empty());
}

TEST(Engine, BatchWindowsTileTheDay) {
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, trace_of(2880, [](auto) { return 40; }), t0, kSecondsPerDay);
  Timestamp expected_begin = t0;
  for (const auto& b : of_kind(events, EventKind::kBatchAnchored)) {
    const auto& w = std::get<AnchorWindow>(b.payload);
    EXPECT_EQ(w.begin, expected_begin);
    EXPECT_EQ(w.end, b.at);
    expected_begin = w.end;
  }
  EXPECT_EQ(expected_begin, t0 + 22 * 3600);
}

TEST(Engine, EscalatesAtExactlyFortyMinutes) {
  // In range for 10 minutes, then out of range for 2 hours.
  const auto trace = trace_of(20 + 240, [](auto i) { return i < 20 ? 40 : 85; });
  const Timestamp onset = t0 + 600;
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, trace, t0, 30 * 260);
  const auto started = of_kind(events, EventKind::kBreachStarted);
  ASSERT_EQ(started.size(), 1u);
  EXPECT_EQ(started[0].at, onset);
  const auto crit = of_kind(events, EventKind::kCriticalEscalated);
  ASSERT_EQ(crit.size(), 1u);
  EXPECT_EQ(crit[0].at, onset + 2400);
  EXPECT_EQ((crit[0].at - onset) / 30, 80);
  for (const auto& e : events) {
    if (e.kind == EventKind::kAlertDispatched || e.kind == EventKind::kImageCaptured) EXPECT_EQ(e.at, onset + 2400);
  }
  EXPECT_EQ(of_kind(events, EventKind::kImageCaptured).size(), 1u);
  EXPECT_EQ(of_kind(events, EventKind::kAlertDispatched).size(), 1u);
}

TEST(Engine, NoEscalationOneTickEarly) {
  const auto trace = trace_of(80, [](auto) { return 85; });  // last sample at +2370
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, trace, t0, 30 * 80);
  EXPECT_EQ(of_kind(events, EventKind::kBreachStarted).size(), 1u);
  EXPECT_TRUE(of_kind(events, EventKind::kCriticalEscalated).empty());
}

TEST(Engine, ResolvesAfterTwoHysteresisSamples) {
  // Out of range from 0 to +3000, back at 4.0 C from t2 = +3000.
  const auto trace = trace_of(120, [](auto i) { return i < 100 ? 85 : 40; });
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, trace, t0, 30 * 120);
  const auto resolved = of_kind(events, EventKind::kBreachResolved);
  ASSERT_EQ(resolved.size(), 1u);
  EXPECT_EQ(resolved[0].at, t0 + 3000 + 30);
  const auto& info = std::get<ResolutionInfo>(resolved[0].payload);
  EXPECT_EQ(info.since, t0);
  EXPECT_EQ(info.duration_s, 3030);
  EXPECT_TRUE(info.reached_critical);
  const auto logs = of_kind(events, EventKind::kLocalLogWritten);
  for (const auto& l : logs) {
    if (l.at > resolved[0].at) EXPECT_EQ(std::get<LocalRecord>(l.payload).mode, MonitorMode::kNormal);
  }
}

TEST(Engine, ThresholdEdgeDoesNotResolve) {
  // 5.7 C is in range but on the hysteresis edge: the episode stays open.
  const auto trace = trace_of(200, [](auto i) { return i < 100 ? 85 : (i < 150 ? 57 : 56); });
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, trace, t0, 30 * 200);
  const auto resolved = of_kind(events, EventKind::kBreachResolved);
  ASSERT_EQ(resolved.size(), 1u);
  EXPECT_EQ(resolved[0].at, t0 + 30 * 151);
}

TEST(Engine, FlappingDoesNotStormAlerts) {
  // Alternating in/out never gives two consecutive hysteresis samples.
  const auto trace = trace_of(400, [](auto i) { return i % 2 ? 40 : 85; });
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, trace, t0, 30 * 400);
  EXPECT_EQ(of_kind(events, EventKind::kBreachStarted).size(), 1u);
  EXPECT_EQ(of_kind(events, EventKind::kCriticalEscalated).size(), 1u);
  EXPECT_EQ(of_kind(events, EventKind::kAlertDispatched).size(), 1u);
  EXPECT_TRUE(of_kind(events, EventKind::kBreachResolved).empty());
}

TEST(Engine, ShortExcursionResolvesWithoutCritical) {
  const auto trace = trace_of(40, [](auto i) { return (i >= 5 && i < 15) ? 70 : 40; });
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, trace, t0, 30 * 40);
  const auto resolved = of_kind(events, EventKind::kBreachResolved);
  ASSERT_EQ(resolved.size(), 1u);
  EXPECT_FALSE(std::get<ResolutionInfo>(resolved[0].payload).reached_critical);
  EXPECT_TRUE(of_kind(events, EventKind::kCriticalEscalated).empty());
}

TEST(Engine, CriticalLogsEveryThirtySeconds) {
  const auto trace = trace_of(400, [](auto i) { return (i >= 20 && i < 300) ? 85 : 40; });
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, trace, t0, 30 * 400);
  const auto crit = of_kind(events, EventKind::kCriticalEscalated).at(0).at;
  const auto resolved = of_kind(events, EventKind::kBreachResolved).at(0).at;
  std::vector<Timestamp> critical_logs;
  for (const auto& e : of_kind(events, EventKind::kLocalLogWritten)) {
    if (std::get<LocalRecord>(e.payload).mode == MonitorMode::kCritical) critical_logs.push_back(e.at);
  }
  ASSERT_FALSE(critical_logs.empty());
  EXPECT_EQ(critical_logs.front(), crit);
  EXPECT_EQ(critical_logs.back(), resolved - 30);
  for (std::size_t i = 1; i < critical_logs.size(); ++i) EXPECT_EQ(critical_logs[i] - critical_logs[i - 1], 30);
}

TEST(Engine, WindowStatsCoverSamplesSinceLastLog) {
  const auto trace = trace_of(41, [](auto i) { return 30 + (i % 7); });
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto logs = of_kind(run_engine(engine, trace, t0, 30 * 41), EventKind::kLocalLogWritten);
  ASSERT_EQ(logs.size(), 2u);
  const auto& second = std::get<LocalRecord>(logs[1].payload);
  std::int64_t sum = 0;
  int lo = 99, hi = 0;
  for (int i = 1; i <= 40; ++i) {
    sum += 30 + i % 7;
    lo = std::min(lo, 30 + i % 7);
    hi = std::max(hi, 30 + i % 7);
  }
  EXPECT_EQ(second.window_min_temp_decic, lo);
  EXPECT_EQ(second.window_max_temp_decic, hi);
  EXPECT_EQ(second.window_avg_temp_decic, (2 * sum + 40) / 80);
  EXPECT_TRUE(second.scheduled);
}

TEST(Engine, GapsAreTolerated) {
  auto trace = trace_of(200, [](auto i) { return i < 100 ? 85 : 40; });
  trace.erase(trace.begin() + 78, trace.begin() + 82);  // readings at +2340..+2430 missing
  const MonitorEngine engine("fridge-1", Thresholds{});
  const auto events = run_engine(engine, trace, t0, 30 * 200);
  const auto crit = of_kind(events, EventKind::kCriticalEscalated);
  ASSERT_EQ(crit.size(), 1u);
  EXPECT_EQ(crit[0].at, t0 + 30 * 82);
}

TEST(Engine, RejectsOutOfOrderAndForeignSamples) {
  const MonitorEngine engine("fridge-1", Thresholds{});
  MonitorState s = engine.step({}, at(0, 40), t0).state;
  EXPECT_THROW(engine.step(s, at(0, 40), t0), Error);
  try {
    engine.step(s, at(30, 40), t0 + 60);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kOutOfOrderSample);
  }
  Reading other = at(30, 40);
  other.device_id = "fridge-2";
  try {
    engine.step(s, other, t0 + 30);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMalformedPayload);
  }
  EXPECT_THROW(run_engine(engine, {at(15, 40)}, t0, 60), Error);
}

TEST(Engine, StateCodecRoundTrip) {
  const MonitorEngine engine("fridge-1", Thresholds{});
  MonitorState s;
  for (std::int64_t i = 0; i < 150; ++i) {
    s = engine.step(s, at(30 * i, i < 100 ? 85 : 40), t0 + 30 * i).state;
    ASSERT_EQ(decode_state(encode_state(s)), s);
  }
  auto bytes = encode_state(s);
  bytes.pop_back();
  EXPECT_THROW(decode_state(bytes), Error);
  bytes = encode_state(s);
  bytes[0] ^= 0xff;
  EXPECT_THROW(decode_state(bytes), Error);
}

TEST(Engine, FinishAnchorsTheLastDay) {
  const MonitorEngine engine("fridge-1", Thresholds{});
  EXPECT_TRUE(engine.finish(MonitorState{}, t0).empty());
  const auto s = engine.step({}, at(0, 40), t0).state;
  const auto tail = engine.finish(s, t0 + 30);
  ASSERT_EQ(tail.size(), 1u);
  EXPECT_EQ(tail[0].kind, EventKind::kDailyReportAnchored);
  EXPECT_EQ(std::get<ReportDay>(tail[0].payload).day, day_of(t0));
}

// Random traces: invariants hold for every episode.
TEST(EngineProperty, EpisodeInvariants) {
  Rng rng(2024);
  const Thresholds t;
  for (int round = 0; round < 60; ++round) {
    std::vector<Reading> trace;
    int temp = 40;
    std::int64_t ticks = 600 + rng.between(0, 2400);
    for (std::int64_t i = 0; i < ticks; ++i) {
      if (rng.below(40) == 0) temp = rng.below(3) == 0 ? 85 : 40;
      if (rng.below(50) == 0) continue;  // dropout
      trace.push_back(at(30 * i, static_cast<std::int16_t>(temp + rng.between(-3, 3))));
    }
    const MonitorEngine engine("fridge-1", t, round);
    const auto events = run_engine(engine, trace, t0, 30 * ticks);
    ASSERT_EQ(run_engine(engine, trace, t0, 30 * ticks), events);

    std::map<std::uint64_t, Timestamp> started;
    std::map<std::uint64_t, int> crit, images, alerts, resolved;
    std::optional<Timestamp> prev_log;
    MonitorMode mode = MonitorMode::kNormal;
    for (const auto& e : events) {
      const auto ep = e.episode_id();
      switch (e.kind) {
        case EventKind::kBreachStarted:
          ASSERT_FALSE(started.contains(ep));
          started[ep] = e.at;
          mode = MonitorMode::kBreachPending;
          break;
        case EventKind::kCriticalEscalated:
          ASSERT_TRUE(started.contains(ep));
          ASSERT_GE(e.at - started[ep], t.breach_escalation);
          ++crit[ep];
          mode = MonitorMode::kCritical;
          break;
        case EventKind::kImageCaptured:
          ++images[ep];
          break;
        case EventKind::kAlertDispatched:
          ++alerts[ep];
          break;
        case EventKind::kBreachResolved:
          ASSERT_TRUE(started.contains(ep));
          ++resolved[ep];
          mode = MonitorMode::kNormal;
          break;
        case EventKind::kLocalLogWritten: {
          const auto& rec = std::get<LocalRecord>(e.payload);
          ASSERT_EQ(rec.mode, mode);
          if (prev_log && mode == MonitorMode::kCritical && !rec.scheduled) {
            ASSERT_GE(e.at - *prev_log, t.critical_log_period);
          }
          prev_log = e.at;
          break;
        }
        default:
          break;
      }
    }
    for (const auto& [ep, n] : crit) {
      EXPECT_EQ(n, 1);
      EXPECT_EQ(images[ep], 1);
      EXPECT_EQ(alerts[ep], 1);
    }
    for (const auto& [ep, n] : resolved) EXPECT_EQ(n, 1);
  }
}
