#include <gtest/gtest.h>

#include <random>

#include "sirenedge/decision.hpp"
#include "sirenedge/error.hpp"
#include "oracles.hpp"

using namespace sirenedge;
using namespace sirenedge::testing;

TEST(Smoothing, ConstantInput) {
  DecisionMachine m;
  m.smooth(0.9);
  m.smooth(0.9);
  EXPECT_DOUBLE_EQ(m.smooth(0.9), 0.9);
}

TEST(Smoothing, WarmUpMeanOfOne) {
  DecisionMachine m;
  EXPECT_EQ(m.smooth(0.6), 0.6);
}

TEST(Smoothing, HandArithmetic) {
  DecisionMachine m;
  m.smooth(0.0);
  m.smooth(0.3);
  EXPECT_DOUBLE_EQ(m.smooth(0.9), 0.4);
}

TEST(Decision, OnsetAtFirstFrameOfValidatedRun) {
  DecisionConfig cfg;
  cfg.smoothing_window = 1;
  DecisionMachine m(cfg);
  auto recs = stream_of({0.6, 0.6, 0.6});
  EXPECT_FALSE(m.step(recs[0]));
  EXPECT_FALSE(m.step(recs[1]));
  const auto t = m.step(recs[2]);
  ASSERT_TRUE(t);
  EXPECT_EQ(t->kind, Transition::Kind::Onset);
  EXPECT_EQ(t->t_s, recs[0].t_start_s);
}

TEST(Decision, BelowThresholdFrameResetsCounter) {
  DecisionConfig cfg;
  cfg.smoothing_window = 1;
  DecisionMachine m(cfg);
  auto recs = stream_of({0.6, 0.4, 0.6, 0.6, 0.6});
  std::optional<Transition> last;
  for (auto& r : recs) {
    auto t = m.step(r);
    if (t) last = t;
  }
  ASSERT_TRUE(last);
  EXPECT_EQ(last->t_s, recs[2].t_start_s);
}

TEST(Decision, AllZeroStreamNeverTransitions) {
  DecisionMachine m;
  for (auto& r : stream_of(std::vector<double>(100, 0.0))) ASSERT_FALSE(m.step(r));
  EXPECT_TRUE(m.finalize(40.0).empty());
}

TEST(Decision, FinalizeClosesOpenEventAtEnd) {
  DecisionConfig cfg;
  cfg.smoothing_window = 1;
  DecisionMachine m(cfg);
  for (auto& r : stream_of({0.9, 0.9, 0.9, 0.9})) m.step(r);
  EXPECT_EQ(m.phase(), DecisionMachine::Phase::Active);
  const auto events = m.finalize(10.0);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].offset_s, 10.0);
  EXPECT_EQ(events[0].onset_s, 0.0);
}

TEST(Decision, OffsetAtFirstFrameOfReleaseRun) {
  DecisionConfig cfg;
  cfg.smoothing_window = 1;
  DecisionMachine m(cfg);
  auto recs = stream_of({0.9, 0.9, 0.9, 0.2, 0.9, 0.2, 0.2, 0.2, 0.9});
  std::vector<Transition> ts;
  for (auto& r : recs)
    if (auto t = m.step(r)) ts.push_back(*t);
  ASSERT_EQ(ts.size(), 2u);
  EXPECT_EQ(ts[1].kind, Transition::Kind::Offset);
  EXPECT_EQ(ts[1].t_s, recs[5].t_start_s);
  ASSERT_EQ(m.events().size(), 1u);
  EXPECT_EQ(m.events()[0].n_frames, 5u);
}

TEST(Decision, OutOfOrderRecordIsRejected) {
  DecisionMachine m;
  InferenceRecord a{1.0, 9919, 0.1, 0, 0}, b{0.5, 9919, 0.1, 0, 0};
  m.step(a);
  try {
    m.step(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OrderViolation);
  }
}

TEST(Decision, ThresholdUpdateIsValidated) {
  DecisionMachine m;
  EXPECT_THROW(m.set_threshold(1.5), Error);
  EXPECT_EQ(m.config().event_threshold, 0.5);
  m.set_threshold(0.7);
  EXPECT_EQ(m.config().event_threshold, 0.7);
}

TEST(Decision, OnlineEqualsOfflineOnRandomStreams) {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    auto [recs, cfg] = random_decision_case(rng);
    const double end_t = recs.empty() ? 1.0 : recs.back().t_start_s + 1.0;
    DecisionMachine m(cfg);
    for (auto& r : recs) m.step(r);
    const auto online = m.finalize(end_t);
    ASSERT_EQ(online, offline_events(recs, cfg, end_t)) << "trial " << trial;
  }
}
