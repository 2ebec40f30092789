#include "densor/alert.hpp"

#include <gtest/gtest.h>

#include <map>

#include "testutil.hpp"

using densor::AlertDedup;
using densor::AlertEngine;
using densor::AlertRecord;
using densor::AlertRunResult;
using densor::EntryIndex;
using densor::SliceIndex;
using densor::TimedEvent;

TEST(Alert, WindowExpiryIsStrict) {
    // window 2, hits at t=0,1,3 on one cell: processing t=3 first expires the
    // t=0 event (due 2) and the t=1 event (due 3), leaving only the newest one
    AlertEngine eng({2, 2}, 2);
    std::vector<AlertRecord> rs = eng.step({0, {1, 1}, 1.0});
    ASSERT_EQ(rs.size(), 1u);
    EXPECT_DOUBLE_EQ(rs[0].density, 0.5);

    rs = eng.step({1, {1, 1}, 1.0});
    ASSERT_EQ(rs.size(), 1u);
    EXPECT_DOUBLE_EQ(rs[0].density, 1.0);

    rs = eng.step({3, {1, 1}, 1.0});
    ASSERT_EQ(rs.size(), 3u);  // two expiries, then the arrival
    EXPECT_EQ(rs[0].time, 2);
    EXPECT_DOUBLE_EQ(rs[0].density, 0.5);
    EXPECT_EQ(rs[1].time, 3);
    EXPECT_DOUBLE_EQ(rs[1].density, 0.0);
    EXPECT_EQ(rs[2].time, 3);
    EXPECT_DOUBLE_EQ(rs[2].density, 0.5);

    EXPECT_EQ(eng.engine().tensor().nnz(), 1u);
    EXPECT_DOUBLE_EQ(eng.engine().tensor().value_at({1, 1}), 1.0);
    EXPECT_EQ(eng.pending_events(), 1u);
}

TEST(Alert, RejectsTimeRegressionAndBadWindow) {
    AlertEngine eng({2, 2}, 2);
    eng.step({5, {1, 1}, 1.0});
    EXPECT_THROW(eng.step({4, {1, 1}, 1.0}), densor::DataError);
    EXPECT_NO_THROW(eng.step({5, {2, 2}, 1.0}));  // equal times are fine
    EXPECT_THROW(AlertEngine({2, 2}, 0), std::invalid_argument);
    EXPECT_THROW(AlertEngine({2, 2}, -3), std::invalid_argument);
}

TEST(Alert, RepeatedHitsPileUpThenDrain) {
    AlertEngine eng({2, 2}, 3);
    eng.step({0, {1, 1}, 1.0});
    eng.step({1, {1, 1}, 1.0});
    std::vector<AlertRecord> rs = eng.step({2, {1, 1}, 1.0});
    EXPECT_DOUBLE_EQ(rs.back().density, 1.5);  // 3 events alive on 2 slices

    rs = eng.step({10, {2, 2}, 1.0});  // everything from the pile has expired
    EXPECT_DOUBLE_EQ(rs.back().density, 0.5);
    EXPECT_EQ(eng.engine().tensor().nnz(), 1u);
}

TEST(Alert, BlockArrivalSpikesThenVanishes) {
    // a 4x4 block landing on one tick: mass 16 across 4+4+1 slices
    const std::uint32_t b = 4;
    std::vector<TimedEvent> events;
    for (std::uint32_t r = 1; r <= b; ++r)
        for (std::uint32_t c = 1; c <= b; ++c) events.push_back({2, {r, c, 3}, 1.0});
    events.push_back({9, {7, 7, 5}, 1.0});  // lone straggler after the window

    AlertRunResult res = densor::run_alert({8, 8, 6}, events, 1, 5, 0.5);
    double peak = 0;
    for (const auto& [t, dens] : res.trace) peak = std::max(peak, dens);
    EXPECT_DOUBLE_EQ(peak, 16.0 / 9.0);

    ASSERT_GE(res.top.size(), 2u);
    EXPECT_DOUBLE_EQ(res.top[0].density, 16.0 / 9.0);
    EXPECT_EQ(res.top[0].time, 2);
    ASSERT_EQ(res.top[0].slices->slices.size(), 9u);
    EXPECT_GT(res.top[0].density, res.top[1].density);

    EXPECT_EQ(res.peak_window_events, 16u);
    EXPECT_LE(res.peak_nnz, res.peak_window_events);
}

TEST(Alert, TwoSpikesMakeTwoGroups) {
    std::vector<TimedEvent> events;
    for (std::uint32_t r = 1; r <= 3; ++r)
        for (std::uint32_t c = 1; c <= 3; ++c) events.push_back({2, {r, c, 2}, 1.0});
    for (std::uint32_t r = 1; r <= 3; ++r)
        for (std::uint32_t c = 1; c <= 3; ++c) events.push_back({6, {r, c, 5}, 1.0});

    AlertRunResult res = densor::run_alert({4, 4, 6}, events, 1, 10, 0.5);
    ASSERT_GE(res.top.size(), 2u);
    EXPECT_DOUBLE_EQ(res.top[0].density, 9.0 / 7.0);
    EXPECT_DOUBLE_EQ(res.top[1].density, 9.0 / 7.0);
    EXPECT_EQ(std::min(res.top[0].time, res.top[1].time), 2);
    EXPECT_EQ(std::max(res.top[0].time, res.top[1].time), 6);
    // same rows and columns, different tick slice
    EXPECT_NE(res.top[0].slices->slices, res.top[1].slices->slices);
}

TEST(Alert, DedupKeepsThePeakOfARun) {
    AlertEngine eng({2, 2}, 3);
    AlertDedup dedup(3, 0.5);
    auto feed = [&](TimedEvent ev) { eng.step(ev, [&](const AlertRecord& r) { dedup.add(r); }); };
    feed({0, {1, 1}, 1.0});
    feed({1, {1, 1}, 1.0});
    feed({2, {1, 1}, 1.0});
    EXPECT_EQ(dedup.group_count(), 1u);
    std::vector<AlertRecord> top = dedup.top(5);
    ASSERT_EQ(top.size(), 1u);
    EXPECT_DOUBLE_EQ(top[0].density, 1.5);
    EXPECT_EQ(top[0].time, 2);
}

TEST(Alert, JaccardOverlap) {
    std::vector<SliceIndex> a = {{1, 1}, {1, 2}, {2, 1}};
    std::vector<SliceIndex> b = {{1, 2}, {2, 1}, {2, 2}};
    EXPECT_DOUBLE_EQ(densor::jaccard(a, a), 1.0);
    EXPECT_DOUBLE_EQ(densor::jaccard(a, b), 2.0 / 4.0);
    EXPECT_DOUBLE_EQ(densor::jaccard(a, {}), 0.0);
    EXPECT_DOUBLE_EQ(densor::jaccard({}, {}), 1.0);
}

TEST(Alert, TraceScalesWithTheDeltas) {
    std::mt19937_64 rng(41);
    auto s = testutil::random_timed_increments(rng, 150, 3, 30);
    std::vector<TimedEvent> base, scaled;
    for (const auto& ev : s.events) {
        base.push_back({ev.time, ev.entry, ev.delta});
        scaled.push_back({ev.time, ev.entry, 7.0 * ev.delta});
    }
    AlertRunResult rb = densor::run_alert(s.dims, base, 3, 5, 0.5);
    AlertRunResult rs = densor::run_alert(s.dims, scaled, 3, 5, 0.5);
    ASSERT_EQ(rb.trace.size(), rs.trace.size());
    for (std::size_t i = 0; i < rb.trace.size(); ++i) {
        EXPECT_EQ(rb.trace[i].first, rs.trace[i].first);
        EXPECT_DOUBLE_EQ(7.0 * rb.trace[i].second, rs.trace[i].second);
    }
}

TEST(Alert, TensorAlwaysMatchesTheLiveWindow) {
    std::mt19937_64 rng(43);
    for (std::int64_t window : {1, 3, 10}) {
        auto s = testutil::random_timed_increments(rng, 250, 3, 30);
        AlertEngine eng(s.dims, window);
        std::vector<TimedEvent> seen;
        for (const auto& ev : s.events) {
            TimedEvent te{ev.time, ev.entry, ev.delta};
            eng.step(te, [](const AlertRecord&) {});
            seen.push_back(te);

            std::map<EntryIndex, double> want;
            for (const TimedEvent& w : seen)
                if (w.time > te.time - window) want[w.entry] += w.delta;
            std::map<EntryIndex, double> got;
            eng.engine().tensor().for_each_entry([&](const EntryIndex& e, double v) { got[e] = v; });
            ASSERT_EQ(want, got) << "window " << window;
        }
        ASSERT_TRUE(eng.engine().verify().ok);
    }
}
