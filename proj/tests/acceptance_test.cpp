// End-to-end checks for the properties the engine promises.  Each test prints
// one [CRITERION k] PASS/FAIL line so a run reads as a checklist.

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include "densor/densor.hpp"
#include "testutil.hpp"

using densor::ChangeEvent;
using densor::DenseSelection;
using densor::EntryIndex;
using densor::SliceIndex;
using densor::SparseTensor;
using densor::StreamEngine;

namespace {

class Criterion {
  public:
    explicit Criterion(int id, std::string what) : id_(id), what_(std::move(what)) {}
    ~Criterion() {
        std::cout << "[CRITERION " << id_ << "] " << (::testing::Test::HasFailure() ? "FAIL" : "PASS")
                  << "  " << what_ << note_ << std::endl;
    }
    void note(const std::string& n) { note_ = "  (" + n + ")"; }

  private:
    int id_;
    std::string what_;
    std::string note_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::filesystem::path scratch_dir() {
    auto dir = std::filesystem::path(::testing::TempDir()) / "densor_acceptance";
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(Acceptance, SelfCheckedMixedStreams) {
    Criterion crit(1, "20 self-checked streams of 10000 mixed events each");
    auto t0 = std::chrono::steady_clock::now();
    auto dir = scratch_dir();
    std::mt19937_64 rng(101);
    std::vector<std::vector<std::uint32_t>> shapes = {
        {25, 25}, {20, 30}, {10, 40}, {24, 24}, {15, 35},
        {5, 25},  {30, 18}, {12, 12}, {22, 26}, {40, 10},
        {17, 17, 16}, {10, 20, 20}, {5, 15, 30}, {16, 16, 16}, {8, 21, 21},
        {4, 10, 12},  {6, 18, 24},  {12, 12, 12}, {20, 15, 15}, {9, 9, 32},
    };
    for (std::size_t i = 0; i < shapes.size(); ++i) {
        std::vector<ChangeEvent> events = testutil::random_events(rng, shapes[i], 10000, 0.35);
        std::filesystem::path f = dir / ("selfcheck_" + std::to_string(i) + ".csv");
        std::ofstream os(f);
        densor::write_events(os, shapes[i], events);
        os.close();
        std::string cmd = std::string(DENSOR_CLI_PATH) + " stream --self-check 1 " + f.string() +
                          " >/dev/null 2>" + (dir / "err.txt").string();
        int rc = std::system(cmd.c_str());
        int code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
        ASSERT_EQ(code, 0) << "stream " << i << " failed its self-check";
    }
    double dt = seconds_since(t0);
    EXPECT_LT(dt, 60.0);
    crit.note(std::to_string(dt).substr(0, 5) + "s");
}

TEST(Acceptance, DensityWithinOrderFactor) {
    Criterion crit(2, "detected density >= optimum/order, static and streamed");
    std::mt19937_64 rng(103);
    // one-shot detection against enumeration
    for (int rep = 0; rep < 1000; ++rep) {
        auto dims = testutil::random_dims(rng, 3, 14);
        SparseTensor t(dims);
        int n = std::uniform_int_distribution<int>(1, 30)(rng);
        for (int i = 0; i < n; ++i)
            t.apply_delta(testutil::random_entry(rng, dims),
                          std::uniform_int_distribution<int>(1, 9)(rng));
        if (t.nnz() == 0) continue;
        double got = densor::detect_static(t).density;
        double best = densor::brute_force_densest(t).density;
        double bound = best / static_cast<double>(dims.size());
        ASSERT_GE(got, bound - 1e-9 * std::max(1.0, bound)) << "rep " << rep;
    }
    // maintained detection after every one of 100 mixed streams
    for (int rep = 0; rep < 100; ++rep) {
        auto dims = testutil::random_dims(rng, 3, 14);
        StreamEngine eng(dims);
        auto events = testutil::random_events(rng, dims, 150, 0.35);
        std::size_t i = 0;
        for (const auto& ev : events) {
            if (ev.sign > 0) {
                eng.apply_increment(ev.entry, ev.delta);
            } else {
                eng.apply_decrement(ev.entry, ev.delta);
            }
            double best = densor::brute_force_densest(eng.tensor()).density;
            double bound = best / static_cast<double>(dims.size());
            ASSERT_GE(eng.selection_density(), bound - 1e-9 * std::max(1.0, bound))
                << "rep " << rep << " event " << i;
            ++i;
        }
    }
}

TEST(Acceptance, BlockAccountingGoldenValues) {
    Criterion crit(3, "planted 3x3x2 block: mass 19, in-block slice sum 8");
    SparseTensor t = testutil::example_332();
    std::vector<SliceIndex> s = testutil::block_332();
    EXPECT_EQ(t.mass_of(s), 19.0);
    EXPECT_EQ(t.slice_sum_in(s, {2, 2}), 8.0);
}

TEST(Acceptance, WindowedTensorMatchesAFreshFold) {
    Criterion crit(4, "sliding window equals a from-scratch fold, 21 streams");
    std::mt19937_64 rng(107);
    for (std::int64_t window : {1, 3, 10}) {
        for (int rep = 0; rep < 7; ++rep) {
            auto s = testutil::random_timed_increments(rng, 300, 3, 30);
            densor::AlertEngine eng(s.dims, window);
            std::vector<ChangeEvent> seen;
            for (const auto& ev : s.events) {
                eng.step({ev.time, ev.entry, ev.delta}, [](const densor::AlertRecord&) {});
                seen.push_back(ev);
                std::map<EntryIndex, double> want;
                for (const ChangeEvent& w : seen)
                    if (w.time > ev.time - window) want[w.entry] += w.delta;
                std::map<EntryIndex, double> got;
                eng.engine().tensor().for_each_entry(
                    [&](const EntryIndex& e, double v) { got[e] = v; });
                ASSERT_EQ(want, got) << "window " << window << " rep " << rep;
            }
            ASSERT_TRUE(eng.engine().verify().ok);
        }
    }
}

TEST(Acceptance, AlertDensityWithinOrderFactorOfWindowOptimum) {
    Criterion crit(5, "alert density >= window optimum/order while sliding");
    std::mt19937_64 rng(109);
    for (std::int64_t window : {1, 3, 10}) {
        for (int rep = 0; rep < 7; ++rep) {
            auto s = testutil::random_timed_increments(rng, 300, 3, 14);
            densor::AlertEngine eng(s.dims, window);
            for (const auto& ev : s.events) {
                eng.step({ev.time, ev.entry, ev.delta}, [](const densor::AlertRecord&) {});
                double best = densor::brute_force_densest(eng.engine().tensor()).density;
                double bound = best / static_cast<double>(s.dims.size());
                ASSERT_GE(eng.engine().selection_density(), bound - 1e-9 * std::max(1.0, bound))
                    << "window " << window << " rep " << rep;
            }
        }
    }
}

TEST(Acceptance, InjectedBlocksAreRecalled) {
    Criterion crit(6, "top-10 alerts recall injected blocks, 10 seeds");
    auto t0 = std::chrono::steady_clock::now();
    densor::InjectionSpec spec;
    spec.dims = {200, 200, 50, 5};
    spec.time_mode = 3;
    spec.wide_modes = {1, 2};
    spec.block_sizes = {3, 4, 5, 6, 7, 8, 9, 10, 11, 12};
    spec.block_value = 2.0;
    spec.background_events = 50000;

    double total = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        densor::InjectedStream g = densor::generate_injected(spec, seed);
        std::vector<densor::TimedEvent> events;
        events.reserve(g.events.size());
        for (const ChangeEvent& ev : g.events) events.push_back({ev.time, ev.entry, ev.delta});
        densor::AlertRunResult res = densor::run_alert(g.dims, events, 1, 10, 0.5);

        std::vector<std::vector<SliceIndex>> records;
        for (const densor::AlertRecord& r : res.top) records.push_back(r.slices->slices);
        double recall = densor::score_recall(records, g.blocks);
        total += recall;
    }
    double avg = total / 10.0;
    double dt = seconds_since(t0);
    EXPECT_GE(avg, 0.7);
    EXPECT_LT(dt, 120.0);
    crit.note("avg recall " + densor::fmt_double(avg) + ", " + std::to_string(dt).substr(0, 5) + "s");
}

TEST(Acceptance, UpdatesBeatFullRecomputation) {
    Criterion crit(7, "streamed updates are fast and stay fast as the tensor grows");
    std::mt19937_64 rng(113);
    std::vector<std::uint32_t> dims = {3000, 3000};
    testutil::ZipfPicker row(dims[0]), col(dims[1]);
    const std::size_t n = 100000;

    StreamEngine eng(dims);
    std::vector<double> times(n);
    for (std::size_t i = 0; i < n; ++i) {
        EntryIndex e = {row(rng), col(rng)};
        auto u0 = std::chrono::steady_clock::now();
        eng.apply_increment(e, 1.0);
        times[i] = seconds_since(u0);
    }
    double mean_update = 0;
    for (double t : times) mean_update += t;
    mean_update /= static_cast<double>(n);

    double head = 0, tail = 0;
    for (std::size_t i = 0; i < 10000; ++i) {
        head += times[i];
        tail += times[n - 10000 + i];
    }
    double growth = tail / head;

    auto s0 = std::chrono::steady_clock::now();
    DenseSelection fresh;
    const int reps = 5;
    for (int i = 0; i < reps; ++i) fresh = densor::detect_static(eng.tensor());
    double static_time = seconds_since(s0) / reps;

    double speedup = static_time / mean_update;
    EXPECT_GE(speedup, 100.0);
    EXPECT_LT(growth, 10.0);
    // both paths still agree on quality
    EXPECT_GE(eng.selection_density(), fresh.density - 1e-9);
    crit.note("speedup " + std::to_string(static_cast<long long>(speedup)) + "x, growth " +
              densor::fmt_double(growth) + ", nnz " + std::to_string(eng.tensor().nnz()));
}

TEST(Acceptance, EveryChangeHasAnExactUndo) {
    Criterion crit(8, "1000 increment/decrement pairs leave no residue");
    std::mt19937_64 rng(127);
    std::vector<std::uint32_t> dims = {15, 15, 12};
    StreamEngine eng(dims);
    for (const auto& ev : testutil::random_events(rng, dims, 500, 0.0))
        eng.apply_increment(ev.entry, ev.delta);

    std::map<EntryIndex, double> before;
    eng.tensor().for_each_entry([&](const EntryIndex& e, double v) { before[e] = v; });
    double mass = eng.tensor().total_mass();
    std::size_t nnz = eng.tensor().nnz();

    for (int i = 0; i < 1000; ++i) {
        EntryIndex e = testutil::random_entry(rng, dims);
        double v = std::uniform_int_distribution<int>(1, 9)(rng);
        eng.apply_increment(e, v);
        eng.apply_decrement(e, v);
    }

    std::map<EntryIndex, double> after;
    eng.tensor().for_each_entry([&](const EntryIndex& e, double v) { after[e] = v; });
    EXPECT_EQ(before, after);
    EXPECT_EQ(mass, eng.tensor().total_mass());
    EXPECT_EQ(nnz, eng.tensor().nnz());
    EXPECT_TRUE(eng.verify().ok);
}
