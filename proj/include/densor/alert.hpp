#pragma once

#include <cstdint>
#include <deque>
#include <utility>

#include "densor/stream.hpp"

namespace densor {

struct TimedEvent {
    std::int64_t time = 0;
    EntryIndex entry;
    double delta = 0.0;
};

// One maintained-selection report, emitted after every applied change.
struct AlertRecord {
    std::int64_t time = 0;
    double density = 0.0;
    double mass = 0.0;
    std::shared_ptr<const SelectionSnapshot> slices;
};

// Sliding-window wrapper: every increment at time t is undone when any event
// at time >= t + window is processed, so the tensor always holds exactly the
// events with time in (now - window, now].
class AlertEngine {
public:
    AlertEngine(std::vector<std::uint32_t> dims, std::int64_t window)
        : engine_(std::move(dims)), window_(window) {
        if (window < 1) throw std::invalid_argument("window must be a positive tick count");
    }

    template <class Sink>
    void step(const TimedEvent& ev, Sink&& emit) {
        if (started_ && ev.time < now_)
            throw DataError("event at time " + std::to_string(ev.time) + " after time " + std::to_string(now_));
        while (!pending_.empty() && pending_.front().due <= ev.time) {
            const Pending& p = pending_.front();
            engine_.apply_decrement(p.entry, p.delta);
            emit(record(p.due));
            pending_.pop_front();
        }
        engine_.apply_increment(ev.entry, ev.delta);
        pending_.push_back({ev.time + window_, ev.entry, ev.delta});
        started_ = true;
        now_ = ev.time;
        emit(record(ev.time));
        if (pending_.size() > peak_window_events_) peak_window_events_ = pending_.size();
        if (engine_.tensor().nnz() > peak_nnz_) peak_nnz_ = engine_.tensor().nnz();
    }

    std::vector<AlertRecord> step(const TimedEvent& ev) {
        std::vector<AlertRecord> out;
        step(ev, [&](const AlertRecord& r) { out.push_back(r); });
        return out;
    }

    const StreamEngine& engine() const { return engine_; }
    std::int64_t window() const { return window_; }
    std::int64_t now() const { return now_; }
    std::size_t pending_events() const { return pending_.size(); }
    std::size_t peak_nnz() const { return peak_nnz_; }
    std::size_t peak_window_events() const { return peak_window_events_; }

private:
    struct Pending {
        std::int64_t due;
        EntryIndex entry;
        double delta;
    };

    AlertRecord record(std::int64_t time) const {
        return {time, engine_.selection_density(), engine_.selection_mass(), engine_.snapshot()};
    }

    StreamEngine engine_;
    std::int64_t window_;
    std::deque<Pending> pending_;
    bool started_ = false;
    std::int64_t now_ = 0;
    std::size_t peak_nnz_ = 0;
    std::size_t peak_window_events_ = 0;
};

inline double jaccard(const std::vector<SliceIndex>& a, const std::vector<SliceIndex>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t i = 0, j = 0, inter = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

// Collapses runs of near-identical reports: records within `window` ticks of
// the previous one whose slice sets overlap by at least `min_jaccard` join the
// open run, which keeps only its densest record.
class AlertDedup {
public:
    AlertDedup(std::int64_t window, double min_jaccard) : window_(window), min_jaccard_(min_jaccard) {
        if (min_jaccard < 0.0 || min_jaccard > 1.0) throw std::invalid_argument("jaccard threshold must be in [0,1]");
    }

    void add(const AlertRecord& r) {
        if (!groups_.empty()) {
            Group& g = groups_.back();
            bool close = r.time - g.last_time <= window_ &&
                         (r.slices->version == g.last_slices->version ||
                          jaccard(r.slices->slices, g.last_slices->slices) >= min_jaccard_);
            if (close) {
                g.last_time = r.time;
                g.last_slices = r.slices;
                if (r.density > g.peak.density) g.peak = r;
                return;
            }
        }
        groups_.push_back({r, r.time, r.slices});
    }

    std::vector<AlertRecord> top(std::size_t k) const {
        std::vector<AlertRecord> out;
        out.reserve(groups_.size());
        for (const Group& g : groups_) out.push_back(g.peak);
        std::sort(out.begin(), out.end(), [](const AlertRecord& x, const AlertRecord& y) {
            if (x.density != y.density) return x.density > y.density;
            if (x.time != y.time) return x.time < y.time;
            return x.slices->slices < y.slices->slices;
        });
        if (out.size() > k) out.resize(k);
        return out;
    }

    std::size_t group_count() const { return groups_.size(); }

private:
    struct Group {
        AlertRecord peak;
        std::int64_t last_time;
        std::shared_ptr<const SelectionSnapshot> last_slices;
    };

    std::int64_t window_;
    double min_jaccard_;
    std::vector<Group> groups_;
};

struct AlertRunResult {
    std::vector<std::pair<std::int64_t, double>> trace;  // (time, density) per applied change
    std::vector<AlertRecord> top;
    std::size_t peak_nnz = 0;
    std::size_t peak_window_events = 0;
};

inline AlertRunResult run_alert(std::vector<std::uint32_t> dims, std::span<const TimedEvent> events,
                                std::int64_t window, std::size_t topk, double dedup_jaccard) {
    AlertEngine eng(std::move(dims), window);
    AlertDedup dedup(window, dedup_jaccard);
    AlertRunResult out;
    for (const TimedEvent& ev : events) {
        eng.step(ev, [&](const AlertRecord& r) {
            out.trace.emplace_back(r.time, r.density);
            dedup.add(r);
        });
    }
    out.top = dedup.top(topk);
    out.peak_nnz = eng.peak_nnz();
    out.peak_window_events = eng.peak_window_events();
    return out;
}

}  // namespace densor
