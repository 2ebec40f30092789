#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "densor/peel_heap.hpp"
#include "densor/sparse_tensor.hpp"
#include "densor/types.hpp"

namespace densor {

// Total order over the active slices, produced by repeatedly peeling the slice
// with the smallest sum in the remaining subtensor.  For the slice at position
// j, d is its sum in the subtensor induced by positions >= j (the value it was
// peeled at) and c is the running maximum of d over positions <= j.
//
// Positions are 0-based here; the CLI and reorder plans speak 1-based.
struct DOrdering {
    std::vector<SliceId> pi;          // position -> slice id
    std::vector<std::uint32_t> pos;   // slice id -> position
    std::vector<double> d;            // slice id -> peel-time sum
    std::vector<double> c;            // slice id -> prefix max of d

    std::size_t size() const { return pi.size(); }
};

// Peel driver with reusable scratch.  reorder() re-peels one position range and
// is also the full build when the range covers everything.
class Peeler {
public:
    // Peels positions [jl, jh] of o.pi against the subtensor induced by
    // positions >= jl, rewriting pi/pos/d for that range and c from jl to the
    // end.  Returns the c value at jh (the prefix max seen through the range).
    double reorder(const SparseTensor& t, DOrdering& o, std::uint32_t jl, std::uint32_t jh) {
        ensure(t);
        ++epoch_;
        const std::uint32_t order = t.order();
        for (std::uint32_t j = jl; j <= jh; ++j) {
            SliceId s = o.pi[j];
            in_region_[s] = epoch_;
            cur_[s] = 0.0;
        }
        // Regional sums: an entry counts while all of its slices sit at or past jl.
        for (std::uint32_t j = jl; j <= jh; ++j) {
            SliceId s = o.pi[j];
            for (std::uint32_t slot : t.slice_slots(s)) {
                if (entry_seen_[slot] != epoch_) {
                    entry_seen_[slot] = epoch_;
                    const EntryIndex& e = t.slot_coords(slot);
                    std::uint32_t mp = std::numeric_limits<std::uint32_t>::max();
                    for (std::uint32_t n = 0; n < order; ++n)
                        mp = std::min(mp, o.pos[t.sid_unchecked(n, e[n])]);
                    entry_live_[slot] = mp >= jl ? epoch_ : 0;
                }
                if (entry_live_[slot] == epoch_) cur_[s] += t.slot_value(slot);
            }
        }
        heap_.clear();
        for (std::uint32_t j = jl; j <= jh; ++j) {
            SliceId s = o.pi[j];
            heap_.push(cur_[s], t.slice_at(s), s);
        }
        double cmax = jl > 0 ? o.c[o.pi[jl - 1]] : 0.0;
        for (std::uint32_t j = jl; j <= jh; ++j) {
            SliceId s;
            for (;;) {
                PeelHeap::Item it = heap_.pop();
                if (peeled_[it.sid] == epoch_ || it.key != cur_[it.sid]) continue;
                s = it.sid;
                break;
            }
            o.pi[j] = s;
            o.pos[s] = j;
            o.d[s] = cur_[s];
            peeled_[s] = epoch_;
            if (o.d[s] > cmax) cmax = o.d[s];
            o.c[s] = cmax;
            for (std::uint32_t slot : t.slice_slots(s)) {
                if (entry_live_[slot] != epoch_) continue;
                entry_live_[slot] = 0;
                const EntryIndex& e = t.slot_coords(slot);
                double v = t.slot_value(slot);
                for (std::uint32_t n = 0; n < order; ++n) {
                    SliceId r = t.sid_unchecked(n, e[n]);
                    if (r == s || in_region_[r] != epoch_ || peeled_[r] == epoch_) continue;
                    cur_[r] -= v;
                    heap_.push(cur_[r], t.slice_at(r), r);
                }
            }
        }
        double cmax_at_jh = cmax;
        // d past jh is untouched by the re-peel but its prefix max may have moved.
        for (std::uint32_t j = jh + 1; j < o.size(); ++j) {
            SliceId s = o.pi[j];
            if (o.d[s] > cmax) cmax = o.d[s];
            o.c[s] = cmax;
        }
        return cmax_at_jh;
    }

    void build_full(const SparseTensor& t, DOrdering& o) {
        o.pi = t.active_slice_ids();
        o.pos.assign(t.slice_capacity(), 0);
        o.d.assign(t.slice_capacity(), 0.0);
        o.c.assign(t.slice_capacity(), 0.0);
        for (std::uint32_t j = 0; j < o.pi.size(); ++j) o.pos[o.pi[j]] = j;
        if (!o.pi.empty()) reorder(t, o, 0, static_cast<std::uint32_t>(o.pi.size()) - 1);
    }

private:
    void ensure(const SparseTensor& t) {
        if (cur_.size() < t.slice_capacity()) {
            cur_.resize(t.slice_capacity(), 0.0);
            in_region_.resize(t.slice_capacity(), 0);
            peeled_.resize(t.slice_capacity(), 0);
        }
        if (entry_seen_.size() < t.slot_capacity()) {
            entry_seen_.resize(t.slot_capacity(), 0);
            entry_live_.resize(t.slot_capacity(), 0);
        }
    }

    PeelHeap heap_;
    std::vector<double> cur_;
    std::vector<std::uint32_t> in_region_, peeled_;
    std::vector<std::uint32_t> entry_seen_, entry_live_;
    std::uint32_t epoch_ = 0;
};

// Full recheck of the ordering invariants against raw entries:
//   - pi and pos are mutually inverse over exactly the active slices
//   - cached d equals the recomputed peel-time sum (1e-9 relative)
//   - each slice is minimal in its own suffix (the peel property)
//   - cached c equals the running prefix max
inline Report verify_ordering(const SparseTensor& t, const DOrdering& o) {
    if (o.pi.size() != t.slice_count())
        return {false, "ordering covers " + std::to_string(o.pi.size()) + " slices, tensor has " +
                           std::to_string(t.slice_count())};
    std::vector<char> seen(t.slice_capacity(), 0);
    for (std::uint32_t j = 0; j < o.pi.size(); ++j) {
        SliceId s = o.pi[j];
        if (!t.slice_active(s)) return {false, "inactive slice in ordering at position " + std::to_string(j + 1)};
        if (seen[s]) return {false, "duplicate slice " + to_string(t.slice_at(s)) + " in ordering"};
        seen[s] = 1;
        if (o.pos[s] != j)
            return {false, "pos/pi mismatch for slice " + to_string(t.slice_at(s)) + " at position " +
                               std::to_string(j + 1)};
    }

    std::vector<double> cur(t.slice_capacity(), 0.0);
    t.for_each_entry([&](const EntryIndex& e, double v) {
        for (std::uint32_t n = 0; n < t.order(); ++n) cur[t.sid_unchecked(n, e[n])] += v;
    });
    PeelHeap heap;
    for (SliceId s : o.pi) heap.push(cur[s], t.slice_at(s), s);
    std::vector<char> peeled(t.slice_capacity(), 0);
    std::vector<char> dead(t.slot_capacity(), 0);
    double cmax = 0.0;
    for (std::uint32_t j = 0; j < o.pi.size(); ++j) {
        SliceId s = o.pi[j];
        if (!approx_eq(o.d[s], cur[s]))
            return {false, "cached d " + std::to_string(o.d[s]) + " != recomputed " + std::to_string(cur[s]) +
                               " for slice " + to_string(t.slice_at(s)) + " at position " + std::to_string(j + 1)};
        while (peeled[heap.top().sid] || heap.top().key != cur[heap.top().sid]) heap.pop();
        if (!approx_le(cur[s], heap.top().key))
            return {false, "slice " + to_string(t.slice_at(s)) + " at position " + std::to_string(j + 1) +
                               " has sum " + std::to_string(cur[s]) + " above suffix minimum " +
                               std::to_string(heap.top().key)};
        if (cur[s] > cmax) cmax = cur[s];
        if (!approx_eq(o.c[s], cmax))
            return {false, "cached c " + std::to_string(o.c[s]) + " != recomputed " + std::to_string(cmax) +
                               " for slice " + to_string(t.slice_at(s))};
        peeled[s] = 1;
        for (std::uint32_t slot : t.slice_slots(s)) {
            if (dead[slot]) continue;
            dead[slot] = 1;
            const EntryIndex& e = t.slot_coords(slot);
            double v = t.slot_value(slot);
            for (std::uint32_t n = 0; n < t.order(); ++n) {
                SliceId r = t.sid_unchecked(n, e[n]);
                if (r == s || peeled[r]) continue;
                cur[r] -= v;
                heap.push(cur[r], t.slice_at(r), r);
            }
        }
    }
    return {};
}

}  // namespace densor
