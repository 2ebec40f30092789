#pragma once

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "densor/types.hpp"

namespace densor {

struct Report {
    bool ok = true;
    std::string detail;
    explicit operator bool() const { return ok; }
};

// Result of a dense-subtensor search: the kept slice indices plus the mass and
// density of the subtensor they induce.  slices is kept sorted.
struct DenseSelection {
    std::vector<SliceIndex> slices;
    double mass = 0.0;
    double density = 0.0;
};

// N-way nonnegative sparse tensor with per-slice bookkeeping.
//
// Every (mode, coord) pair within dims gets a stable dense id (SliceId).
// grow_mode appends a new coordinate to one mode; retire_slice removes an
// emptied slice from the active set.  Entries live in slots so that per-slice
// entry sets can hold plain integers.
class SparseTensor {
public:
    explicit SparseTensor(std::vector<std::uint32_t> dims) : dims_(std::move(dims)) {
        if (dims_.size() < 2) throw std::invalid_argument("tensor order must be at least 2");
        mode_sids_.resize(dims_.size());
        for (std::uint32_t n = 0; n < dims_.size(); ++n) {
            if (dims_[n] == 0) throw std::invalid_argument("mode " + std::to_string(n + 1) + " has zero size");
            for (std::uint32_t i = 1; i <= dims_[n]; ++i) add_slice_record(n, i);
        }
    }

    std::uint32_t order() const { return static_cast<std::uint32_t>(dims_.size()); }
    const std::vector<std::uint32_t>& dims() const { return dims_; }

    std::size_t slice_count() const { return active_slices_; }
    std::size_t slice_capacity() const { return slice_index_.size(); }
    bool slice_active(SliceId s) const { return slice_active_[s]; }
    SliceIndex slice_at(SliceId s) const { return slice_index_[s]; }

    SliceId slice_id(const SliceIndex& q) const {
        if (q.mode == 0 || q.mode > dims_.size()) throw DataError("mode out of range: " + to_string(q));
        if (q.coord == 0 || q.coord > mode_sids_[q.mode - 1].size())
            throw DataError("coordinate out of range: " + to_string(q));
        SliceId s = mode_sids_[q.mode - 1][q.coord - 1];
        if (!slice_active_[s]) throw DataError("slice was removed: " + to_string(q));
        return s;
    }

    SliceId sid_unchecked(std::uint32_t mode0, std::uint32_t coord1) const {
        return mode_sids_[mode0][coord1 - 1];
    }

    // Active ids in (mode, coord) order; the canonical starting order for peels.
    std::vector<SliceId> active_slice_ids() const {
        std::vector<SliceId> out;
        out.reserve(active_slices_);
        for (std::uint32_t n = 0; n < mode_sids_.size(); ++n)
            for (SliceId s : mode_sids_[n])
                if (slice_active_[s]) out.push_back(s);
        return out;
    }

    double value_at(const EntryIndex& e) const {
        auto it = index_.find(e);
        return it == index_.end() ? 0.0 : entries_[it->second].value;
    }

    std::size_t nnz() const { return index_.size(); }
    double total_mass() const { return total_mass_; }
    double slice_sum(SliceId s) const { return slice_sums_[s]; }
    double slice_sum(const SliceIndex& q) const { return slice_sums_[slice_id(q)]; }

    // Adds delta to one cell.  Values may not go negative: an overshoot beyond
    // kZeroTol (relative to the old value) is a data error.  A result at or
    // below zero evicts the entry; the eviction subtracts the old value so an
    // increment followed by an equal decrement restores sums exactly.
    void apply_delta(const EntryIndex& e, double delta) {
        if (!std::isfinite(delta)) throw DataError("non-finite delta");
        check_entry(e);
        auto it = index_.find(e);
        double old = it == index_.end() ? 0.0 : entries_[it->second].value;
        double nv = old + delta;
        if (nv < -kZeroTol * std::max(1.0, old))
            throw DataError("delta " + std::to_string(delta) + " overshoots value " +
                            std::to_string(old) + " at " + to_string(e));
        if (delta == 0.0) return;
        if (nv <= 0.0) {
            if (it == index_.end()) return;
            std::uint32_t slot = it->second;
            for (std::uint32_t n = 0; n < dims_.size(); ++n) {
                SliceId s = sid_unchecked(n, e[n]);
                slice_slots_[s].erase(slot);
                slice_sums_[s] -= old;
            }
            total_mass_ -= old;
            index_.erase(it);
            entries_[slot].value = 0.0;
            free_slots_.push_back(slot);
            return;
        }
        std::uint32_t slot;
        if (it == index_.end()) {
            if (free_slots_.empty()) {
                slot = static_cast<std::uint32_t>(entries_.size());
                entries_.push_back({e, 0.0});
            } else {
                slot = free_slots_.back();
                free_slots_.pop_back();
                entries_[slot].coords = e;
            }
            index_.emplace(e, slot);
            for (std::uint32_t n = 0; n < dims_.size(); ++n) slice_slots_[sid_unchecked(n, e[n])].insert(slot);
        } else {
            slot = it->second;
        }
        entries_[slot].value = nv;
        for (std::uint32_t n = 0; n < dims_.size(); ++n) slice_sums_[sid_unchecked(n, e[n])] += delta;
        total_mass_ += delta;
    }

    // Subtensor views, all over an explicit slice set.
    double mass_of(const std::vector<SliceIndex>& s) const {
        if (s.empty()) throw std::invalid_argument("empty slice set");
        auto flags = member_flags(s);
        double m = 0.0;
        for (const auto& [coords, slot] : index_)
            if (entry_in(coords, flags)) m += entries_[slot].value;
        return m;
    }

    double density_of(const std::vector<SliceIndex>& s) const {
        if (s.empty()) throw std::invalid_argument("density of empty slice set");
        return mass_of(s) / static_cast<double>(distinct_count(s));
    }

    // Sum of entries of slice q that survive restriction to s.  q must be in s.
    double slice_sum_in(const std::vector<SliceIndex>& s, const SliceIndex& q) const {
        SliceId qs = slice_id(q);
        auto flags = member_flags(s);
        if (!flags[q.mode - 1][q.coord]) throw std::invalid_argument("slice " + to_string(q) + " not in set");
        double m = 0.0;
        for (std::uint32_t slot : slice_slots_[qs])
            if (entry_in(entries_[slot].coords, flags)) m += entries_[slot].value;
        return m;
    }

    SliceIndex grow_mode(std::uint32_t mode) {
        if (mode == 0 || mode > dims_.size()) throw std::invalid_argument("mode out of range");
        dims_[mode - 1] += 1;
        std::uint32_t coord = dims_[mode - 1];
        add_slice_record(mode - 1, coord);
        return {mode, coord};
    }

    void retire_slice(SliceId s) {
        if (!slice_slots_[s].empty()) throw std::logic_error("retiring non-empty slice");
        if (!slice_active_[s]) throw std::logic_error("slice already retired");
        slice_active_[s] = 0;
        --active_slices_;
    }

    // Entry access for the ordering machinery and oracles.
    const std::unordered_set<std::uint32_t>& slice_slots(SliceId s) const { return slice_slots_[s]; }
    const EntryIndex& slot_coords(std::uint32_t slot) const { return entries_[slot].coords; }
    double slot_value(std::uint32_t slot) const { return entries_[slot].value; }
    std::size_t slot_capacity() const { return entries_.size(); }

    template <class F>
    void for_each_entry(F&& f) const {
        for (const auto& [coords, slot] : index_) f(coords, entries_[slot].value);
    }

    // Recomputes sums and counts from raw entries and compares with the caches.
    Report check_consistency() const {
        std::vector<double> sums(slice_index_.size(), 0.0);
        double total = 0.0;
        for (const auto& [coords, slot] : index_) {
            double v = entries_[slot].value;
            if (!(v > 0.0)) return {false, "non-positive stored value at " + to_string(coords)};
            for (std::uint32_t n = 0; n < dims_.size(); ++n) sums[sid_unchecked(n, coords[n])] += v;
            total += v;
        }
        for (SliceId s = 0; s < slice_index_.size(); ++s) {
            if (!slice_active_[s]) continue;
            if (!approx_eq(sums[s], slice_sums_[s]))
                return {false, "slice sum drift at " + to_string(slice_index_[s]) + ": cached " +
                                   std::to_string(slice_sums_[s]) + " recomputed " + std::to_string(sums[s])};
        }
        if (!approx_eq(total, total_mass_)) return {false, "total mass drift"};
        return {};
    }

private:
    struct EntryRec {
        EntryIndex coords;
        double value = 0.0;
    };

    void add_slice_record(std::uint32_t mode0, std::uint32_t coord1) {
        SliceId s = static_cast<SliceId>(slice_index_.size());
        slice_index_.push_back({mode0 + 1, coord1});
        slice_active_.push_back(1);
        slice_sums_.push_back(0.0);
        slice_slots_.emplace_back();
        if (mode_sids_[mode0].size() < coord1) mode_sids_[mode0].resize(coord1);
        mode_sids_[mode0][coord1 - 1] = s;
        ++active_slices_;
    }

    void check_entry(const EntryIndex& e) const {
        if (e.size() != dims_.size()) throw DataError("entry arity " + std::to_string(e.size()) +
                                                      " does not match order " + std::to_string(dims_.size()));
        for (std::uint32_t n = 0; n < dims_.size(); ++n) {
            if (e[n] == 0 || e[n] > dims_[n]) throw DataError("coordinate out of range: " + to_string(e));
            if (!slice_active_[sid_unchecked(n, e[n])])
                throw DataError("entry addresses removed slice: " + to_string(e));
        }
    }

    // Per-mode membership bitmaps, coord-indexed (slot 0 unused).
    std::vector<std::vector<char>> member_flags(const std::vector<SliceIndex>& s) const {
        std::vector<std::vector<char>> flags(dims_.size());
        for (std::uint32_t n = 0; n < dims_.size(); ++n) flags[n].assign(dims_[n] + 1, 0);
        for (const SliceIndex& q : s) {
            slice_id(q);  // validates
            flags[q.mode - 1][q.coord] = 1;
        }
        return flags;
    }

    std::size_t distinct_count(const std::vector<SliceIndex>& s) const {
        std::vector<SliceIndex> u(s);
        std::sort(u.begin(), u.end());
        return static_cast<std::size_t>(std::unique(u.begin(), u.end()) - u.begin());
    }

    bool entry_in(const EntryIndex& e, const std::vector<std::vector<char>>& flags) const {
        for (std::uint32_t n = 0; n < e.size(); ++n)
            if (!flags[n][e[n]]) return false;
        return true;
    }

    std::vector<std::uint32_t> dims_;
    std::vector<std::vector<SliceId>> mode_sids_;
    std::vector<SliceIndex> slice_index_;
    std::vector<char> slice_active_;
    std::vector<double> slice_sums_;
    std::vector<std::unordered_set<std::uint32_t>> slice_slots_;
    std::vector<EntryRec> entries_;
    std::vector<std::uint32_t> free_slots_;
    std::unordered_map<EntryIndex, std::uint32_t, EntryIndexHash> index_;
    double total_mass_ = 0.0;
    std::size_t active_slices_ = 0;
};

}  // namespace densor
