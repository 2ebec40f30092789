#pragma once

#include <memory>
#include <span>

#include "densor/detect.hpp"
#include "densor/ordering.hpp"
#include "densor/sparse_tensor.hpp"

namespace densor {

// Position range [jl, jh] (0-based) to re-peel after one cell change, plus the
// changed cell's earliest slice.
struct RegionBounds {
    std::uint32_t jl = 0, jh = 0;
    SliceId qf = 0;
};

// After raising one cell by delta, positions before the cell's earliest slice
// keep their peel values, and so does every position from the first later
// slice whose cached d already clears d(q_f) + delta.
inline RegionBounds increment_region(const DOrdering& o, std::span<const SliceId> entry_slices, double delta) {
    SliceId qf = entry_slices[0];
    for (SliceId s : entry_slices)
        if (o.pos[s] < o.pos[qf]) qf = s;
    std::uint32_t jl = o.pos[qf];
    std::uint32_t size = static_cast<std::uint32_t>(o.size());
    std::uint32_t jh = size - 1;
    double thr = o.d[qf] + delta;
    for (std::uint32_t j = jl + 1; j < size; ++j) {
        if (o.d[o.pi[j]] >= thr) {
            jh = j - 1;
            break;
        }
    }
    return {jl, jh, qf};
}

// After lowering one cell by delta, the region starts at the first position
// whose cached d still exceeds c(q_f) - delta and ends before the first
// position past q_f whose cached d reaches c(q_f).
inline RegionBounds decrement_region(const DOrdering& o, std::span<const SliceId> entry_slices, double delta) {
    SliceId qf = entry_slices[0];
    for (SliceId s : entry_slices)
        if (o.pos[s] < o.pos[qf]) qf = s;
    double cf = o.c[qf];
    std::uint32_t size = static_cast<std::uint32_t>(o.size());
    std::uint32_t jl = o.pos[qf];
    for (std::uint32_t j = 0; j <= o.pos[qf]; ++j) {
        if (o.d[o.pi[j]] > cf - delta) {
            jl = j;
            break;
        }
    }
    std::uint32_t jh = size - 1;
    for (std::uint32_t j = o.pos[qf] + 1; j < size; ++j) {
        if (o.d[o.pi[j]] >= cf) {
            jh = j - 1;
            break;
        }
    }
    return {jl, jh, qf};
}

// Public view of a planned re-peel; positions are 1-based here.
struct ReorderPlan {
    std::uint32_t j_lo = 0, j_hi = 0;
    SliceIndex q_f;
    std::vector<SliceIndex> region;  // slices currently at positions [j_lo, j_hi]
    double c_seed = 0.0;             // c just before the region, 0 at the front
};

// Immutable copy of the current selection's slice set, shared by alert records
// so long runs don't clone the set on every event.
struct SelectionSnapshot {
    std::vector<SliceIndex> slices;
    std::uint64_t version = 0;
};

// Maintains a peel ordering and a dense selection across single-cell updates.
// Each update re-peels only the region around the changed cell, then decides
// in O(1) whether the selection scan needs to rerun.
class StreamEngine {
public:
    explicit StreamEngine(std::vector<std::uint32_t> dims) : tensor_(std::move(dims)) {
        peeler_.build_full(tensor_, ord_);
        sel_member_.assign(tensor_.slice_capacity(), 0);
        rescan_selection(true);
        recomputed_ = false;
    }

    void apply_increment(const EntryIndex& e, double delta) {
        if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("increment delta must be positive");
        resolve(e);
        tensor_.apply_delta(e, delta);
        RegionBounds rb = increment_region(ord_, sids_, delta);
        double cmax = peeler_.reorder(tensor_, ord_, rb.jl, rb.jh);
        if (entry_selected()) {
            sel_mass_ += delta;
            sel_density_ = sel_mass_ / static_cast<double>(sel_ids_.size());
        }
        recomputed_ = false;
        if (cmax >= sel_density_ || approx_eq(cmax, sel_density_)) {
            rescan_selection(false);
            recomputed_ = true;
        }
    }

    void apply_decrement(const EntryIndex& e, double delta) {
        if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("decrement delta must be positive");
        resolve(e);
        bool in_sel = entry_selected();
        tensor_.apply_delta(e, -delta);
        RegionBounds rb = decrement_region(ord_, sids_, delta);
        peeler_.reorder(tensor_, ord_, rb.jl, rb.jh);
        recomputed_ = false;
        if (in_sel) {
            sel_mass_ -= delta;
            sel_density_ = sel_ids_.empty() ? 0.0 : sel_mass_ / static_cast<double>(sel_ids_.size());
            rescan_selection(false);
            recomputed_ = true;
        }
    }

    ReorderPlan plan_increment(const EntryIndex& e, double delta) const {
        if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("increment delta must be positive");
        return to_plan(increment_region(ord_, resolve_copy(e), delta));
    }

    ReorderPlan plan_decrement(const EntryIndex& e, double delta) const {
        if (!(delta > 0.0) || !std::isfinite(delta)) throw std::invalid_argument("decrement delta must be positive");
        if (tensor_.value_at(e) + kZeroTol * std::max(1.0, tensor_.value_at(e)) < delta)
            throw DataError("decrement " + std::to_string(delta) + " overshoots value " +
                            std::to_string(tensor_.value_at(e)) + " at " + to_string(e));
        return to_plan(decrement_region(ord_, resolve_copy(e), delta));
    }

    // New trailing coordinate on one mode.  The empty slice enters at the front
    // of the ordering with d = c = 0; nothing else moves.
    SliceIndex add_slice(std::uint32_t mode) {
        SliceIndex q = tensor_.grow_mode(mode);
        SliceId s = tensor_.slice_id(q);
        ord_.pos.resize(tensor_.slice_capacity(), 0);
        ord_.d.resize(tensor_.slice_capacity(), 0.0);
        ord_.c.resize(tensor_.slice_capacity(), 0.0);
        sel_member_.resize(tensor_.slice_capacity(), 0);
        ord_.pi.insert(ord_.pi.begin(), s);
        for (std::uint32_t j = 0; j < ord_.pi.size(); ++j) ord_.pos[ord_.pi[j]] = j;
        ord_.d[s] = 0.0;
        ord_.c[s] = 0.0;
        return q;
    }

    // Drains the slice entry by entry through apply_decrement, then drops it
    // from the ordering.  The selection rescans if it referenced the slice.
    void remove_slice(const SliceIndex& q) {
        SliceId s = tensor_.slice_id(q);
        std::vector<std::pair<EntryIndex, double>> owned;
        owned.reserve(tensor_.slice_slots(s).size());
        for (std::uint32_t slot : tensor_.slice_slots(s))
            owned.emplace_back(tensor_.slot_coords(slot), tensor_.slot_value(slot));
        for (const auto& [entry, value] : owned) apply_decrement(entry, value);
        std::uint32_t j = ord_.pos[s];
        ord_.pi.erase(ord_.pi.begin() + j);
        for (std::uint32_t k = j; k < ord_.pi.size(); ++k) ord_.pos[ord_.pi[k]] = k;
        tensor_.retire_slice(s);
        if (sel_member_[s]) {
            sel_member_[s] = 0;
            rescan_selection(true);
        }
    }

    const SparseTensor& tensor() const { return tensor_; }
    const DOrdering& ordering() const { return ord_; }

    double selection_density() const { return sel_density_; }
    double selection_mass() const { return sel_mass_; }
    std::uint64_t selection_version() const { return sel_version_; }
    bool last_update_recomputed() const { return recomputed_; }

    DenseSelection selection() const {
        DenseSelection out;
        out.mass = sel_mass_;
        out.density = sel_density_;
        out.slices = snapshot()->slices;
        return out;
    }

    std::shared_ptr<const SelectionSnapshot> snapshot() const {
        if (!snapshot_) {
            auto sn = std::make_shared<SelectionSnapshot>();
            sn->slices.reserve(sel_ids_.size());
            for (SliceId s : sel_ids_) sn->slices.push_back(tensor_.slice_at(s));
            std::sort(sn->slices.begin(), sn->slices.end());
            sn->version = sel_version_;
            snapshot_ = std::move(sn);
        }
        return snapshot_;
    }

    // Fresh suffix scan without touching the maintained selection.
    DenseSelection run_find_slices() const { return find_slices(tensor_, ord_); }

    // Whether all of the cell's slices sit in the current selection.
    bool contains(const EntryIndex& e) const {
        for (SliceId s : resolve_copy(e))
            if (!sel_member_[s]) return false;
        return true;
    }

    Report verify() const {
        Report r = verify_ordering(tensor_, ord_);
        if (!r.ok) return r;
        if (tensor_.nnz() > 0 && sel_ids_.empty()) return {false, "empty selection on a non-empty tensor"};
        if (!sel_ids_.empty()) {
            DenseSelection cur = selection();
            double mass = tensor_.mass_of(cur.slices);
            if (!approx_eq(mass, sel_mass_))
                return {false, "selection mass drift: kept " + std::to_string(sel_mass_) + ", tensor says " +
                                   std::to_string(mass)};
            double dens = sel_mass_ / static_cast<double>(sel_ids_.size());
            if (!approx_eq(dens, sel_density_)) return {false, "selection density drift"};
        }
        return {};
    }

private:
    void resolve(const EntryIndex& e) {
        if (e.size() != tensor_.order())
            throw DataError("entry arity " + std::to_string(e.size()) + " does not match order " +
                            std::to_string(tensor_.order()));
        sids_.clear();
        for (std::uint32_t n = 0; n < tensor_.order(); ++n) sids_.push_back(tensor_.slice_id({n + 1, e[n]}));
    }

    std::vector<SliceId> resolve_copy(const EntryIndex& e) const {
        if (e.size() != tensor_.order())
            throw DataError("entry arity " + std::to_string(e.size()) + " does not match order " +
                            std::to_string(tensor_.order()));
        std::vector<SliceId> cs;
        cs.reserve(e.size());
        for (std::uint32_t n = 0; n < tensor_.order(); ++n) cs.push_back(tensor_.slice_id({n + 1, e[n]}));
        return cs;
    }

    bool entry_selected() const {
        for (SliceId s : sids_)
            if (!sel_member_[s]) return false;
        return true;
    }

    ReorderPlan to_plan(const RegionBounds& rb) const {
        ReorderPlan p;
        p.j_lo = rb.jl + 1;
        p.j_hi = rb.jh + 1;
        p.q_f = tensor_.slice_at(rb.qf);
        p.region.reserve(rb.jh - rb.jl + 1);
        for (std::uint32_t j = rb.jl; j <= rb.jh; ++j) p.region.push_back(tensor_.slice_at(ord_.pi[j]));
        p.c_seed = rb.jl > 0 ? ord_.c[ord_.pi[rb.jl - 1]] : 0.0;
        return p;
    }

    void rescan_selection(bool force_replace) {
        SuffixBest sb = scan_suffix(ord_);
        std::size_t n = ord_.size() == 0 ? 0 : ord_.size() - sb.jbest;
        bool same = !force_replace && n == sel_ids_.size();
        if (same) {
            for (std::uint32_t j = sb.jbest; j < ord_.size(); ++j) {
                if (!sel_member_[ord_.pi[j]]) {
                    same = false;
                    break;
                }
            }
        }
        if (!same) {
            for (SliceId s : sel_ids_) sel_member_[s] = 0;
            sel_ids_.clear();
            sel_ids_.reserve(n);
            for (std::uint32_t j = sb.jbest; j < ord_.size(); ++j) {
                sel_ids_.push_back(ord_.pi[j]);
                sel_member_[ord_.pi[j]] = 1;
            }
            ++sel_version_;
            snapshot_.reset();
        }
        sel_mass_ = sb.mass;
        sel_density_ = sb.density;
    }

    SparseTensor tensor_;
    DOrdering ord_;
    Peeler peeler_;
    std::vector<SliceId> sids_;       // slices of the entry being applied
    std::vector<SliceId> sel_ids_;    // current selection
    std::vector<char> sel_member_;    // by slice id
    double sel_mass_ = 0.0;
    double sel_density_ = 0.0;
    std::uint64_t sel_version_ = 0;
    bool recomputed_ = false;
    mutable std::shared_ptr<const SelectionSnapshot> snapshot_;
};

}  // namespace densor
