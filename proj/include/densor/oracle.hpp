#pragma once

#include <bit>
#include <cstdint>
#include <limits>
#include <vector>

#include "densor/ordering.hpp"
#include "densor/sparse_tensor.hpp"

namespace densor {

// Ground-truth engines for tests.  Deliberately share no logic with the peel
// path: the densest subtensor comes from subset enumeration, the cache values
// from direct attribution of entries to positions.

enum class Enumeration {
    full,          // every nonempty subset of the active slices
    covered_only,  // only subsets of slices that touch at least one entry
};

// Exact densest subtensor by enumeration.  Ties prefer fewer slices, then the
// lexicographically smaller slice set.  Guarded to 24 slices.
inline DenseSelection brute_force_densest(const SparseTensor& t, Enumeration mode = Enumeration::full) {
    std::vector<SliceId> ids = t.active_slice_ids();
    if (mode == Enumeration::covered_only && t.nnz() > 0) {
        std::vector<SliceId> covered;
        for (SliceId s : ids)
            if (!t.slice_slots(s).empty()) covered.push_back(s);
        ids = std::move(covered);
    }
    std::size_t k = ids.size();
    if (k > 24) throw std::invalid_argument("subset enumeration limited to 24 slices, got " + std::to_string(k));
    if (k == 0) return {};

    std::vector<int> bit(t.slice_capacity(), -1);
    for (std::size_t i = 0; i < k; ++i) bit[ids[i]] = static_cast<int>(i);
    std::vector<double> f(std::size_t{1} << k, 0.0);
    t.for_each_entry([&](const EntryIndex& e, double v) {
        std::uint32_t mask = 0;
        for (std::uint32_t n = 0; n < t.order(); ++n) mask |= 1u << bit[t.sid_unchecked(n, e[n])];
        f[mask] += v;
    });
    // subset-sum transform: f[m] becomes the mass of the subtensor induced by m
    for (std::size_t b = 0; b < k; ++b)
        for (std::size_t m = 0; m < f.size(); ++m)
            if (m & (std::size_t{1} << b)) f[m] += f[m ^ (std::size_t{1} << b)];

    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_mask = 1, best_pc = 0;
    for (std::size_t m = 1; m < f.size(); ++m) {
        std::size_t pc = static_cast<std::size_t>(std::popcount(m));
        double dens = f[m] / static_cast<double>(pc);
        bool take = dens > best;
        if (!take && dens == best) {
            if (pc < best_pc) {
                take = true;
            } else if (pc == best_pc) {
                // the set holding the lowest differing bit compares smaller
                std::size_t x = m ^ best_mask;
                take = x != 0 && (m & (x & (~x + 1))) != 0;
            }
        }
        if (take) {
            best = dens;
            best_mask = m;
            best_pc = pc;
        }
    }
    DenseSelection out;
    out.mass = f[best_mask];
    out.density = best;
    for (std::size_t i = 0; i < k; ++i)
        if (best_mask & (std::size_t{1} << i)) out.slices.push_back(t.slice_at(ids[i]));
    return out;  // ids are in (mode, coord) order, so slices come out sorted
}

struct CacheVectors {
    std::vector<double> d, c;  // by slice id
};

// Fresh d/c values for a given ordering, straight from the definitions: an
// entry survives in exactly the suffixes up to its earliest slice position, so
// it contributes to d of that one slice.  c is the running prefix max.
inline CacheVectors recompute_caches(const SparseTensor& t, const DOrdering& o) {
    CacheVectors cv;
    cv.d.assign(t.slice_capacity(), 0.0);
    cv.c.assign(t.slice_capacity(), 0.0);
    t.for_each_entry([&](const EntryIndex& e, double v) {
        SliceId first = t.sid_unchecked(0, e[0]);
        for (std::uint32_t n = 1; n < t.order(); ++n) {
            SliceId s = t.sid_unchecked(n, e[n]);
            if (o.pos[s] < o.pos[first]) first = s;
        }
        cv.d[first] += v;
    });
    double cmax = 0.0;
    for (SliceId s : o.pi) {
        if (cv.d[s] > cmax) cmax = cv.d[s];
        cv.c[s] = cmax;
    }
    return cv;
}

}  // namespace densor
