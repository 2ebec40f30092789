#pragma once

#include <algorithm>
#include <limits>

#include "densor/ordering.hpp"
#include "densor/sparse_tensor.hpp"

namespace densor {

// Best suffix of the ordering by density.  Summing d over a suffix gives that
// suffix's mass (each surviving entry is counted once, at the first of its
// slices to be peeled), so one backward scan finds the densest suffix.  Strict
// improvement keeps the smallest suffix among ties.
struct SuffixBest {
    std::uint32_t jbest = 0;  // suffix start position, 0-based
    double mass = 0.0;
    double density = 0.0;
};

inline SuffixBest scan_suffix(const DOrdering& o) {
    SuffixBest out;
    if (o.size() == 0) return out;
    double m = 0.0;
    double best = -std::numeric_limits<double>::infinity();
    std::uint32_t jb = 0;
    double bm = 0.0;
    for (std::uint32_t j = static_cast<std::uint32_t>(o.size()); j-- > 0;) {
        m += o.d[o.pi[j]];
        double dens = m / static_cast<double>(o.size() - j);
        if (dens > best) {
            best = dens;
            jb = j;
            bm = m;
        }
    }
    return {jb, bm, best};
}

inline DenseSelection find_slices(const SparseTensor& t, const DOrdering& o) {
    SuffixBest sb = scan_suffix(o);
    DenseSelection sel;
    if (o.size() == 0) return sel;
    sel.mass = sb.mass;
    sel.density = sb.density;
    sel.slices.reserve(o.size() - sb.jbest);
    for (std::uint32_t j = sb.jbest; j < o.size(); ++j) sel.slices.push_back(t.slice_at(o.pi[j]));
    std::sort(sel.slices.begin(), sel.slices.end());
    return sel;
}

// One-shot detection: peel everything, then take the densest suffix.  The
// result's density is within a factor of the tensor order from the optimum.
inline DenseSelection detect_static(const SparseTensor& t) {
    if (t.nnz() == 0) throw DataError("detect on a tensor with no entries");
    DOrdering o;
    Peeler p;
    p.build_full(t, o);
    return find_slices(t, o);
}

}  // namespace densor
