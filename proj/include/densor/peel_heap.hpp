#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "densor/types.hpp"

namespace densor {

// Binary min-heap over (key, mode, coord) with lazy decrease-key: callers push
// a fresh item on every key change and discard popped items whose key no longer
// matches the live value.  The (mode, coord) part makes equal keys pop in
// SliceIndex order, which keeps peels deterministic.
class PeelHeap {
public:
    struct Item {
        double key;
        std::uint32_t mode;
        std::uint32_t coord;
        SliceId sid;
    };

    void clear() { items_.clear(); }
    bool empty() const { return items_.empty(); }
    std::size_t size() const { return items_.size(); }

    void push(double key, const SliceIndex& q, SliceId sid) {
        items_.push_back({key, q.mode, q.coord, sid});
        std::push_heap(items_.begin(), items_.end(), after);
    }

    const Item& top() const { return items_.front(); }

    Item pop() {
        std::pop_heap(items_.begin(), items_.end(), after);
        Item it = items_.back();
        items_.pop_back();
        return it;
    }

private:
    // true when a should sit further from the top than b
    static bool after(const Item& a, const Item& b) {
        if (a.key != b.key) return a.key > b.key;
        if (a.mode != b.mode) return a.mode > b.mode;
        return a.coord > b.coord;
    }

    std::vector<Item> items_;
};

}  // namespace densor
