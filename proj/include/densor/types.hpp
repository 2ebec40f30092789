#pragma once

#include <cmath>
#include <compare>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace densor {

// (mode, coord), both 1-based.  Ordered lexicographically; that order is the
// tie-break used everywhere a deterministic choice between slices is needed.
struct SliceIndex {
    std::uint32_t mode = 0;
    std::uint32_t coord = 0;

    auto operator<=>(const SliceIndex&) const = default;
};

// 1-based coordinates of one cell, length == tensor order.
using EntryIndex = std::vector<std::uint32_t>;

// Dense internal id for a slice; assigned by SparseTensor, stable for its lifetime.
using SliceId = std::uint32_t;

constexpr double kRelTol = 1e-9;
constexpr double kZeroTol = 1e-9;

inline bool approx_eq(double a, double b, double tol = kRelTol) {
    double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
    return std::fabs(a - b) <= tol * scale;
}

inline bool approx_le(double a, double b, double tol = kRelTol) {
    return a <= b || approx_eq(a, b, tol);
}

// Malformed input: bad coordinates, negative resulting values, unordered times,
// unparsable lines.  The CLI maps this to exit code 2.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

struct EntryIndexHash {
    std::size_t operator()(const EntryIndex& e) const {
        std::uint64_t h = 1469598103934665603ull;
        for (std::uint32_t v : e) {
            h ^= v;
            h *= 1099511628211ull;
        }
        return static_cast<std::size_t>(h);
    }
};

inline std::string to_string(const SliceIndex& q) {
    return "(" + std::to_string(q.mode) + "," + std::to_string(q.coord) + ")";
}

inline std::string to_string(const EntryIndex& e) {
    std::string s = "(";
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(e[i]);
    }
    return s + ")";
}

}  // namespace densor
