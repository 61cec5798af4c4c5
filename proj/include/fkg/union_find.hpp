#pragma once

#include <cstdint>
#include <numeric>
#include <vector>

namespace fkg {

/// Disjoint sets where every root is the smallest element of its set.
///
/// Linking always attaches the larger root below the smaller one, so the root
/// of a cluster doubles as its canonical key (minimal vertex index).
class MinRootUnionFind {
public:
    MinRootUnionFind() = default;
    explicit MinRootUnionFind(std::size_t n) : parent_(n) { reset(); }

    void resize(std::size_t n) {
        parent_.resize(n);
        reset();
    }
    void reset() { std::iota(parent_.begin(), parent_.end(), std::int32_t{0}); }
    std::size_t size() const noexcept { return parent_.size(); }

    std::int32_t find(std::int32_t x) noexcept {
        auto* p = parent_.data();
        while (p[x] != x) {
            p[x] = p[p[x]];
            x = p[x];
        }
        return x;
    }

    /// Returns true when two different sets were merged.
    bool unite(std::int32_t x, std::int32_t y) noexcept {
        x = find(x);
        y = find(y);
        if (x == y) return false;
        if (x < y)
            parent_[static_cast<std::size_t>(y)] = x;
        else
            parent_[static_cast<std::size_t>(x)] = y;
        return true;
    }

private:
    std::vector<std::int32_t> parent_;
};

} // namespace fkg
