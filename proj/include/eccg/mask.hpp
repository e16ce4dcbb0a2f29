#pragma once

#include <algorithm>
#include <cstdint>
#include <vector>

#include "eccg/errors.hpp"

namespace eccg {

/// Sorted set of excluded component indices over a universe [0, universe_size).
/// Membership queries are exact and O(1); the excluded list stays sorted.
class IndexMask {
public:
    IndexMask() = default;

    /// Mask over [0, universe_size) with nothing excluded.
    explicit IndexMask(std::size_t universe_size)
        : flags_(universe_size, 0), universe_(universe_size) {}

    IndexMask(std::vector<std::size_t> excluded, std::size_t universe_size)
        : flags_(universe_size, 0), universe_(universe_size) {
        std::sort(excluded.begin(), excluded.end());
        excluded.erase(std::unique(excluded.begin(), excluded.end()), excluded.end());
        for (std::size_t i : excluded) {
            if (i >= universe_size)
                throw BoundsError("IndexMask: excluded index out of universe");
            flags_[i] = 1;
        }
        excluded_ = std::move(excluded);
    }

    bool excludes(std::size_t i) const { return flags_[i] != 0; }

    /// Adds indices to the excluded set (keeps the set sorted).
    void exclude(const std::vector<std::size_t>& indices) {
        for (std::size_t i : indices) {
            if (i >= universe_)
                throw BoundsError("IndexMask: excluded index out of universe");
            if (!flags_[i]) {
                flags_[i] = 1;
                excluded_.insert(
                    std::lower_bound(excluded_.begin(), excluded_.end(), i), i);
            }
        }
    }

    const std::vector<std::size_t>& excluded() const { return excluded_; }
    std::size_t excluded_count() const { return excluded_.size(); }
    std::size_t universe_size() const { return universe_; }
    bool none_excluded() const { return excluded_.empty(); }

private:
    std::vector<std::size_t> excluded_;
    std::vector<std::uint8_t> flags_;
    std::size_t universe_ = 0;
};

} // namespace eccg
