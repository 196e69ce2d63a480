#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace reltest {

/// Dense row-major indexing of {0..N_1} x ... x {0..N_m}. The last
/// coordinate varies fastest, so linear order is lexicographic order.
class StateGrid {
public:
    StateGrid() = default;
    explicit StateGrid(std::span<const int> upper);

    std::size_t size() const noexcept { return size_; }
    std::size_t dimension() const noexcept { return upper_.size(); }
    const std::vector<int>& upper() const noexcept { return upper_; }
    std::size_t stride(std::size_t axis) const { return strides_[axis]; }

    std::size_t index(std::span<const int> x) const;
    void decode(std::size_t index, std::span<int> x) const;
    std::vector<int> decode(std::size_t index) const;

    /// Coordinate `axis` of the state with linear index `index`.
    int coordinate(std::size_t index, std::size_t axis) const {
        return static_cast<int>((index / strides_[axis]) % (static_cast<std::size_t>(upper_[axis]) + 1));
    }

    bool operator==(const StateGrid&) const = default;

private:
    std::vector<int> upper_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

} // namespace reltest
