#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace flsm {

/// Dense row-major 2D array. Row/col indices are 0-based; at() is
/// bounds-checked, operator() is not.
template <typename T>
class Grid {
public:
    Grid() = default;
    Grid(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0)
            throw std::invalid_argument("Grid: negative dimensions");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    T& at(int r, int c) {
        check(r, c);
        return (*this)(r, c);
    }
    const T& at(int r, int c) const {
        check(r, c);
        return (*this)(r, c);
    }

    bool in_bounds(int r, int c) const { return r >= 0 && r < rows_ && c >= 0 && c < cols_; }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    auto begin() { return data_.begin(); }
    auto end() { return data_.end(); }
    auto begin() const { return data_.begin(); }
    auto end() const { return data_.end(); }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    bool same_shape(const Grid& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    friend bool operator==(const Grid& a, const Grid& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    void check(int r, int c) const {
        if (!in_bounds(r, c))
            throw std::out_of_range("Grid index out of range");
    }

    int rows_ = 0;
    int cols_ = 0;
    std::vector<T> data_;
};

using Image = Grid<double>;
using Mask = Grid<uint8_t>;

} // namespace flsm
