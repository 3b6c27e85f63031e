#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace robustadapt {

/// Dense row-major matrix. `Matrix` (f32) is the storage type used across
/// the library; the double instantiation backs high-precision shadows of the
/// adapter math.
template <typename T>
struct BasicMatrix {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<T> data;  // rows * cols, row-major

    BasicMatrix() = default;
    BasicMatrix(size_t r, size_t c, T fill = T(0)) : rows(r), cols(c), data(r * c, fill) {}

    T& at(size_t r, size_t c) { return data[r * cols + c]; }
    const T& at(size_t r, size_t c) const { return data[r * cols + c]; }

    std::span<T> row(size_t r) { return {data.data() + r * cols, cols}; }
    std::span<const T> row(size_t r) const { return {data.data() + r * cols, cols}; }

    bool operator==(const BasicMatrix&) const = default;
};

using Matrix = BasicMatrix<float>;
using MatrixD = BasicMatrix<double>;

}  // namespace robustadapt
