#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace actiml {

// Dense row-major matrix of doubles. Plain storage, no algebra.
struct Matrix {
    std::size_t rows{0};
    std::size_t cols{0};
    std::vector<double> values;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), values(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    std::span<double> row(std::size_t r) { return {values.data() + r * cols, cols}; }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * cols, cols};
    }

    bool operator==(const Matrix&) const = default;
};

} // namespace actiml
