#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace geopath {

// Row-major dense matrix of 64-bit reals.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
    Matrix(std::size_t r, std::size_t c, std::vector<double> d);

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    double* row(std::size_t r) { return data.data() + r * cols; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }
    std::size_t size() const { return data.size(); }

    bool operator==(const Matrix&) const = default;
};

bool all_finite(const double* v, std::size_t n);
bool all_finite(const std::vector<double>& v);

// Throws std::invalid_argument if the matrix is malformed or non-finite.
void check_matrix(const Matrix& m, const char* what);

// Order-canonical reductions: the result depends only on the multiset of
// addends, never on their order. Sums over permuted hidden units therefore
// stay bit-identical, and permutation symmetry of the forward pass holds
// exactly in floating point.
double canonical_sum(double* values, std::size_t n);
double canonical_sum(const std::vector<double>& values);
double canonical_dot(const double* a, const double* b, std::size_t n);

}  // namespace geopath
