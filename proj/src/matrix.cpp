#include "geopath/matrix.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>
#include <string>

namespace geopath {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> d)
    : rows(r), cols(c), data(std::move(d)) {
    if (data.size() != rows * cols) {
        throw std::invalid_argument("Matrix: data length " + std::to_string(data.size()) +
                                    " does not match " + std::to_string(rows) + "x" +
                                    std::to_string(cols));
    }
}

bool all_finite(const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(v[i])) return false;
    }
    return true;
}

bool all_finite(const std::vector<double>& v) { return all_finite(v.data(), v.size()); }

void check_matrix(const Matrix& m, const char* what) {
    if (m.data.size() != m.rows * m.cols) {
        throw std::invalid_argument(std::string(what) + ": data length does not match shape");
    }
    if (!all_finite(m.data)) {
        throw std::invalid_argument(std::string(what) + ": non-finite entry");
    }
}

namespace {

// Maps a double to a key whose unsigned order matches the total order on
// values (-0 sorts before +0, distinct bit patterns are never conflated).
inline std::uint64_t sort_key(double d) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(d);
    return (u >> 63) ? ~u : (u | 0x8000000000000000ull);
}

}  // namespace

double canonical_sum(double* v, std::size_t n) {
    if (n == 0) return 0.0;
    if (n <= 32) {
        for (std::size_t i = 1; i < n; ++i) {
            const double x = v[i];
            const std::uint64_t k = sort_key(x);
            std::size_t j = i;
            while (j > 0 && sort_key(v[j - 1]) > k) {
                v[j] = v[j - 1];
                --j;
            }
            v[j] = x;
        }
    } else {
        std::sort(v, v + n, [](double a, double b) { return sort_key(a) < sort_key(b); });
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[i];
    return acc;
}

double canonical_sum(const std::vector<double>& values) {
    thread_local std::vector<double> scratch;
    scratch.assign(values.begin(), values.end());
    return canonical_sum(scratch.data(), scratch.size());
}

double canonical_dot(const double* a, const double* b, std::size_t n) {
    thread_local std::vector<double> scratch;
    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) scratch[i] = a[i] * b[i];
    return canonical_sum(scratch.data(), n);
}

}  // namespace geopath
