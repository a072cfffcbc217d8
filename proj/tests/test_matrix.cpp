#include <doctest.h>

#include <bit>
#include <limits>

#include "geopath/matrix.hpp"
#include "geopath/rng.hpp"
#include "helpers.hpp"

using namespace geopath;

TEST_CASE("canonical_sum is invariant under input permutation") {
    RandomStream rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.uniform_index(100);
        std::vector<double> values(n);
        for (double& v : values) {
            v = rng.uniform(-10.0, 10.0) * std::pow(10.0, rng.uniform(-6.0, 6.0));
        }
        // exact duplicates and signed zeros are the interesting ties
        if (n > 3) {
            values[1] = values[0];
            values[2] = 0.0;
            values[3] = -0.0;
        }
        std::vector<double> a = values;
        const double ref = canonical_sum(a.data(), a.size());
        for (int shuffle = 0; shuffle < 5; ++shuffle) {
            std::vector<double> b = values;
            rng.shuffle(b);
            const double got = canonical_sum(b.data(), b.size());
            CHECK(std::bit_cast<std::uint64_t>(got) == std::bit_cast<std::uint64_t>(ref));
        }
    }
}

TEST_CASE("canonical_sum matches plain summation closely and handles edges") {
    std::vector<double> empty;
    CHECK(canonical_sum(empty.data(), 0) == 0.0);
    std::vector<double> one{3.5};
    CHECK(canonical_sum(one.data(), 1) == 3.5);

    RandomStream rng(12);
    std::vector<double> values(257);
    double plain = 0.0;
    for (double& v : values) {
        v = rng.normal();
        plain += v;
    }
    const double canon = canonical_sum(values);
    CHECK(std::abs(canon - plain) < 1e-9);
}

TEST_CASE("canonical_dot is invariant under paired permutation") {
    RandomStream rng(13);
    const std::size_t n = 40;
    std::vector<double> a(n), b(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = rng.normal();
        b[i] = rng.normal();
    }
    const double ref = canonical_dot(a.data(), b.data(), n);

    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    for (int trial = 0; trial < 10; ++trial) {
        rng.shuffle(perm);
        std::vector<double> pa(n), pb(n);
        for (std::size_t i = 0; i < n; ++i) {
            pa[i] = a[perm[i]];
            pb[i] = b[perm[i]];
        }
        const double got = canonical_dot(pa.data(), pb.data(), n);
        CHECK(std::bit_cast<std::uint64_t>(got) == std::bit_cast<std::uint64_t>(ref));
    }

    double plain = 0.0;
    for (std::size_t i = 0; i < n; ++i) plain += a[i] * b[i];
    CHECK(std::abs(ref - plain) < 1e-12);
}

TEST_CASE("matrix shape and finiteness guards") {
    CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), std::invalid_argument);

    Matrix m(2, 2);
    m.at(1, 1) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(check_matrix(m, "test"), std::invalid_argument);
    m.at(1, 1) = 0.0;
    CHECK_NOTHROW(check_matrix(m, "test"));
}
