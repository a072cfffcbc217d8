#include <doctest.h>

#include <bit>
#include <cmath>

#include "geopath/align.hpp"
#include "geopath/geodesic.hpp"
#include "geopath/trainer.hpp"
#include "helpers.hpp"

using namespace geopath;
using namespace testutil;

namespace {

PermutationSpec random_spec(const MlpConfig& config, std::uint64_t seed) {
    RandomStream rng(seed);
    PermutationSpec spec = identity_spec(config);
    for (auto& p : spec.perms) rng.shuffle(p);
    return spec;
}

}  // namespace

TEST_CASE("solve_lap: dominant diagonal and the 2x2 swap case") {
    CHECK(solve_lap(Matrix(2, 2, {10, 0, 0, 10})) == std::vector<std::size_t>{0, 1});
    CHECK(solve_lap(Matrix(2, 2, {1, 2, 2, 1})) == std::vector<std::size_t>{1, 0});

    CHECK_THROWS_AS(solve_lap(Matrix(2, 3)), std::invalid_argument);
    Matrix bad(2, 2);
    bad.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(solve_lap(bad), std::invalid_argument);
}

TEST_CASE("solve_lap: ties break to the lexicographically smallest permutation") {
    CHECK(solve_lap(Matrix(3, 3)) == std::vector<std::size_t>{0, 1, 2});
    CHECK(solve_lap(Matrix(2, 2, {1, 1, 1, 1})) == std::vector<std::size_t>{0, 1});
    CHECK(solve_lap(Matrix(3, 3, {5, 5, 0, 5, 5, 0, 0, 0, 5})) ==
          std::vector<std::size_t>{0, 1, 2});
    // two optimal assignments, the smaller-by-first-row one must win
    CHECK(solve_lap(Matrix(3, 3, {1, 1, 0, 1, 1, 0, 0, 0, 1})) ==
          std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("solve_lap matches exhaustive search on random matrices up to n=7") {
    RandomStream rng(71);
    for (std::size_t n = 2; n <= 7; ++n) {
        for (int trial = 0; trial < 25; ++trial) {
            Matrix score(n, n);
            for (double& v : score.data) v = rng.uniform(-1.0, 1.0);
            const auto [best, best_perm] = brute_force_lap(score);
            const auto got = solve_lap(score);
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += score.at(i, got[i]);
            CHECK(std::abs(total - best) <= 1e-9);
            CHECK(got == best_perm);
        }
    }
}

TEST_CASE("solve_lap matches exhaustive search on tie-heavy integer matrices") {
    RandomStream rng(72);
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(4);
        Matrix score(n, n);
        for (double& v : score.data) v = static_cast<double>(rng.uniform_index(3));
        const auto [best, best_perm] = brute_force_lap(score);
        const auto got = solve_lap(score);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += score.at(i, got[i]);
        CHECK(total == best);
        CHECK(got == best_perm);
    }
}

TEST_CASE("apply_permutation: identity is a no-op, inverse composes to identity") {
    const MlpConfig config{{3, 6, 5, 4}, Activation::relu, true};
    const ModelParams params = init_params(config, 81);

    CHECK(params_bitwise_equal(apply_permutation(params, identity_spec(config)), params));

    const PermutationSpec spec = random_spec(config, 82);
    const ModelParams permuted = apply_permutation(params, spec);
    CHECK_FALSE(params_bitwise_equal(permuted, params));
    CHECK(params_bitwise_equal(apply_permutation(permuted, inverse_spec(spec)), params));

    PermutationSpec wrong = spec;
    wrong.perms[0].pop_back();
    CHECK_THROWS_AS(apply_permutation(params, wrong), std::invalid_argument);
    PermutationSpec dupes = spec;
    dupes.perms[0][0] = dupes.perms[0][1];
    CHECK_THROWS_WITH_AS(apply_permutation(params, dupes), doctest::Contains("bijection"),
                         std::invalid_argument);
}

TEST_CASE("apply_permutation preserves the network function bit for bit") {
    for (const bool layernorm : {false, true}) {
        CAPTURE(layernorm);
        const MlpConfig config{{3, 8, 7, 4}, Activation::relu, layernorm};
        const ModelParams params = init_params(config, 83);
        const Dataset data = random_dataset(19, 3, 4, 84);

        const Matrix reference = forward(params, data.features);
        for (int trial = 0; trial < 5; ++trial) {
            const PermutationSpec spec = random_spec(config, 900 + trial);
            const Matrix permuted = forward(apply_permutation(params, spec), data.features);
            REQUIRE(permuted.data.size() == reference.data.size());
            for (std::size_t i = 0; i < reference.data.size(); ++i) {
                CHECK(std::bit_cast<std::uint64_t>(permuted.data[i]) ==
                      std::bit_cast<std::uint64_t>(reference.data[i]));
            }
        }
    }
}

TEST_CASE("weight_matching: self-match returns the identity") {
    const MlpConfig config{{4, 8, 8, 3}, Activation::relu, false};
    const ModelParams params = init_params(config, 85);
    const PermutationSpec spec = weight_matching(params, params);
    CHECK(spec.perms == identity_spec(config).perms);
}

TEST_CASE("weight_matching recovers planted permutations exactly") {
    for (const bool layernorm : {false, true}) {
        CAPTURE(layernorm);
        for (int trial = 0; trial < 5; ++trial) {
            const MlpConfig config{{6, 8, 8, 4}, Activation::relu, layernorm};
            const ModelParams theta_a = init_params(config, 1000 + trial);
            const PermutationSpec planted = random_spec(config, 2000 + trial);
            const ModelParams theta_b = apply_permutation(theta_a, planted);

            WeightMatchingTrace trace;
            const PermutationSpec recovered = weight_matching(theta_a, theta_b, &trace);
            const ModelParams restored = apply_permutation(theta_b, recovered);
            CHECK(params_bitwise_equal(restored, theta_a));
            CHECK(trace.sweeps < 200);
            for (std::size_t k = 1; k < trace.objective.size(); ++k) {
                CHECK(trace.objective[k] >=
                      trace.objective[k - 1] - 1e-9 * (1.0 + std::abs(trace.objective[k - 1])));
            }
        }
    }
}

TEST_CASE("weight_matching: randomized sweep order is seeded and deterministic") {
    const MlpConfig config{{6, 8, 8, 4}, Activation::relu, false};
    const ModelParams theta_a = init_params(config, 3000);
    const ModelParams theta_b = apply_permutation(theta_a, random_spec(config, 3001));

    const PermutationSpec fixed_order = weight_matching(theta_a, theta_b);
    const PermutationSpec shuffled = weight_matching(theta_a, theta_b, nullptr, 5);
    const PermutationSpec shuffled_again = weight_matching(theta_a, theta_b, nullptr, 5);
    CHECK(shuffled.perms == shuffled_again.perms);
    CHECK(params_bitwise_equal(apply_permutation(theta_b, fixed_order), theta_a));
    CHECK(params_bitwise_equal(apply_permutation(theta_b, shuffled), theta_a));
}

TEST_CASE("weight_matching: config mismatch is rejected") {
    const ModelParams a = init_params(MlpConfig{{2, 4, 3}, Activation::relu, false}, 1);
    const ModelParams b = init_params(MlpConfig{{2, 5, 3}, Activation::relu, false}, 2);
    CHECK_THROWS_AS(weight_matching(a, b), std::invalid_argument);
}

TEST_CASE("weight matching does not hurt the linear midpoint between trained nets") {
    const Dataset data = gen_gaussian_mixture(5, 60, 2, 0.8, 1001);
    const MlpConfig config{{2, 8, 8, 5}, Activation::relu, false};
    TrainOpts opts;
    opts.learning_rate = 0.1;
    opts.batch_size = 64;
    opts.epochs = 60;
    opts.seed = 1;
    const ModelParams theta_a = train(config, data, opts);
    opts.seed = 2;
    const ModelParams theta_b = train(config, data, opts);

    auto midpoint_loss = [&](const ModelParams& a, const ModelParams& b) {
        const Path path = init_path(a, b, 3);
        return evaluate(path.models[1], data).loss;
    };
    const double before = midpoint_loss(theta_a, theta_b);
    const PermutationSpec spec = weight_matching(theta_a, theta_b);
    const ModelParams aligned = apply_permutation(theta_b, spec);
    const double after = midpoint_loss(theta_a, aligned);
    CHECK(after <= before);
}

TEST_CASE("permutation spec serializes and round-trips") {
    const MlpConfig config{{3, 5, 4, 2}, Activation::relu, false};
    const PermutationSpec spec = random_spec(config, 86);
    const auto dir = fresh_dir("align_spec");
    save_spec(spec, dir / "perm.json");
    const PermutationSpec loaded = load_spec(dir / "perm.json");
    CHECK(loaded.perms == spec.perms);
}
