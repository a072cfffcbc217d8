#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <sstream>

#include "geopath/align.hpp"
#include "geopath/jsonwrite.hpp"
#include "geopath/metrics.hpp"
#include "geopath/trainer.hpp"
#include "helpers.hpp"

#include <json.hpp>

using namespace geopath;
using namespace testutil;

TEST_CASE("lengths_from_segments: arithmetic on a hand-set segment") {
    const std::vector<double> seg_jsd{0.25};
    const std::vector<double> seg_euclid{3.0};
    const PathLengths lengths = lengths_from_segments(seg_jsd, seg_euclid);
    CHECK(lengths.jsd_length == 0.5);
    CHECK(lengths.jsd_length_scaled == doctest::Approx(std::sqrt(8.0) * 0.5).epsilon(1e-15));
    CHECK(lengths.euclid_length == 3.0);
}

TEST_CASE("path_lengths: identical models give zero everything") {
    const MlpConfig config{{2, 3, 3}, Activation::relu, false};
    const ModelParams a = init_params(config, 11);
    const Path path = init_path(a, a, 4);
    const Dataset data = random_dataset(9, 2, 3, 12);
    const PathLengths lengths = path_lengths(path, data.features);
    CHECK(lengths.jsd_length == 0.0);
    CHECK(lengths.jsd_length_scaled == 0.0);
    CHECK(lengths.euclid_length == 0.0);
}

TEST_CASE("euclidean path length: triangle inequality and linear-init equality") {
    const MlpConfig config{{2, 4, 3}, Activation::relu, false};
    const ModelParams a = init_params(config, 13);
    const ModelParams b = init_params(config, 14);
    const Dataset data = random_dataset(8, 2, 3, 15);
    const double straight = param_distance(a, b);

    const Path linear = init_path(a, b, 9);
    const PathLengths at_init = path_lengths(linear, data.features);
    CHECK(rel_err(at_init.euclid_length, straight) < 1e-12);

    // perturb the interior: length can only grow
    RandomStream rng(16);
    for (int trial = 0; trial < 5; ++trial) {
        Path bent = linear;
        for (std::size_t i = 1; i + 1 < bent.size(); ++i) {
            axpy(bent.models[i], 0.1 * rng.uniform01(),
                 random_unit_direction(config, 1600 + 10 * trial + i));
        }
        const PathLengths bent_lengths = path_lengths(bent, data.features);
        CHECK(bent_lengths.euclid_length >= straight - 1e-12);
    }
}

TEST_CASE("loss_profile: constant path of a perfect model has zero train loss") {
    const MlpConfig config{{3, 3}, Activation::relu, false};
    ModelParams model = zero_params(config);
    for (std::size_t c = 0; c < 3; ++c) model.weights[0].at(c, c) = 100.0;

    Dataset data;
    data.features = Matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    data.labels = {0, 1, 2};
    data.class_count = 3;

    const Path path = init_path(model, model, 4);
    const PathMetrics metrics = loss_profile(path, data, data);
    REQUIRE(metrics.train_loss.size() == 4);
    for (double v : metrics.train_loss) CHECK(v == 0.0);
    for (double v : metrics.train_acc) CHECK(v == 1.0);
    for (double v : metrics.per_segment_jsd) CHECK(v == 0.0);

    const Path two = init_path(model, model, 2);
    const PathMetrics short_metrics = loss_profile(two, data, data);
    CHECK(short_metrics.train_loss.size() == 2);
    CHECK(short_metrics.per_segment_jsd.size() == 1);
}

TEST_CASE("loss_profile: the aligned linear path between two narrow modes has a barrier") {
    const Dataset data = gen_gaussian_mixture(5, 60, 2, 0.8, 1001);
    const SplitResult sp = split(data, 0.25, 1002);
    const MlpConfig config{{2, 8, 8, 5}, Activation::relu, false};
    TrainOpts opts;
    opts.learning_rate = 0.1;
    opts.batch_size = 64;
    opts.epochs = 60;
    opts.seed = 1;
    const ModelParams a = train(config, sp.train, opts);
    opts.seed = 2;
    const ModelParams b = train(config, sp.train, opts);

    const ModelParams aligned = apply_permutation(b, weight_matching(a, b));
    const PathMetrics metrics = loss_profile(init_path(a, aligned, 9), sp.train, sp.test);
    const double max_endpoint = std::max(metrics.train_loss.front(), metrics.train_loss.back());
    double max_interior = 0.0;
    for (std::size_t i = 1; i + 1 < metrics.train_loss.size(); ++i) {
        max_interior = std::max(max_interior, metrics.train_loss[i]);
    }
    CHECK(max_interior > max_endpoint);
}

TEST_CASE("fisher_quadratic_form: zero direction, closed form, positivity") {
    // categorical with logit parameters: g = diag(p) - p p^T
    const MlpConfig config{{1, 2}, Activation::relu, false};
    const ModelParams theta = zero_params(config);  // p = [0.5, 0.5] on input [1]
    Dataset data;
    data.features = Matrix(1, 1, {1.0});
    data.labels = {0};
    data.class_count = 2;

    CHECK(fisher_quadratic_form(theta, zero_params(config), data) == 0.0);

    ModelParams direction = zero_params(config);
    direction.weights[0].at(0, 0) = 1.0;
    direction.weights[0].at(1, 0) = -1.0;
    CHECK(fisher_quadratic_form(theta, direction, data) == 1.0);

    const MlpConfig net{{2, 4, 3}, Activation::relu, true};
    const ModelParams params = init_params(net, 21);
    const Dataset sample = random_dataset(10, 2, 3, 22);
    for (int trial = 0; trial < 10; ++trial) {
        const ModelParams dir = random_unit_direction(net, 2200 + trial);
        CHECK(fisher_quadratic_form(params, dir, sample) >= 0.0);
    }

    const ModelParams wrong = zero_params(MlpConfig{{2, 5, 3}, Activation::relu, false});
    CHECK_THROWS_AS(fisher_quadratic_form(params, wrong, sample), std::invalid_argument);
}

TEST_CASE("JSD of a small parameter step matches the Fisher quadratic form") {
    const MlpConfig config{{2, 4, 3}, Activation::relu, false};
    const ModelParams theta = init_params(config, 23);
    const Dataset data = random_dataset(16, 2, 3, 24);

    for (int trial = 0; trial < 3; ++trial) {
        const ModelParams dir = random_unit_direction(config, 2300 + trial);
        const double quad = fisher_quadratic_form(theta, dir, data);
        REQUIRE(quad > 0.0);

        double previous_gap = std::numeric_limits<double>::infinity();
        for (const double eps : {1e-2, 1e-3, 1e-4}) {
            ModelParams stepped = theta;
            axpy(stepped, eps, dir);
            const double divergence = backward_jsd_pair(theta, stepped, data.features).jsd;
            const double ratio = divergence / (eps * eps / 8.0 * quad);
            if (eps == 1e-3) {
                CHECK(ratio >= 0.99);
                CHECK(ratio <= 1.01);
            }
            const double gap = std::abs(ratio - 1.0);
            CHECK(gap < previous_gap);
            previous_gap = gap;
        }
    }
}

TEST_CASE("write_report: exact headers, row counts and value round-trip") {
    const MlpConfig config{{2, 3, 3}, Activation::relu, false};
    const ModelParams a = init_params(config, 25);
    const ModelParams b = init_params(config, 26);
    const Path path = init_path(a, b, 2);
    const Dataset data = random_dataset(6, 2, 3, 27);
    const SplitResult splits = split(data, 0.34, 28);

    const PathMetrics metrics = loss_profile(path, splits.train, splits.test);
    std::vector<TracePoint> trace(3);
    trace[0] = {0, 0.5, 1.25, 2.5};
    trace[1] = {10, 0.25, 1.0, 2.75};
    trace[2] = {20, 1.0 / 3.0, 0.75, std::numbers::pi};

    const auto dir = fresh_dir("metrics_report");
    write_report(metrics, metrics, trace, dir);

    const std::string lengths = slurp(dir / "path_lengths.csv");
    CHECK(lengths.rfind("x,model_space,param_space\n", 0) == 0);

    const std::string post = slurp(dir / "post_opt_loss.csv");
    CHECK(post.rfind("x,train_loss,test_loss\n", 0) == 0);
    // exactly two data rows, x = 1 and 2
    CHECK(std::count(post.begin(), post.end(), '\n') == 3);
    CHECK(post.find("\n1,") != std::string::npos);
    CHECK(post.find("\n2,") != std::string::npos);
    CHECK(slurp(dir / "pre_opt_loss.csv").rfind("x,train_loss,test_loss\n", 0) == 0);

    // values reload exactly from the 17-digit representation
    std::istringstream in(lengths);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    std::getline(in, line);
    std::getline(in, line);  // trace[2]
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    CHECK(std::strtod(line.substr(c1 + 1, c2 - c1 - 1).c_str(), nullptr) == 0.75);
    CHECK(std::strtod(line.substr(c2 + 1).c_str(), nullptr) == std::numbers::pi);

    const auto parsed = nlohmann::json::parse(slurp(dir / "metrics.json"));
    CHECK(parsed.at("version").get<int>() == 1);
    CHECK(parsed.at("post").at("train_loss").size() == 2);
    CHECK(parsed.at("trace").size() == 3);
}
