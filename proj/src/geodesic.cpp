#include "geopath/geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <json.hpp>
#include <stdexcept>

#include "geopath/checkpoint.hpp"
#include "geopath/jsonwrite.hpp"
#include "geopath/rng.hpp"
#include "geopath/trainer.hpp"

namespace geopath {

using nlohmann::json;

void Path::validate() const {
    if (models.size() < 2) throw std::invalid_argument("Path: need at least 2 models");
    check_params(models.front(), "Path");
    for (std::size_t i = 1; i < models.size(); ++i) {
        if (!(models[i].config == models.front().config)) {
            throw std::invalid_argument("Path: model " + std::to_string(i) +
                                        " config differs from model 0");
        }
        check_params(models[i], "Path");
    }
}

void GeodesicOpts::validate() const {
    if (!(learning_rate > 0.0)) {
        throw std::invalid_argument("GeodesicOpts: learning_rate must be > 0");
    }
    if (batch_size < 1) throw std::invalid_argument("GeodesicOpts: batch_size must be >= 1");
    if (iterations < 1) throw std::invalid_argument("GeodesicOpts: iterations must be >= 1");
    if (eval_every < 1) throw std::invalid_argument("GeodesicOpts: eval_every must be >= 1");
}

double jsd(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size() || p.empty()) {
        throw std::invalid_argument("jsd: length mismatch");
    }
    double sum_p = 0.0;
    double sum_q = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0) || !(q[i] >= 0.0)) {
            throw std::invalid_argument("jsd: inputs must be nonnegative");
        }
        sum_p += p[i];
        sum_q += q[i];
    }
    if (std::abs(sum_p - 1.0) > 1e-9 || std::abs(sum_q - 1.0) > 1e-9) {
        throw std::invalid_argument("jsd: inputs must sum to 1 within 1e-9");
    }
    return row_jsd(p.data(), q.data(), p.size());
}

Path init_path(const ModelParams& theta_a, const ModelParams& theta_b_aligned, std::size_t n) {
    if (!(theta_a.config == theta_b_aligned.config)) {
        throw std::invalid_argument("init_path: config mismatch");
    }
    if (n < 2) throw std::invalid_argument("init_path: need n >= 2");
    check_params(theta_a, "init_path");
    check_params(theta_b_aligned, "init_path");

    const std::vector<double> fa = flatten(theta_a);
    const std::vector<double> fb = flatten(theta_b_aligned);

    Path path;
    path.models.reserve(n);
    path.models.push_back(theta_a);
    std::vector<double> mid(fa.size());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(n - 1);
        for (std::size_t k = 0; k < fa.size(); ++k) {
            mid[k] = fa[k] + t * (fb[k] - fa[k]);
        }
        path.models.push_back(unflatten(theta_a.config, mid));
    }
    path.models.push_back(theta_b_aligned);
    return path;
}

PathEnergy path_energy(const Path& path, const Matrix& inputs) {
    path.validate();
    PathEnergy energy;
    energy.per_segment.resize(path.size() - 1);

    // Softmax rows per model, reused across the two segments touching it.
    Matrix prev = softmax(forward(path.models[0], inputs));
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        Matrix next = softmax(forward(path.models[s + 1], inputs));
        double acc = 0.0;
        for (std::size_t r = 0; r < inputs.rows; ++r) {
            acc += row_jsd(prev.row(r), next.row(r), prev.cols);
        }
        energy.per_segment[s] = acc / static_cast<double>(inputs.rows);
        prev = std::move(next);
    }
    for (double v : energy.per_segment) energy.total += v;
    return energy;
}

namespace {

TracePoint make_trace_point(std::size_t iteration, const Path& path, const Matrix& eval_inputs) {
    TracePoint pt;
    pt.iteration = iteration;
    const PathEnergy energy = path_energy(path, eval_inputs);
    pt.energy = energy.total;
    for (double v : energy.per_segment) pt.jsd_length += std::sqrt(v);
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        pt.euclid_length += param_distance(path.models[s], path.models[s + 1]);
    }
    return pt;
}

}  // namespace

OptimizeResult optimize_path(const Path& path, const Dataset& data, const GeodesicOpts& opts) {
    path.validate();
    opts.validate();
    check_matrix(data.features, "optimize_path");
    if (data.features.cols != path.models.front().config.input_dim()) {
        throw std::invalid_argument("optimize_path: dataset dim does not match model input dim");
    }

    OptimizeResult result;
    result.path = path;
    const std::size_t n_models = path.size();
    const std::size_t n_rows = data.features.rows;
    const std::size_t batch = std::min(opts.batch_size, n_rows);

    RandomStream shuffle_rng(mix_seed(opts.seed, 0x67656f6421ull));
    std::vector<std::size_t> order(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) order[i] = i;
    std::size_t cursor = n_rows;  // force a reshuffle on first use

    result.trace.push_back(make_trace_point(0, result.path, data.features));

    std::vector<ModelParams> grads(n_models);
    for (std::size_t iter = 1; iter <= opts.iterations; ++iter) {
        if (cursor + batch > n_rows) {
            shuffle_rng.shuffle(order);
            cursor = 0;
        }
        const Matrix inputs = gather_rows(data.features, order, cursor, cursor + batch);
        cursor += batch;

        // All segment gradients against the current models (synchronous
        // update: no interior model moves until every gradient is in). Each
        // interior model accumulates left-segment then right-segment terms.
        for (std::size_t s = 0; s + 1 < n_models; ++s) {
            JsdPairResult seg =
                backward_jsd_pair(result.path.models[s], result.path.models[s + 1], inputs);
            if (s > 0) axpy(grads[s], 1.0, seg.grad_p);
            if (s + 2 < n_models) grads[s + 1] = std::move(seg.grad_q);
        }
        for (std::size_t i = 1; i + 1 < n_models; ++i) {
            axpy(result.path.models[i], -opts.learning_rate, grads[i]);
        }

        if (iter % opts.eval_every == 0 || iter == opts.iterations) {
            result.trace.push_back(make_trace_point(iter, result.path, data.features));
        }
    }
    return result;
}

void save_path(const Path& path, const std::filesystem::path& dir) {
    path.validate();
    std::filesystem::create_directories(dir);
    JsonWriter w;
    w.begin_object();
    w.key("version");
    w.value(1);
    w.key("n");
    w.value(path.size());
    w.key("config");
    write_config(w, path.models.front().config);
    w.end_object();
    write_text_file(dir / "manifest.json", w.str() + "\n");

    char name[32];
    for (std::size_t i = 0; i < path.size(); ++i) {
        std::snprintf(name, sizeof(name), "model_%03zu.json", i);
        save_model(path.models[i], dir / name);
    }
}

Path load_path(const std::filesystem::path& dir) {
    json manifest;
    std::size_t n = 0;
    try {
        manifest = json::parse(read_text_file(dir / "manifest.json"));
        if (manifest.at("version").get<int>() != 1) {
            throw std::runtime_error("load_path: unsupported version in " + dir.string());
        }
        n = manifest.at("n").get<std::size_t>();
    } catch (const json::exception& e) {
        throw std::runtime_error("load_path: " + (dir / "manifest.json").string() + ": " +
                                 e.what());
    }
    Path path;
    char name[32];
    for (std::size_t i = 0; i < n; ++i) {
        std::snprintf(name, sizeof(name), "model_%03zu.json", i);
        path.models.push_back(load_model(dir / name));
    }
    path.validate();
    return path;
}

}  // namespace geopath
