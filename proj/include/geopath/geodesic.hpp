#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "geopath/dataset.hpp"
#include "geopath/nn.hpp"

namespace geopath {

// Ordered sequence of models sharing one architecture. Index 0 and N-1 are
// the fixed endpoints; the optimizer never writes to them.
struct Path {
    std::vector<ModelParams> models;

    std::size_t size() const { return models.size(); }
    void validate() const;
};

struct GeodesicOpts {
    double learning_rate = 0.1;
    std::size_t batch_size = 256;
    std::size_t iterations = 4000;
    std::uint64_t seed = 0;
    std::size_t eval_every = 100;

    void validate() const;
};

struct TracePoint {
    std::size_t iteration = 0;
    double energy = 0.0;         // sum of segment JSDs on the evaluation batch
    double jsd_length = 0.0;     // sum of sqrt(segment JSD)
    double euclid_length = 0.0;  // sum of parameter-space segment norms
};

// Jensen-Shannon divergence between two probability vectors:
// 0.5 KL(p||m) + 0.5 KL(q||m), m = (p+q)/2, natural log. Inputs must be
// nonnegative and sum to 1 within 1e-9.
double jsd(std::span<const double> p, std::span<const double> q);

// Linear interpolation with exact endpoint copies: model i sits at
// t = i/(n-1) between the two endpoints.
Path init_path(const ModelParams& theta_a, const ModelParams& theta_b_aligned, std::size_t n);

struct PathEnergy {
    double total = 0.0;
    std::vector<double> per_segment;  // mean-over-batch JSD per adjacent pair
};

// Discretized path energy: sum over adjacent pairs of the mean JSD between
// their predictive distributions on the given inputs. Labels never enter.
PathEnergy path_energy(const Path& path, const Matrix& inputs);

struct OptimizeResult {
    Path path;
    std::vector<TracePoint> trace;
};

// Minimizes the path energy with endpoints fixed: each iteration draws one
// seeded minibatch of inputs shared by all segments, computes every segment
// gradient against the current models, then steps all interior models at
// once (synchronous update). The trace is recorded on the full feature set
// every eval_every iterations. Only data.features is read.
OptimizeResult optimize_path(const Path& path, const Dataset& data, const GeodesicOpts& opts);

// A path directory holds manifest.json plus model_000.json .. model_{N-1}.json.
void save_path(const Path& path, const std::filesystem::path& dir);
Path load_path(const std::filesystem::path& dir);

}  // namespace geopath
