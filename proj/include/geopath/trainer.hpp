#pragma once

#include <cstdint>

#include "geopath/dataset.hpp"
#include "geopath/nn.hpp"

namespace geopath {

struct TrainOpts {
    double learning_rate = 0.1;
    std::size_t batch_size = 256;
    std::size_t epochs = 1;
    std::uint64_t seed = 0;
    double momentum = 0.0;

    void validate() const;
};

// Seeded SGD from a fresh He init: epochs * ceil(n/batch) steps with a
// per-epoch reshuffle, last partial minibatch kept. Deterministic per
// (config, data, opts).
ModelParams train(const MlpConfig& config, const Dataset& data, const TrainOpts& opts);

struct EvalResult {
    double loss = 0.0;      // mean cross-entropy
    double accuracy = 0.0;  // argmax, ties toward the lowest class index
};

EvalResult evaluate(const ModelParams& params, const Dataset& data);

// Rows [begin, end) of the shuffled order gathered into a batch.
Matrix gather_rows(const Matrix& features, const std::vector<std::size_t>& order,
                   std::size_t begin, std::size_t end);

}  // namespace geopath
