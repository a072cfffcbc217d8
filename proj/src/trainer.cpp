#include "geopath/trainer.hpp"

#include <algorithm>
#include <stdexcept>

#include "geopath/rng.hpp"

namespace geopath {

void TrainOpts::validate() const {
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainOpts: learning_rate must be > 0");
    if (batch_size < 1) throw std::invalid_argument("TrainOpts: batch_size must be >= 1");
    if (epochs < 1) throw std::invalid_argument("TrainOpts: epochs must be >= 1");
    if (momentum < 0.0 || momentum >= 1.0) {
        throw std::invalid_argument("TrainOpts: momentum must be in [0, 1)");
    }
}

Matrix gather_rows(const Matrix& features, const std::vector<std::size_t>& order,
                   std::size_t begin, std::size_t end) {
    Matrix out(end - begin, features.cols);
    for (std::size_t i = begin; i < end; ++i) {
        std::copy(features.row(order[i]), features.row(order[i]) + features.cols,
                  out.row(i - begin));
    }
    return out;
}

ModelParams train(const MlpConfig& config, const Dataset& data, const TrainOpts& opts) {
    config.validate();
    data.validate();
    opts.validate();
    if (data.dim() != config.input_dim()) {
        throw std::invalid_argument("train: dataset dim " + std::to_string(data.dim()) +
                                    " does not match input dim " +
                                    std::to_string(config.input_dim()));
    }
    if (data.class_count != config.class_count()) {
        throw std::invalid_argument("train: dataset has " + std::to_string(data.class_count) +
                                    " classes, config expects " +
                                    std::to_string(config.class_count()));
    }

    ModelParams params = init_params(config, mix_seed(opts.seed, 0x696e6974ull));
    ModelParams velocity = zero_params(config);
    RandomStream shuffle_rng(mix_seed(opts.seed, 0x73687566ull));

    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::vector<int> batch_labels;

    for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        for (std::size_t start = 0; start < n; start += opts.batch_size) {
            const std::size_t end = std::min(n, start + opts.batch_size);
            const Matrix batch = gather_rows(data.features, order, start, end);
            batch_labels.resize(end - start);
            for (std::size_t i = start; i < end; ++i) {
                batch_labels[i - start] = data.labels[order[i]];
            }
            const ModelParams grad = backward_ce(params, batch, batch_labels);
            if (opts.momentum > 0.0) {
                // classical momentum: v <- mu v + g, theta <- theta - lr v
                for (std::size_t l = 0; l < velocity.weights.size(); ++l) {
                    for (double& v : velocity.weights[l].data) v *= opts.momentum;
                    for (double& v : velocity.biases[l]) v *= opts.momentum;
                }
                for (std::size_t h = 0; h < velocity.ln_gains.size(); ++h) {
                    for (double& v : velocity.ln_gains[h]) v *= opts.momentum;
                    for (double& v : velocity.ln_shifts[h]) v *= opts.momentum;
                }
                axpy(velocity, 1.0, grad);
                axpy(params, -opts.learning_rate, velocity);
            } else {
                axpy(params, -opts.learning_rate, grad);
            }
        }
    }
    return params;
}

EvalResult evaluate(const ModelParams& params, const Dataset& data) {
    data.validate();
    if (data.class_count > params.config.class_count()) {
        throw std::invalid_argument("evaluate: dataset has more classes than the model");
    }
    const Matrix logits = forward(params, data.features);
    const Matrix probs = softmax(logits);

    EvalResult result;
    result.loss = cross_entropy(probs, data.labels);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < logits.rows; ++r) {
        const double* row = logits.row(r);
        std::size_t arg = 0;
        for (std::size_t c = 1; c < logits.cols; ++c) {
            if (row[c] > row[arg]) arg = c;  // ties keep the lowest index
        }
        if (arg == static_cast<std::size_t>(data.labels[r])) ++correct;
    }
    result.accuracy = static_cast<double>(correct) / static_cast<double>(logits.rows);
    return result;
}

}  // namespace geopath
