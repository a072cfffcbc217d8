#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "geopath/matrix.hpp"

namespace geopath {

enum class Activation { relu };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

struct MlpConfig {
    std::vector<std::size_t> layer_sizes;  // input dim, hidden dims..., class count
    Activation activation = Activation::relu;
    bool use_layernorm = false;

    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t class_count() const { return layer_sizes.back(); }
    std::size_t layer_count() const { return layer_sizes.size() - 1; }
    std::size_t hidden_count() const { return layer_sizes.size() - 2; }

    void validate() const;
    bool operator==(const MlpConfig&) const = default;
};

// The full parameter vector of a dense feed-forward classifier. Layer l maps
// width layer_sizes[l] to layer_sizes[l+1]; weights are out x in. LayerNorm
// gains/shifts exist per hidden layer when use_layernorm is set.
struct ModelParams {
    MlpConfig config;
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;
    std::vector<std::vector<double>> ln_gains;
    std::vector<std::vector<double>> ln_shifts;
};

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kProbFloor = 1e-12;  // clamp under logs

ModelParams zero_params(const MlpConfig& config);
ModelParams init_params(const MlpConfig& config, std::uint64_t seed);  // He init

void check_params(const ModelParams& p, const char* what);

std::size_t param_count(const MlpConfig& config);
std::vector<double> flatten(const ModelParams& p);
ModelParams unflatten(const MlpConfig& config, const std::vector<double>& flat);
void axpy(ModelParams& dst, double alpha, const ModelParams& g);  // dst += alpha*g
double param_distance(const ModelParams& a, const ModelParams& b);
bool params_bitwise_equal(const ModelParams& a, const ModelParams& b);

// Batched forward pass; returns one logit row per input row. Deterministic,
// and bit-stable under hidden-unit permutation (see canonical_dot).
Matrix forward(const ModelParams& params, const Matrix& inputs);

// Max-shifted row softmax.
Matrix softmax(const Matrix& logits);

// Mean of -log p(label); probabilities clamped below at kProbFloor.
double cross_entropy(const Matrix& probs, const std::vector<int>& labels);

// Exact gradient of mean cross-entropy w.r.t. every parameter.
ModelParams backward_ce(const ModelParams& params, const Matrix& inputs,
                        const std::vector<int>& labels);

struct JsdPairResult {
    ModelParams grad_p;
    ModelParams grad_q;
    double jsd = 0.0;  // mean over batch rows
};

// Mean Jensen-Shannon divergence between the two models' predictive rows on
// a shared batch, with exact gradients for both parameter sets.
JsdPairResult backward_jsd_pair(const ModelParams& params_p, const ModelParams& params_q,
                                const Matrix& inputs);

// JSD between two probability rows: 0.5 KL(p||m) + 0.5 KL(q||m), natural
// log, m = (p+q)/2, values under logs clamped at kProbFloor. Assumes valid
// rows; the validating public entry point is geopath::jsd.
double row_jsd(const double* p, const double* q, std::size_t n);

// Directional derivative of the logits along a parameter direction
// (forward-mode JVP); used by the Fisher quadratic form.
void forward_jvp(const ModelParams& params, const ModelParams& direction, const Matrix& inputs,
                 Matrix& logits_out, Matrix& dlogits_out);

}  // namespace geopath
