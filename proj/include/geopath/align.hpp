#pragma once

#include <filesystem>
#include <vector>

#include "geopath/matrix.hpp"
#include "geopath/nn.hpp"

namespace geopath {

// One permutation per hidden layer; perms[h][i] = j means hidden unit j of
// the permuted model lands in slot i, i.e. it is matched with unit i of the
// reference model.
struct PermutationSpec {
    std::vector<std::vector<std::size_t>> perms;
};

PermutationSpec identity_spec(const MlpConfig& config);
PermutationSpec inverse_spec(const PermutationSpec& spec);
void check_spec(const PermutationSpec& spec, const MlpConfig& config);

void save_spec(const PermutationSpec& spec, const std::filesystem::path& path);
PermutationSpec load_spec(const std::filesystem::path& path);

// Maximization linear assignment: returns the permutation sigma maximizing
// sum_i score[i, sigma(i)], exactly; ties are broken toward the
// lexicographically smallest sigma.
std::vector<std::size_t> solve_lap(const Matrix& score);

struct WeightMatchingTrace {
    std::size_t sweeps = 0;
    // Global similarity objective after each accepted layer update.
    std::vector<double> objective;
};

// Coordinate descent over hidden layers (fixed first-to-last order): solves
// a linear assignment per layer against the weights of both neighbors with
// biases folded in, accepts only strict improvements, and sweeps until a
// full pass changes nothing. A nonzero sweep_seed randomizes the layer
// order per sweep (deterministically), which can escape the occasional
// local optimum of the fixed order.
PermutationSpec weight_matching(const ModelParams& theta_a, const ModelParams& theta_b,
                                WeightMatchingTrace* trace = nullptr,
                                std::uint64_t sweep_seed = 0);

// Similarity objective <W_a, P W_b P_prev^T> summed over layers, biases
// included; what weight_matching maximizes.
double matching_objective(const ModelParams& theta_a, const ModelParams& theta_b,
                          const PermutationSpec& spec);

// Re-indexes hidden units: rows/bias (and LN gain/shift) of each hidden
// layer by its permutation, columns of the following layer to match. The
// result computes the identical function; stored values only move.
ModelParams apply_permutation(const ModelParams& theta, const PermutationSpec& spec);

}  // namespace geopath
