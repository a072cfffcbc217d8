#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "geopath/dataset.hpp"
#include "geopath/nn.hpp"
#include "geopath/rng.hpp"

namespace testutil {

using namespace geopath;
namespace fs = std::filesystem;

inline double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Central-difference directional derivative of a scalar function of params.
template <typename F>
double directional_diff(F&& f, const ModelParams& params, const ModelParams& dir, double h) {
    ModelParams plus = params;
    axpy(plus, h, dir);
    ModelParams minus = params;
    axpy(minus, -h, dir);
    return (f(plus) - f(minus)) / (2.0 * h);
}

// Full component-wise central-difference gradient.
template <typename F>
std::vector<double> fd_gradient(F&& f, const ModelParams& params, double h) {
    std::vector<double> flat = flatten(params);
    std::vector<double> grad(flat.size());
    for (std::size_t i = 0; i < flat.size(); ++i) {
        const double keep = flat[i];
        flat[i] = keep + h;
        const double up = f(unflatten(params.config, flat));
        flat[i] = keep - h;
        const double down = f(unflatten(params.config, flat));
        flat[i] = keep;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

// Largest relative component error between an analytic and an FD gradient,
// ignoring components where both are tiny.
inline double max_grad_rel_err(const std::vector<double>& analytic,
                               const std::vector<double>& fd, double tiny = 1e-7) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double denom = std::max({std::abs(analytic[i]), std::abs(fd[i]), tiny});
        worst = std::max(worst, std::abs(analytic[i] - fd[i]) / denom);
    }
    return worst;
}

// Exhaustive maximization LAP oracle: best total plus the lexicographically
// smallest optimal permutation (enumeration order is already lexicographic).
inline std::pair<double, std::vector<std::size_t>> brute_force_lap(const Matrix& score) {
    const std::size_t n = score.rows;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::vector<std::size_t> best_perm = perm;
    double best = -1e300;
    do {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += score.at(i, perm[i]);
        if (total > best) {
            best = total;
            best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return {best, best_perm};
}

inline Dataset random_dataset(std::size_t n, std::size_t dim, std::size_t classes,
                              std::uint64_t seed) {
    RandomStream rng(seed);
    Dataset data;
    data.features = Matrix(n, dim);
    for (double& v : data.features.data) v = rng.uniform(-2.0, 2.0);
    data.labels.resize(n);
    for (auto& y : data.labels) y = static_cast<int>(rng.uniform_index(classes));
    data.class_count = classes;
    return data;
}

// Random direction in parameter space, normalized to unit length.
inline ModelParams random_unit_direction(const MlpConfig& config, std::uint64_t seed) {
    RandomStream rng(seed);
    ModelParams dir = zero_params(config);
    std::vector<double> flat = flatten(dir);
    double norm2 = 0.0;
    for (double& v : flat) {
        v = rng.normal();
        norm2 += v * v;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    for (double& v : flat) v *= inv;
    return unflatten(config, flat);
}

inline double grad_norm(const ModelParams& g) {
    const std::vector<double> flat = flatten(g);
    double acc = 0.0;
    for (double v : flat) acc += v * v;
    return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// process / filesystem helpers for CLI-level tests
// ---------------------------------------------------------------------------

inline fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::current_path() / "test_tmp" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

inline int run_cli(const std::string& args, const fs::path& stderr_file = {}) {
    std::string cmd = std::string(GEOPATH_CLI_BIN) + " " + args;
    if (!stderr_file.empty()) {
        cmd += " 2>" + stderr_file.string();
    } else {
        cmd += " 2>/dev/null";
    }
    cmd += " >/dev/null";
    const int status = std::system(cmd.c_str());
    return status == -1 ? -1 : WEXITSTATUS(status);
}

inline std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::string s((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return s;
}

// Byte-compares two directory trees; fills diff with the first mismatch.
inline bool trees_identical(const fs::path& a, const fs::path& b, std::string* diff = nullptr) {
    auto listing = [](const fs::path& root) {
        std::vector<fs::path> rel;
        for (const auto& entry : fs::recursive_directory_iterator(root)) {
            if (entry.is_regular_file()) rel.push_back(fs::relative(entry.path(), root));
        }
        std::sort(rel.begin(), rel.end());
        return rel;
    };
    const auto la = listing(a);
    const auto lb = listing(b);
    if (la != lb) {
        if (diff) *diff = "file lists differ";
        return false;
    }
    for (const auto& rel : la) {
        if (slurp(a / rel) != slurp(b / rel)) {
            if (diff) *diff = "content differs: " + rel.string();
            return false;
        }
    }
    return true;
}

}  // namespace testutil
