#include "geopath/align.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <json.hpp>
#include <limits>
#include <stdexcept>

#include "geopath/jsonwrite.hpp"
#include "geopath/rng.hpp"

namespace geopath {

using nlohmann::json;

PermutationSpec identity_spec(const MlpConfig& config) {
    config.validate();
    PermutationSpec spec;
    for (std::size_t h = 0; h < config.hidden_count(); ++h) {
        std::vector<std::size_t> p(config.layer_sizes[h + 1]);
        for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
        spec.perms.push_back(std::move(p));
    }
    return spec;
}

PermutationSpec inverse_spec(const PermutationSpec& spec) {
    PermutationSpec inv;
    for (const auto& p : spec.perms) {
        std::vector<std::size_t> q(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) q[p[i]] = i;
        inv.perms.push_back(std::move(q));
    }
    return inv;
}

void check_spec(const PermutationSpec& spec, const MlpConfig& config) {
    if (spec.perms.size() != config.hidden_count()) {
        throw std::invalid_argument("PermutationSpec: expected " +
                                    std::to_string(config.hidden_count()) +
                                    " hidden-layer permutations, got " +
                                    std::to_string(spec.perms.size()));
    }
    for (std::size_t h = 0; h < spec.perms.size(); ++h) {
        const std::size_t width = config.layer_sizes[h + 1];
        const auto& p = spec.perms[h];
        if (p.size() != width) {
            throw std::invalid_argument("PermutationSpec: layer " + std::to_string(h) +
                                        " has length " + std::to_string(p.size()) +
                                        ", expected " + std::to_string(width));
        }
        std::vector<bool> seen(width, false);
        for (std::size_t v : p) {
            if (v >= width || seen[v]) {
                throw std::invalid_argument("PermutationSpec: layer " + std::to_string(h) +
                                            " is not a bijection");
            }
            seen[v] = true;
        }
    }
}

void save_spec(const PermutationSpec& spec, const std::filesystem::path& path) {
    JsonWriter w;
    w.begin_object();
    w.key("version");
    w.value(1);
    w.key("perms");
    w.begin_array();
    for (const auto& p : spec.perms) w.index_array(p);
    w.end_array();
    w.end_object();
    write_text_file(path, w.str() + "\n");
}

PermutationSpec load_spec(const std::filesystem::path& path) {
    try {
        const json j = json::parse(read_text_file(path));
        if (j.at("version").get<int>() != 1) {
            throw std::runtime_error("load_spec: " + path.string() + ": unsupported version");
        }
        PermutationSpec spec;
        for (const auto& jp : j.at("perms")) {
            std::vector<std::size_t> p;
            for (const auto& v : jp) p.push_back(v.get<std::size_t>());
            spec.perms.push_back(std::move(p));
        }
        return spec;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_spec: " + path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// linear assignment
// ---------------------------------------------------------------------------

namespace {

// Jonker-Volgenant shortest augmenting paths, minimization, O(n^3). On exit
// the duals are feasible (cost - u - v >= 0 up to roundoff) and tight on the
// assigned edges.
void jv_solve(const Matrix& cost, std::vector<std::size_t>& rowsol, std::vector<double>& u,
              std::vector<double>& v) {
    const std::size_t n = cost.rows;
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> uu(n + 1, 0.0), vv(n + 1, 0.0), minv(n + 1, 0.0);
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1, 0);

    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            std::size_t j1 = 0;
            double delta = inf;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost.at(i0 - 1, j - 1) - uu[i0] - vv[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    uu[p[j]] += delta;
                    vv[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }

    rowsol.assign(n, 0);
    for (std::size_t j = 1; j <= n; ++j) {
        if (p[j] != 0) rowsol[p[j] - 1] = j - 1;
    }
    u.assign(n, 0.0);
    v.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) u[i] = uu[i + 1];
    for (std::size_t j = 0; j < n; ++j) v[j] = vv[j + 1];
}

// Can rows [start, n) all be matched into columns not in col_used? (Kuhn)
bool remaining_feasible(const std::vector<std::vector<std::size_t>>& adj, std::size_t n,
                        std::size_t start, const std::vector<char>& col_used) {
    constexpr std::size_t kNone = static_cast<std::size_t>(-1);
    std::vector<std::size_t> col_match(n, kNone);
    std::vector<char> visited(n, 0);

    std::function<bool(std::size_t)> augment = [&](std::size_t row) -> bool {
        for (std::size_t j : adj[row]) {
            if (col_used[j] || visited[j]) continue;
            visited[j] = 1;
            if (col_match[j] == kNone || augment(col_match[j])) {
                col_match[j] = row;
                return true;
            }
        }
        return false;
    };

    for (std::size_t r = start; r < n; ++r) {
        std::fill(visited.begin(), visited.end(), 0);
        if (!augment(r)) return false;
    }
    return true;
}

}  // namespace

std::vector<std::size_t> solve_lap(const Matrix& score) {
    if (score.rows == 0 || score.rows != score.cols) {
        throw std::invalid_argument("solve_lap: matrix must be square and non-empty, got " +
                                    std::to_string(score.rows) + "x" +
                                    std::to_string(score.cols));
    }
    if (!all_finite(score.data)) {
        throw std::invalid_argument("solve_lap: non-finite score entry");
    }

    const std::size_t n = score.rows;

    // maximize score == minimize negated score
    Matrix cost(n, n);
    double scale = 1.0;
    for (std::size_t i = 0; i < score.data.size(); ++i) {
        cost.data[i] = -score.data[i];
        scale = std::max(scale, std::abs(score.data[i]));
    }

    std::vector<std::size_t> rowsol;
    std::vector<double> u, v;
    jv_solve(cost, rowsol, u, v);

    // Optimal assignments use only tight edges (complementary slackness), so
    // the lexicographically smallest optimum is the lexicographically
    // smallest perfect matching of the tight-edge graph. The epsilon absorbs
    // dual roundoff; genuinely tied entries produce exactly zero slack.
    const double eps = 1e-10 * scale;
    std::vector<std::vector<std::size_t>> adj(n);
    std::size_t edges = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (j == rowsol[i] || cost.at(i, j) - u[i] - v[j] <= eps) {
                adj[i].push_back(j);
                ++edges;
            }
        }
    }
    if (edges == n) return rowsol;  // unique tight matching

    std::vector<char> col_used(n, 0);
    std::vector<std::size_t> result(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool placed = false;
        for (std::size_t j : adj[i]) {
            if (col_used[j]) continue;
            col_used[j] = 1;
            if (remaining_feasible(adj, n, i + 1, col_used)) {
                result[i] = j;
                placed = true;
                break;
            }
            col_used[j] = 0;
        }
        if (!placed) {
            // cannot happen: rowsol itself always completes
            throw std::runtime_error("solve_lap: tight-edge matching failed");
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// weight matching
// ---------------------------------------------------------------------------

namespace {

// Assignment scores for hidden layer l given the other layers' current
// permutations: S = W_l^A (P_{l-1} W_l^B)^T + b_l^A b_l^B^T
//                  + (W_{l+1}^A)^T P_{l+1} W_{l+1}^B.
Matrix build_score(const ModelParams& a, const ModelParams& b, const PermutationSpec& spec,
                   std::size_t l) {
    const MlpConfig& cfg = a.config;
    const std::size_t hidden = cfg.hidden_count();
    const std::size_t width = cfg.layer_sizes[l + 1];
    Matrix s(width, width);

    const Matrix& wa = a.weights[l];
    const Matrix& wb = b.weights[l];
    const std::vector<std::size_t>* prev = l > 0 ? &spec.perms[l - 1] : nullptr;
    for (std::size_t i = 0; i < width; ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            double acc = a.biases[l][i] * b.biases[l][j];
            const double* ra = wa.row(i);
            const double* rb = wb.row(j);
            for (std::size_t k = 0; k < wa.cols; ++k) {
                acc += ra[k] * rb[prev ? (*prev)[k] : k];
            }
            s.at(i, j) = acc;
        }
    }

    const Matrix& na = a.weights[l + 1];
    const Matrix& nb = b.weights[l + 1];
    const std::vector<std::size_t>* next = l + 1 < hidden ? &spec.perms[l + 1] : nullptr;
    for (std::size_t m = 0; m < na.rows; ++m) {
        const double* ra = na.row(m);
        const double* rb = nb.row(next ? (*next)[m] : m);
        for (std::size_t i = 0; i < width; ++i) {
            const double am = ra[i];
            if (am == 0.0) continue;
            for (std::size_t j = 0; j < width; ++j) {
                s.at(i, j) += am * rb[j];
            }
        }
    }
    return s;
}

}  // namespace

double matching_objective(const ModelParams& theta_a, const ModelParams& theta_b,
                          const PermutationSpec& spec) {
    const ModelParams pb = apply_permutation(theta_b, spec);
    double acc = 0.0;
    for (std::size_t l = 0; l < theta_a.weights.size(); ++l) {
        const double* wa = theta_a.weights[l].data.data();
        const double* wb = pb.weights[l].data.data();
        for (std::size_t i = 0; i < theta_a.weights[l].data.size(); ++i) acc += wa[i] * wb[i];
        for (std::size_t i = 0; i < theta_a.biases[l].size(); ++i) {
            acc += theta_a.biases[l][i] * pb.biases[l][i];
        }
    }
    return acc;
}

PermutationSpec weight_matching(const ModelParams& theta_a, const ModelParams& theta_b,
                                WeightMatchingTrace* trace, std::uint64_t sweep_seed) {
    if (!(theta_a.config == theta_b.config)) {
        throw std::invalid_argument("weight_matching: config mismatch");
    }
    check_params(theta_a, "weight_matching");
    check_params(theta_b, "weight_matching");

    const std::size_t hidden = theta_a.config.hidden_count();
    PermutationSpec spec = identity_spec(theta_a.config);
    if (trace) {
        trace->sweeps = 0;
        trace->objective.assign(1, matching_objective(theta_a, theta_b, spec));
    }
    if (hidden == 0) return spec;

    RandomStream order_rng(mix_seed(sweep_seed, 0x5feedull));
    std::vector<std::size_t> order(hidden);
    for (std::size_t l = 0; l < hidden; ++l) order[l] = l;

    constexpr std::size_t kMaxSweeps = 200;
    for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
        bool changed = false;
        if (sweep_seed != 0) order_rng.shuffle(order);
        for (std::size_t l : order) {
            const Matrix s = build_score(theta_a, theta_b, spec, l);
            double current = 0.0;
            for (std::size_t i = 0; i < s.rows; ++i) current += s.at(i, spec.perms[l][i]);
            std::vector<std::size_t> sigma = solve_lap(s);
            double best = 0.0;
            for (std::size_t i = 0; i < s.rows; ++i) best += s.at(i, sigma[i]);
            if (best > current) {
                spec.perms[l] = std::move(sigma);
                changed = true;
                if (trace) {
                    trace->objective.push_back(matching_objective(theta_a, theta_b, spec));
                }
            }
        }
        if (trace) trace->sweeps = sweep + 1;
        if (!changed) break;
    }
    return spec;
}

ModelParams apply_permutation(const ModelParams& theta, const PermutationSpec& spec) {
    check_params(theta, "apply_permutation");
    check_spec(spec, theta.config);

    const MlpConfig& cfg = theta.config;
    const std::size_t hidden = cfg.hidden_count();
    ModelParams out = zero_params(cfg);

    for (std::size_t l = 0; l < cfg.layer_count(); ++l) {
        const std::vector<std::size_t>* rowp = l < hidden ? &spec.perms[l] : nullptr;
        const std::vector<std::size_t>* colp = l > 0 ? &spec.perms[l - 1] : nullptr;
        const Matrix& src = theta.weights[l];
        Matrix& dst = out.weights[l];
        for (std::size_t i = 0; i < src.rows; ++i) {
            const double* srow = src.row(rowp ? (*rowp)[i] : i);
            double* drow = dst.row(i);
            for (std::size_t k = 0; k < src.cols; ++k) {
                drow[k] = srow[colp ? (*colp)[k] : k];
            }
        }
        for (std::size_t i = 0; i < src.rows; ++i) {
            out.biases[l][i] = theta.biases[l][rowp ? (*rowp)[i] : i];
        }
    }
    for (std::size_t h = 0; h < theta.ln_gains.size(); ++h) {
        const auto& p = spec.perms[h];
        for (std::size_t i = 0; i < p.size(); ++i) {
            out.ln_gains[h][i] = theta.ln_gains[h][p[i]];
            out.ln_shifts[h][i] = theta.ln_shifts[h][p[i]];
        }
    }
    return out;
}

}  // namespace geopath
