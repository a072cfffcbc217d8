#include "geopath/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "geopath/parallel.hpp"
#include "geopath/rng.hpp"

namespace geopath {

std::string activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
    }
    throw std::invalid_argument("unknown activation");
}

Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation: " + name);
}

void MlpConfig::validate() const {
    if (layer_sizes.size() < 2) {
        throw std::invalid_argument("MlpConfig: need at least input and output sizes");
    }
    for (std::size_t s : layer_sizes) {
        if (s < 1) throw std::invalid_argument("MlpConfig: all layer sizes must be >= 1");
    }
    if (class_count() < 2) {
        throw std::invalid_argument("MlpConfig: class count must be >= 2");
    }
}

ModelParams zero_params(const MlpConfig& config) {
    config.validate();
    ModelParams p;
    p.config = config;
    const std::size_t layers = config.layer_count();
    p.weights.reserve(layers);
    p.biases.reserve(layers);
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t out = config.layer_sizes[l + 1];
        const std::size_t in = config.layer_sizes[l];
        p.weights.emplace_back(out, in);
        p.biases.emplace_back(out, 0.0);
    }
    if (config.use_layernorm) {
        for (std::size_t h = 0; h < config.hidden_count(); ++h) {
            const std::size_t w = config.layer_sizes[h + 1];
            p.ln_gains.emplace_back(w, 0.0);
            p.ln_shifts.emplace_back(w, 0.0);
        }
    }
    return p;
}

ModelParams init_params(const MlpConfig& config, std::uint64_t seed) {
    ModelParams p = zero_params(config);
    RandomStream rng(seed);
    for (std::size_t l = 0; l < config.layer_count(); ++l) {
        const double scale = std::sqrt(2.0 / static_cast<double>(config.layer_sizes[l]));
        for (double& w : p.weights[l].data) w = rng.normal() * scale;
    }
    for (auto& g : p.ln_gains) std::fill(g.begin(), g.end(), 1.0);
    return p;
}

void check_params(const ModelParams& p, const char* what) {
    p.config.validate();
    const std::size_t layers = p.config.layer_count();
    if (p.weights.size() != layers || p.biases.size() != layers) {
        throw std::invalid_argument(std::string(what) + ": layer count mismatch");
    }
    for (std::size_t l = 0; l < layers; ++l) {
        const std::size_t out = p.config.layer_sizes[l + 1];
        const std::size_t in = p.config.layer_sizes[l];
        if (p.weights[l].rows != out || p.weights[l].cols != in) {
            throw std::invalid_argument(std::string(what) + ": weight shape mismatch at layer " +
                                        std::to_string(l));
        }
        check_matrix(p.weights[l], what);
        if (p.biases[l].size() != out || !all_finite(p.biases[l])) {
            throw std::invalid_argument(std::string(what) + ": bad bias at layer " +
                                        std::to_string(l));
        }
    }
    const std::size_t ln = p.config.use_layernorm ? p.config.hidden_count() : 0;
    if (p.ln_gains.size() != ln || p.ln_shifts.size() != ln) {
        throw std::invalid_argument(std::string(what) + ": layernorm parameter count mismatch");
    }
    for (std::size_t h = 0; h < ln; ++h) {
        const std::size_t w = p.config.layer_sizes[h + 1];
        if (p.ln_gains[h].size() != w || p.ln_shifts[h].size() != w ||
            !all_finite(p.ln_gains[h]) || !all_finite(p.ln_shifts[h])) {
            throw std::invalid_argument(std::string(what) + ": bad layernorm params at layer " +
                                        std::to_string(h));
        }
    }
}

namespace {

// Parameter arrays in a fixed traversal order; the flatten/axpy/distance
// family all agree on it.
template <typename Params, typename Fn>
void for_each_array(Params& p, Fn&& fn) {
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        fn(p.weights[l].data);
        fn(p.biases[l]);
        if (p.config.use_layernorm && l < p.ln_gains.size()) {
            fn(p.ln_gains[l]);
            fn(p.ln_shifts[l]);
        }
    }
}

}  // namespace

std::size_t param_count(const MlpConfig& config) {
    config.validate();
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < config.layer_sizes.size(); ++l) {
        n += config.layer_sizes[l + 1] * (config.layer_sizes[l] + 1);
    }
    if (config.use_layernorm) {
        for (std::size_t h = 0; h < config.hidden_count(); ++h) {
            n += 2 * config.layer_sizes[h + 1];
        }
    }
    return n;
}

std::vector<double> flatten(const ModelParams& p) {
    std::vector<double> flat;
    flat.reserve(param_count(p.config));
    for_each_array(p, [&](const std::vector<double>& a) {
        flat.insert(flat.end(), a.begin(), a.end());
    });
    return flat;
}

ModelParams unflatten(const MlpConfig& config, const std::vector<double>& flat) {
    if (flat.size() != param_count(config)) {
        throw std::invalid_argument("unflatten: length " + std::to_string(flat.size()) +
                                    " does not match parameter count " +
                                    std::to_string(param_count(config)));
    }
    ModelParams p = zero_params(config);
    std::size_t pos = 0;
    for_each_array(p, [&](std::vector<double>& a) {
        std::copy(flat.begin() + pos, flat.begin() + pos + a.size(), a.begin());
        pos += a.size();
    });
    return p;
}

void axpy(ModelParams& dst, double alpha, const ModelParams& g) {
    if (!(dst.config == g.config)) throw std::invalid_argument("axpy: config mismatch");
    for (std::size_t l = 0; l < dst.weights.size(); ++l) {
        double* w = dst.weights[l].data.data();
        const double* gw = g.weights[l].data.data();
        for (std::size_t i = 0; i < dst.weights[l].data.size(); ++i) w[i] += alpha * gw[i];
        for (std::size_t i = 0; i < dst.biases[l].size(); ++i) {
            dst.biases[l][i] += alpha * g.biases[l][i];
        }
    }
    for (std::size_t h = 0; h < dst.ln_gains.size(); ++h) {
        for (std::size_t i = 0; i < dst.ln_gains[h].size(); ++i) {
            dst.ln_gains[h][i] += alpha * g.ln_gains[h][i];
            dst.ln_shifts[h][i] += alpha * g.ln_shifts[h][i];
        }
    }
}

double param_distance(const ModelParams& a, const ModelParams& b) {
    if (!(a.config == b.config)) throw std::invalid_argument("param_distance: config mismatch");
    const std::vector<double> fa = flatten(a);
    const std::vector<double> fb = flatten(b);
    double acc = 0.0;
    for (std::size_t i = 0; i < fa.size(); ++i) {
        const double d = fa[i] - fb[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

bool params_bitwise_equal(const ModelParams& a, const ModelParams& b) {
    if (!(a.config == b.config)) return false;
    bool equal = true;
    auto cmp = [&](const std::vector<double>& x, const std::vector<double>& y) {
        if (x.size() != y.size() ||
            (x.size() > 0 && std::memcmp(x.data(), y.data(), x.size() * sizeof(double)) != 0)) {
            equal = false;
        }
    };
    for (std::size_t l = 0; l < a.weights.size() && equal; ++l) {
        cmp(a.weights[l].data, b.weights[l].data);
        cmp(a.biases[l], b.biases[l]);
    }
    for (std::size_t h = 0; h < a.ln_gains.size() && equal; ++h) {
        cmp(a.ln_gains[h], b.ln_gains[h]);
        cmp(a.ln_shifts[h], b.ln_shifts[h]);
    }
    return equal;
}

// ---------------------------------------------------------------------------
// forward / backward kernels
// ---------------------------------------------------------------------------

namespace {

// Everything one row's forward pass produces, kept for the backward pass.
struct RowCache {
    std::vector<std::vector<double>> acts;     // acts[0] = x, acts[l+1] leaves layer l
    std::vector<std::vector<double>> lin;      // z = W a + b per layer
    std::vector<std::vector<double>> normed;   // LN zhat per hidden layer
    std::vector<std::vector<double>> pre_act;  // pre-ReLU per hidden layer
    std::vector<double> inv_sigma;             // per hidden layer
    std::vector<double> scratch;

    void reset(const MlpConfig& config) {
        const std::size_t layers = config.layer_count();
        acts.assign(layers + 1, {});
        lin.assign(layers, {});
        normed.assign(config.hidden_count(), {});
        pre_act.assign(config.hidden_count(), {});
        inv_sigma.assign(config.hidden_count(), 0.0);
        for (std::size_t l = 0; l <= layers; ++l) acts[l].resize(config.layer_sizes[l]);
        for (std::size_t l = 0; l < layers; ++l) lin[l].resize(config.layer_sizes[l + 1]);
        for (std::size_t h = 0; h < config.hidden_count(); ++h) {
            normed[h].resize(config.layer_sizes[h + 1]);
            pre_act[h].resize(config.layer_sizes[h + 1]);
        }
    }
};

void forward_row(const ModelParams& p, const double* x, RowCache& c) {
    const MlpConfig& cfg = p.config;
    const std::size_t layers = cfg.layer_count();
    std::copy(x, x + cfg.input_dim(), c.acts[0].begin());
    for (std::size_t l = 0; l < layers; ++l) {
        const Matrix& w = p.weights[l];
        const std::vector<double>& a_prev = c.acts[l];
        std::vector<double>& z = c.lin[l];
        for (std::size_t i = 0; i < w.rows; ++i) {
            z[i] = canonical_dot(w.row(i), a_prev.data(), w.cols) + p.biases[l][i];
        }
        if (l + 1 == layers) {
            c.acts[layers] = z;  // logits
            break;
        }
        const std::size_t width = z.size();
        std::vector<double>& pre = c.pre_act[l];
        if (cfg.use_layernorm) {
            c.scratch = z;
            const double mean = canonical_sum(c.scratch.data(), width) /
                                static_cast<double>(width);
            c.scratch.resize(width);
            for (std::size_t k = 0; k < width; ++k) {
                const double d = z[k] - mean;
                c.scratch[k] = d * d;
            }
            const double var = canonical_sum(c.scratch.data(), width) /
                               static_cast<double>(width);
            const double inv_sigma = 1.0 / std::sqrt(var + kLayerNormEps);
            c.inv_sigma[l] = inv_sigma;
            for (std::size_t k = 0; k < width; ++k) {
                const double zh = (z[k] - mean) * inv_sigma;
                c.normed[l][k] = zh;
                pre[k] = p.ln_gains[l][k] * zh + p.ln_shifts[l][k];
            }
        } else {
            pre = z;
        }
        for (std::size_t k = 0; k < width; ++k) {
            c.acts[l + 1][k] = pre[k] > 0.0 ? pre[k] : 0.0;
        }
    }
}

// Backpropagates d(loss)/d(logits) for one row, accumulating into acc.
void backward_row(const ModelParams& p, const RowCache& c, std::vector<double> dz,
                  ModelParams& acc) {
    const MlpConfig& cfg = p.config;
    std::vector<double> da;
    for (std::size_t li = cfg.layer_count(); li-- > 0;) {
        const Matrix& w = p.weights[li];
        const std::vector<double>& a_prev = c.acts[li];
        Matrix& gw = acc.weights[li];
        for (std::size_t i = 0; i < w.rows; ++i) {
            const double d = dz[i];
            double* grow = gw.row(i);
            for (std::size_t k = 0; k < w.cols; ++k) grow[k] += d * a_prev[k];
            acc.biases[li][i] += d;
        }
        if (li == 0) break;
        da.assign(w.cols, 0.0);
        for (std::size_t i = 0; i < w.rows; ++i) {
            const double d = dz[i];
            const double* wrow = w.row(i);
            for (std::size_t k = 0; k < w.cols; ++k) da[k] += wrow[k] * d;
        }
        const std::size_t h = li - 1;  // hidden layer feeding this one
        const std::size_t width = da.size();
        for (std::size_t k = 0; k < width; ++k) {
            if (!(c.pre_act[h][k] > 0.0)) da[k] = 0.0;
        }
        if (cfg.use_layernorm) {
            const std::vector<double>& zh = c.normed[h];
            double sum_dzh = 0.0;
            double sum_dzh_zh = 0.0;
            std::vector<double> dzh(width);
            for (std::size_t k = 0; k < width; ++k) {
                acc.ln_gains[h][k] += da[k] * zh[k];
                acc.ln_shifts[h][k] += da[k];
                dzh[k] = da[k] * p.ln_gains[h][k];
                sum_dzh += dzh[k];
                sum_dzh_zh += dzh[k] * zh[k];
            }
            const double m1 = sum_dzh / static_cast<double>(width);
            const double m2 = sum_dzh_zh / static_cast<double>(width);
            dz.assign(width, 0.0);
            for (std::size_t k = 0; k < width; ++k) {
                dz[k] = c.inv_sigma[h] * (dzh[k] - m1 - zh[k] * m2);
            }
        } else {
            dz = da;
        }
    }
}

void softmax_row(const double* z, double* p, std::size_t n) {
    double mx = z[0];
    for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, z[i]);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        p[i] = std::exp(z[i] - mx);
        sum += p[i];
    }
    for (std::size_t i = 0; i < n; ++i) p[i] /= sum;
}

void validate_inputs(const ModelParams& p, const Matrix& inputs, const char* what) {
    check_params(p, what);
    check_matrix(inputs, what);
    if (inputs.cols != p.config.input_dim()) {
        throw std::invalid_argument(std::string(what) + ": input width " +
                                    std::to_string(inputs.cols) + " does not match layer 0 (" +
                                    std::to_string(p.config.input_dim()) + ")");
    }
}

void validate_labels(const std::vector<int>& labels, std::size_t rows, std::size_t classes,
                     const char* what) {
    if (labels.size() != rows) {
        throw std::invalid_argument(std::string(what) + ": label count " +
                                    std::to_string(labels.size()) + " does not match rows " +
                                    std::to_string(rows));
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
            throw std::invalid_argument(std::string(what) + ": label " +
                                        std::to_string(labels[i]) + " at row " +
                                        std::to_string(i) + " outside [0, " +
                                        std::to_string(classes) + ")");
        }
    }
}

// Reduces per-chunk gradient accumulators in chunk order and divides by the
// batch size; the fixed order keeps results identical at any thread count.
ModelParams reduce_chunks(std::vector<ModelParams>& chunks, const MlpConfig& config,
                          std::size_t batch) {
    ModelParams total = zero_params(config);
    for (ModelParams& g : chunks) axpy(total, 1.0, g);
    const double inv = 1.0 / static_cast<double>(batch);
    for_each_array(total, [&](std::vector<double>& a) {
        for (double& v : a) v *= inv;
    });
    return total;
}

}  // namespace

Matrix forward(const ModelParams& params, const Matrix& inputs) {
    validate_inputs(params, inputs, "forward");
    Matrix out(inputs.rows, params.config.class_count());
    parallel_chunks(inputs.rows, kRowChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        RowCache cache;
        cache.reset(params.config);
        for (std::size_t r = b; r < e; ++r) {
            forward_row(params, inputs.row(r), cache);
            std::copy(cache.acts.back().begin(), cache.acts.back().end(), out.row(r));
        }
    });
    return out;
}

Matrix softmax(const Matrix& logits) {
    check_matrix(logits, "softmax");
    Matrix probs(logits.rows, logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        softmax_row(logits.row(r), probs.row(r), logits.cols);
    }
    return probs;
}

double cross_entropy(const Matrix& probs, const std::vector<int>& labels) {
    check_matrix(probs, "cross_entropy");
    validate_labels(labels, probs.rows, probs.cols, "cross_entropy");
    std::vector<double> losses(probs.rows);
    for (std::size_t r = 0; r < probs.rows; ++r) {
        losses[r] = -std::log(std::max(probs.at(r, static_cast<std::size_t>(labels[r])),
                                       kProbFloor));
    }
    return canonical_sum(losses.data(), losses.size()) / static_cast<double>(probs.rows);
}

ModelParams backward_ce(const ModelParams& params, const Matrix& inputs,
                        const std::vector<int>& labels) {
    validate_inputs(params, inputs, "backward_ce");
    validate_labels(labels, inputs.rows, params.config.class_count(), "backward_ce");
    const std::size_t n_chunks = chunk_count(inputs.rows, kRowChunk);
    std::vector<ModelParams> chunk_grads(n_chunks);
    parallel_chunks(inputs.rows, kRowChunk, [&](std::size_t ci, std::size_t b, std::size_t e) {
        ModelParams acc = zero_params(params.config);
        RowCache cache;
        cache.reset(params.config);
        const std::size_t classes = params.config.class_count();
        std::vector<double> dz(classes);
        for (std::size_t r = b; r < e; ++r) {
            forward_row(params, inputs.row(r), cache);
            softmax_row(cache.acts.back().data(), dz.data(), classes);
            dz[static_cast<std::size_t>(labels[r])] -= 1.0;
            backward_row(params, cache, dz, acc);
        }
        chunk_grads[ci] = std::move(acc);
    });
    return reduce_chunks(chunk_grads, params.config, inputs.rows);
}

double row_jsd(const double* p, const double* q, std::size_t n) {
    double acc_p = 0.0;
    double acc_q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double m = 0.5 * (p[i] + q[i]);
        const double lm = std::log(std::max(m, kProbFloor));
        if (p[i] > 0.0) acc_p += p[i] * (std::log(std::max(p[i], kProbFloor)) - lm);
        if (q[i] > 0.0) acc_q += q[i] * (std::log(std::max(q[i], kProbFloor)) - lm);
    }
    return 0.5 * acc_p + 0.5 * acc_q;
}

JsdPairResult backward_jsd_pair(const ModelParams& params_p, const ModelParams& params_q,
                                const Matrix& inputs) {
    if (!(params_p.config == params_q.config)) {
        throw std::invalid_argument("backward_jsd_pair: config mismatch");
    }
    validate_inputs(params_p, inputs, "backward_jsd_pair");
    check_params(params_q, "backward_jsd_pair");

    const MlpConfig& cfg = params_p.config;
    const std::size_t classes = cfg.class_count();
    const std::size_t n_chunks = chunk_count(inputs.rows, kRowChunk);
    std::vector<ModelParams> chunk_gp(n_chunks);
    std::vector<ModelParams> chunk_gq(n_chunks);
    std::vector<double> chunk_jsd(n_chunks, 0.0);

    parallel_chunks(inputs.rows, kRowChunk, [&](std::size_t ci, std::size_t b, std::size_t e) {
        ModelParams acc_p = zero_params(cfg);
        ModelParams acc_q = zero_params(cfg);
        RowCache cache_p;
        RowCache cache_q;
        cache_p.reset(cfg);
        cache_q.reset(cfg);
        std::vector<double> p(classes);
        std::vector<double> q(classes);
        std::vector<double> dzp(classes);
        std::vector<double> dzq(classes);
        double jsd_sum = 0.0;
        for (std::size_t r = b; r < e; ++r) {
            forward_row(params_p, inputs.row(r), cache_p);
            forward_row(params_q, inputs.row(r), cache_q);
            softmax_row(cache_p.acts.back().data(), p.data(), classes);
            softmax_row(cache_q.acts.back().data(), q.data(), classes);
            jsd_sum += row_jsd(p.data(), q.data(), classes);

            // dJSD/dp_k = 0.5 log(p_k/m_k); chain through each softmax
            double ip = 0.0;
            double iq = 0.0;
            for (std::size_t k = 0; k < classes; ++k) {
                const double m = std::max(0.5 * (p[k] + q[k]), kProbFloor);
                dzp[k] = 0.5 * (std::log(std::max(p[k], kProbFloor)) - std::log(m));
                dzq[k] = 0.5 * (std::log(std::max(q[k], kProbFloor)) - std::log(m));
                ip += dzp[k] * p[k];
                iq += dzq[k] * q[k];
            }
            for (std::size_t k = 0; k < classes; ++k) {
                dzp[k] = p[k] * (dzp[k] - ip);
                dzq[k] = q[k] * (dzq[k] - iq);
            }
            backward_row(params_p, cache_p, dzp, acc_p);
            backward_row(params_q, cache_q, dzq, acc_q);
        }
        chunk_gp[ci] = std::move(acc_p);
        chunk_gq[ci] = std::move(acc_q);
        chunk_jsd[ci] = jsd_sum;
    });

    JsdPairResult result;
    result.grad_p = reduce_chunks(chunk_gp, cfg, inputs.rows);
    result.grad_q = reduce_chunks(chunk_gq, cfg, inputs.rows);
    double total = 0.0;
    for (double v : chunk_jsd) total += v;
    result.jsd = total / static_cast<double>(inputs.rows);
    return result;
}

void forward_jvp(const ModelParams& params, const ModelParams& direction, const Matrix& inputs,
                 Matrix& logits_out, Matrix& dlogits_out) {
    if (!(params.config == direction.config)) {
        throw std::invalid_argument("forward_jvp: direction config mismatch");
    }
    validate_inputs(params, inputs, "forward_jvp");
    check_params(direction, "forward_jvp");

    const MlpConfig& cfg = params.config;
    const std::size_t layers = cfg.layer_count();
    logits_out = Matrix(inputs.rows, cfg.class_count());
    dlogits_out = Matrix(inputs.rows, cfg.class_count());

    parallel_chunks(inputs.rows, kRowChunk, [&](std::size_t, std::size_t b, std::size_t e) {
        RowCache cache;
        cache.reset(cfg);
        std::vector<double> ta;
        std::vector<double> tz;
        for (std::size_t r = b; r < e; ++r) {
            forward_row(params, inputs.row(r), cache);
            ta.assign(cfg.input_dim(), 0.0);
            for (std::size_t l = 0; l < layers; ++l) {
                const Matrix& w = params.weights[l];
                const Matrix& dw = direction.weights[l];
                const std::vector<double>& a_prev = cache.acts[l];
                tz.assign(w.rows, 0.0);
                for (std::size_t i = 0; i < w.rows; ++i) {
                    double acc = direction.biases[l][i];
                    const double* wrow = w.row(i);
                    const double* dwrow = dw.row(i);
                    for (std::size_t k = 0; k < w.cols; ++k) {
                        acc += dwrow[k] * a_prev[k] + wrow[k] * ta[k];
                    }
                    tz[i] = acc;
                }
                if (l + 1 == layers) break;
                const std::size_t width = tz.size();
                if (cfg.use_layernorm) {
                    const std::vector<double>& zh = cache.normed[l];
                    double tmean = 0.0;
                    double tproj = 0.0;
                    for (std::size_t k = 0; k < width; ++k) {
                        tmean += tz[k];
                        tproj += zh[k] * tz[k];
                    }
                    tmean /= static_cast<double>(width);
                    tproj /= static_cast<double>(width);
                    for (std::size_t k = 0; k < width; ++k) {
                        const double dzh = cache.inv_sigma[l] * (tz[k] - tmean - zh[k] * tproj);
                        tz[k] = direction.ln_gains[l][k] * zh[k] +
                                params.ln_gains[l][k] * dzh + direction.ln_shifts[l][k];
                    }
                }
                ta.assign(width, 0.0);
                for (std::size_t k = 0; k < width; ++k) {
                    ta[k] = cache.pre_act[l][k] > 0.0 ? tz[k] : 0.0;
                }
            }
            std::copy(cache.acts.back().begin(), cache.acts.back().end(), logits_out.row(r));
            std::copy(tz.begin(), tz.end(), dlogits_out.row(r));
        }
    });
}

}  // namespace geopath
