#include "geopath/checkpoint.hpp"

#include <json.hpp>
#include <stdexcept>

namespace geopath {

using nlohmann::json;

void write_config(JsonWriter& w, const MlpConfig& config) {
    w.begin_object();
    w.key("layer_sizes");
    w.index_array(config.layer_sizes);
    w.key("activation");
    w.value(activation_name(config.activation));
    w.key("use_layernorm");
    w.value(config.use_layernorm);
    w.end_object();
}

std::string config_to_json(const MlpConfig& config) {
    JsonWriter w;
    write_config(w, config);
    return w.str();
}

namespace {

MlpConfig config_from_json(const json& j) {
    MlpConfig config;
    for (const auto& s : j.at("layer_sizes")) {
        config.layer_sizes.push_back(s.get<std::size_t>());
    }
    config.activation = activation_from_name(j.at("activation").get<std::string>());
    config.use_layernorm = j.at("use_layernorm").get<bool>();
    config.validate();
    return config;
}

}  // namespace

MlpConfig config_from_json_text(const std::string& text) {
    return config_from_json(json::parse(text));
}

void save_model(const ModelParams& params, const std::filesystem::path& path) {
    check_params(params, "save_model");
    JsonWriter w;
    w.begin_object();
    w.key("version");
    w.value(kCheckpointVersion);
    w.key("config");
    write_config(w, params.config);
    w.key("layers");
    w.begin_array();
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        w.begin_object();
        w.key("w");
        w.begin_object();
        w.key("rows");
        w.value(params.weights[l].rows);
        w.key("cols");
        w.value(params.weights[l].cols);
        w.key("data");
        w.number_array(params.weights[l].data);
        w.end_object();
        w.key("b");
        w.number_array(params.biases[l]);
        if (params.config.use_layernorm && l < params.ln_gains.size()) {
            w.key("ln_gain");
            w.number_array(params.ln_gains[l]);
            w.key("ln_shift");
            w.number_array(params.ln_shifts[l]);
        }
        w.end_object();
    }
    w.end_array();
    w.end_object();
    write_text_file(path, w.str() + "\n");
}

namespace {

ModelParams load_model_json(const json& j, const std::filesystem::path& path) {
    if (j.at("version").get<int>() != kCheckpointVersion) {
        throw std::runtime_error("load_model: " + path.string() + ": unsupported version");
    }
    ModelParams params = zero_params(config_from_json(j.at("config")));
    const json& layers = j.at("layers");
    if (layers.size() != params.weights.size()) {
        throw std::runtime_error("load_model: " + path.string() + ": expected " +
                                 std::to_string(params.weights.size()) + " layers, got " +
                                 std::to_string(layers.size()));
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const json& jl = layers[l];
        const json& jw = jl.at("w");
        const std::size_t rows = jw.at("rows").get<std::size_t>();
        const std::size_t cols = jw.at("cols").get<std::size_t>();
        if (rows != params.weights[l].rows || cols != params.weights[l].cols) {
            throw std::runtime_error("load_model: " + path.string() + ": layer " +
                                     std::to_string(l) + " shape mismatch");
        }
        const json& data = jw.at("data");
        if (data.size() != rows * cols) {
            throw std::runtime_error("load_model: " + path.string() + ": layer " +
                                     std::to_string(l) + " data length mismatch");
        }
        for (std::size_t i = 0; i < data.size(); ++i) {
            params.weights[l].data[i] = data[i].get<double>();
        }
        const json& b = jl.at("b");
        if (b.size() != params.biases[l].size()) {
            throw std::runtime_error("load_model: " + path.string() + ": layer " +
                                     std::to_string(l) + " bias length mismatch");
        }
        for (std::size_t i = 0; i < b.size(); ++i) params.biases[l][i] = b[i].get<double>();
        if (params.config.use_layernorm && l < params.ln_gains.size()) {
            const json& g = jl.at("ln_gain");
            const json& s = jl.at("ln_shift");
            if (g.size() != params.ln_gains[l].size() || s.size() != params.ln_shifts[l].size()) {
                throw std::runtime_error("load_model: " + path.string() + ": layer " +
                                         std::to_string(l) + " layernorm length mismatch");
            }
            for (std::size_t i = 0; i < g.size(); ++i) params.ln_gains[l][i] = g[i].get<double>();
            for (std::size_t i = 0; i < s.size(); ++i) params.ln_shifts[l][i] = s[i].get<double>();
        }
    }
    check_params(params, "load_model");
    return params;
}

}  // namespace

ModelParams load_model(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("load_model: " + path.string() + ": " + e.what());
    }
    try {
        return load_model_json(j, path);
    } catch (const json::exception& e) {
        throw std::runtime_error("load_model: " + path.string() + ": " + e.what());
    }
}

}  // namespace geopath
