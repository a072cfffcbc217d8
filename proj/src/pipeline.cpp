#include "geopath/pipeline.hpp"

#include <cmath>
#include <functional>
#include <json.hpp>
#include <sstream>
#include <stdexcept>

#include "geopath/checkpoint.hpp"
#include "geopath/jsonwrite.hpp"
#include "geopath/log.hpp"
#include "geopath/rng.hpp"

namespace geopath {

namespace fs = std::filesystem;
using nlohmann::json;

void ExperimentConfig::validate() const {
    arch.validate();
    train.validate();
    geodesic.validate();
    if (path_n < 2) throw std::invalid_argument("config: path_n must be >= 2");
    const std::string& g = dataset.generator;
    if (g != "gaussian_mixture" && g != "two_moons" && g != "csv" && g != "idx") {
        throw std::invalid_argument("config: dataset.generator must be one of "
                                    "gaussian_mixture|two_moons|csv|idx, got '" + g + "'");
    }
    if (g == "csv" && dataset.path.empty()) {
        throw std::invalid_argument("config: dataset.path is required for the csv generator");
    }
    if (g == "idx" && (dataset.images.empty() || dataset.labels.empty())) {
        throw std::invalid_argument("config: dataset.images and dataset.labels are required "
                                    "for the idx generator");
    }
    if (!(dataset.test_fraction > 0.0) || !(dataset.test_fraction < 1.0)) {
        throw std::invalid_argument("config: dataset.test_fraction must be in (0, 1)");
    }
}

std::uint64_t endpoint_seed(const ExperimentConfig& cfg, char which) {
    return mix_seed(cfg.seed, which == 'a' ? 0xa11ull : 0xb22ull);
}

std::uint64_t geodesic_seed(const ExperimentConfig& cfg) { return mix_seed(cfg.seed, 0xc33ull); }

std::uint64_t dataset_seed(const ExperimentConfig& cfg) { return mix_seed(cfg.seed, 0xda7aull); }

namespace {

template <typename T>
T require(const json& j, const char* field, const char* context) {
    if (!j.contains(field)) {
        throw std::runtime_error(std::string(context) + ": missing field " + field);
    }
    try {
        return j.at(field).get<T>();
    } catch (const json::exception&) {
        throw std::runtime_error(std::string(context) + ": invalid value for field " + field);
    }
}

template <typename T>
T optional_field(const json& j, const char* field, T fallback) {
    if (!j.contains(field)) return fallback;
    return j.at(field).get<T>();
}

}  // namespace

ExperimentConfig load_config_file(const fs::path& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config: " + path.string() + ": " + e.what());
    }
    ExperimentConfig cfg;
    if (require<int>(j, "version", "config") != 1) {
        throw std::runtime_error("config: unsupported version in " + path.string());
    }
    cfg.seed = optional_field<std::uint64_t>(j, "seed", cfg.seed);
    cfg.out = optional_field<std::string>(j, "out", "");

    if (j.contains("dataset")) {
        const json& d = j.at("dataset");
        DatasetSpec& ds = cfg.dataset;
        ds.generator = optional_field<std::string>(d, "generator", ds.generator);
        ds.classes = optional_field<std::size_t>(d, "classes", ds.classes);
        ds.per_class = optional_field<std::size_t>(d, "per_class", ds.per_class);
        ds.dim = optional_field<std::size_t>(d, "dim", ds.dim);
        ds.spread = optional_field<double>(d, "spread", ds.spread);
        ds.n = optional_field<std::size_t>(d, "n", ds.n);
        ds.noise = optional_field<double>(d, "noise", ds.noise);
        ds.path = optional_field<std::string>(d, "path", ds.path);
        ds.label_column = optional_field<std::string>(d, "label_column", ds.label_column);
        ds.images = optional_field<std::string>(d, "images", ds.images);
        ds.labels = optional_field<std::string>(d, "labels", ds.labels);
        ds.test_fraction = optional_field<double>(d, "test_fraction", ds.test_fraction);
    }
    if (j.contains("arch")) {
        const json& a = j.at("arch");
        cfg.arch.layer_sizes.clear();
        for (const auto& s : a.at("layer_sizes")) {
            cfg.arch.layer_sizes.push_back(s.get<std::size_t>());
        }
        cfg.arch.activation =
            activation_from_name(optional_field<std::string>(a, "activation", "relu"));
        cfg.arch.use_layernorm = optional_field<bool>(a, "use_layernorm", false);
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        cfg.train.learning_rate = optional_field<double>(t, "learning_rate",
                                                         cfg.train.learning_rate);
        cfg.train.batch_size = optional_field<std::size_t>(t, "batch_size",
                                                           cfg.train.batch_size);
        cfg.train.epochs = optional_field<std::size_t>(t, "epochs", cfg.train.epochs);
        cfg.train.momentum = optional_field<double>(t, "momentum", cfg.train.momentum);
    }
    cfg.align = optional_field<bool>(j, "align", cfg.align);
    cfg.path_n = optional_field<std::size_t>(j, "path_n", cfg.path_n);
    if (j.contains("geodesic")) {
        const json& g = j.at("geodesic");
        cfg.geodesic.learning_rate = optional_field<double>(g, "learning_rate",
                                                            cfg.geodesic.learning_rate);
        cfg.geodesic.batch_size = optional_field<std::size_t>(g, "batch_size",
                                                              cfg.geodesic.batch_size);
        cfg.geodesic.iterations = optional_field<std::size_t>(g, "iterations",
                                                              cfg.geodesic.iterations);
        cfg.geodesic.eval_every = optional_field<std::size_t>(g, "eval_every",
                                                              cfg.geodesic.eval_every);
    }
    cfg.validate();
    return cfg;
}

std::string experiment_config_json(const ExperimentConfig& cfg) {
    JsonWriter w;
    w.begin_object();
    w.key("version");
    w.value(1);
    w.key("seed");
    w.value(cfg.seed);
    w.key("dataset");
    w.begin_object();
    w.key("generator");
    w.value(cfg.dataset.generator);
    if (cfg.dataset.generator == "gaussian_mixture") {
        w.key("classes");
        w.value(cfg.dataset.classes);
        w.key("per_class");
        w.value(cfg.dataset.per_class);
        w.key("dim");
        w.value(cfg.dataset.dim);
        w.key("spread");
        w.value(cfg.dataset.spread);
    } else if (cfg.dataset.generator == "two_moons") {
        w.key("n");
        w.value(cfg.dataset.n);
        w.key("noise");
        w.value(cfg.dataset.noise);
    } else if (cfg.dataset.generator == "csv") {
        w.key("path");
        w.value(cfg.dataset.path);
        w.key("label_column");
        w.value(cfg.dataset.label_column);
    } else {
        w.key("images");
        w.value(cfg.dataset.images);
        w.key("labels");
        w.value(cfg.dataset.labels);
    }
    w.key("test_fraction");
    w.value(cfg.dataset.test_fraction);
    w.end_object();
    w.key("arch");
    write_config(w, cfg.arch);
    w.key("train");
    w.begin_object();
    w.key("learning_rate");
    w.value(cfg.train.learning_rate);
    w.key("batch_size");
    w.value(cfg.train.batch_size);
    w.key("epochs");
    w.value(cfg.train.epochs);
    w.key("momentum");
    w.value(cfg.train.momentum);
    w.end_object();
    w.key("align");
    w.value(cfg.align);
    w.key("path_n");
    w.value(cfg.path_n);
    w.key("geodesic");
    w.begin_object();
    w.key("learning_rate");
    w.value(cfg.geodesic.learning_rate);
    w.key("batch_size");
    w.value(cfg.geodesic.batch_size);
    w.key("iterations");
    w.value(cfg.geodesic.iterations);
    w.key("eval_every");
    w.value(cfg.geodesic.eval_every);
    w.end_object();
    w.end_object();
    return w.str();
}

Dataset build_full_dataset(const DatasetSpec& spec, std::uint64_t seed) {
    if (spec.generator == "gaussian_mixture") {
        return gen_gaussian_mixture(spec.classes, spec.per_class, spec.dim, spec.spread, seed);
    }
    if (spec.generator == "two_moons") {
        return gen_two_moons(spec.n, spec.noise, seed);
    }
    if (spec.generator == "csv") {
        return load_csv(spec.path, spec.label_column);
    }
    if (spec.generator == "idx") {
        return load_idx(spec.images, spec.labels);
    }
    throw std::invalid_argument("config: unknown dataset.generator '" + spec.generator + "'");
}

SplitResult build_split(const DatasetSpec& spec, std::uint64_t seed) {
    const Dataset full = build_full_dataset(spec, seed);
    return split(full, spec.test_fraction, mix_seed(seed, 0x5e717ull));
}

// ---------------------------------------------------------------------------
// stages
// ---------------------------------------------------------------------------

namespace {

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw std::runtime_error("cannot create directory " + dir.string() + ": " +
                                 ec.message());
    }
}

}  // namespace

void write_stage_manifest(const fs::path& dir, const std::string& stage,
                          const std::function<void(JsonWriter&)>& fill) {
    JsonWriter w;
    w.begin_object();
    w.key("version");
    w.value(1);
    w.key("stage");
    w.value(stage);
    fill(w);
    w.end_object();
    write_text_file(dir / "stage.json", w.str() + "\n");
}

SplitResult stage_data(const ExperimentConfig& cfg, const fs::path& out_dir) {
    ensure_dir(out_dir);
    const std::uint64_t seed = dataset_seed(cfg);
    log_info("data: generator=" + cfg.dataset.generator + " seed=" + std::to_string(seed));
    SplitResult splits = build_split(cfg.dataset, seed);
    save_csv(splits.train, out_dir / "train.csv");
    save_csv(splits.test, out_dir / "test.csv");
    write_stage_manifest(out_dir, "data", [&](JsonWriter& w) {
        w.key("seed");
        w.value(seed);
        w.key("generator");
        w.value(cfg.dataset.generator);
        w.key("test_fraction");
        w.value(cfg.dataset.test_fraction);
        w.key("outputs");
        w.begin_array();
        w.value("train.csv");
        w.value("test.csv");
        w.end_array();
    });
    return splits;
}

ModelParams stage_train(const ExperimentConfig& cfg, const Dataset& train_data,
                        const std::string& data_desc, std::uint64_t seed,
                        const fs::path& out_dir) {
    ensure_dir(out_dir);
    TrainOpts opts = cfg.train;
    opts.seed = seed;
    log_info("train: seed=" + std::to_string(seed) + " lr=" +
             std::to_string(opts.learning_rate) + " batch=" + std::to_string(opts.batch_size) +
             " epochs=" + std::to_string(opts.epochs));
    ModelParams model = train(cfg.arch, train_data, opts);
    save_model(model, out_dir / "model.json");
    write_stage_manifest(out_dir, "train", [&](JsonWriter& w) {
        w.key("seed");
        w.value(seed);
        w.key("learning_rate");
        w.value(opts.learning_rate);
        w.key("batch_size");
        w.value(opts.batch_size);
        w.key("epochs");
        w.value(opts.epochs);
        w.key("momentum");
        w.value(opts.momentum);
        w.key("arch");
        write_config(w, cfg.arch);
        w.key("data");
        w.value(data_desc);
        w.key("outputs");
        w.begin_array();
        w.value("model.json");
        w.end_array();
    });
    return model;
}

MatchOutputs stage_match(const ModelParams& a, const ModelParams& b, const std::string& a_desc,
                         const std::string& b_desc, const fs::path& out_dir) {
    ensure_dir(out_dir);
    WeightMatchingTrace trace;
    MatchOutputs out;
    out.spec = weight_matching(a, b, &trace);
    out.b_aligned = apply_permutation(b, out.spec);
    log_info("match: sweeps=" + std::to_string(trace.sweeps));
    save_spec(out.spec, out_dir / "perm.json");
    save_model(out.b_aligned, out_dir / "model_b_aligned.json");
    write_stage_manifest(out_dir, "match", [&](JsonWriter& w) {
        w.key("model_a");
        w.value(a_desc);
        w.key("model_b");
        w.value(b_desc);
        w.key("sweeps");
        w.value(trace.sweeps);
        w.key("outputs");
        w.begin_array();
        w.value("perm.json");
        w.value("model_b_aligned.json");
        w.end_array();
    });
    return out;
}

Path stage_interpolate(const ModelParams& a, const ModelParams& b, std::size_t n,
                       const std::string& a_desc, const std::string& b_desc,
                       const fs::path& out_dir) {
    ensure_dir(out_dir);
    log_info("interpolate: n=" + std::to_string(n));
    Path path = init_path(a, b, n);
    save_path(path, out_dir);
    write_stage_manifest(out_dir, "interpolate", [&](JsonWriter& w) {
        w.key("model_a");
        w.value(a_desc);
        w.key("model_b");
        w.value(b_desc);
        w.key("n");
        w.value(n);
    });
    return path;
}

OptimizeResult stage_optimize(const Path& init, const Dataset& inputs_only,
                              const GeodesicOpts& opts, const std::string& path_desc,
                              const std::string& data_desc, const fs::path& out_dir) {
    ensure_dir(out_dir);
    log_info("optimize: seed=" + std::to_string(opts.seed) + " lr=" +
             std::to_string(opts.learning_rate) + " batch=" + std::to_string(opts.batch_size) +
             " iterations=" + std::to_string(opts.iterations));
    OptimizeResult result = optimize_path(init, inputs_only, opts);
    save_path(result.path, out_dir);
    save_trace_csv(result.trace, out_dir / "trace.csv");
    write_stage_manifest(out_dir, "optimize", [&](JsonWriter& w) {
        w.key("seed");
        w.value(opts.seed);
        w.key("learning_rate");
        w.value(opts.learning_rate);
        w.key("batch_size");
        w.value(opts.batch_size);
        w.key("iterations");
        w.value(opts.iterations);
        w.key("eval_every");
        w.value(opts.eval_every);
        w.key("path");
        w.value(path_desc);
        w.key("data");
        w.value(data_desc);
        w.key("labels_used");
        w.value(false);
    });
    return result;
}

void stage_evaluate(const ModelParams& model, const Dataset& train, const Dataset& test,
                    const std::string& model_desc, const fs::path& out_dir,
                    const std::string& file_name) {
    ensure_dir(out_dir);
    const EvalResult on_train = evaluate(model, train);
    const EvalResult on_test = evaluate(model, test);
    JsonWriter w;
    w.begin_object();
    w.key("model");
    w.value(model_desc);
    w.key("train_loss");
    w.value(on_train.loss);
    w.key("train_accuracy");
    w.value(on_train.accuracy);
    w.key("test_loss");
    w.value(on_test.loss);
    w.key("test_accuracy");
    w.value(on_test.accuracy);
    w.end_object();
    write_text_file(out_dir / file_name, w.str() + "\n");
}

void stage_report(const Path& pre, const Path& post, const std::vector<TracePoint>& trace,
                  const Dataset& train, const Dataset& test, const fs::path& out_dir) {
    ensure_dir(out_dir);
    log_info("report: profiling " + std::to_string(pre.size()) + "-model paths");
    const PathMetrics pre_metrics = loss_profile(pre, train, test);
    const PathMetrics post_metrics = loss_profile(post, train, test);
    write_report(pre_metrics, post_metrics, trace, out_dir);
    write_stage_manifest(out_dir, "report", [&](JsonWriter& w) {
        w.key("outputs");
        w.begin_array();
        w.value("path_lengths.csv");
        w.value("pre_opt_loss.csv");
        w.value("post_opt_loss.csv");
        w.value("metrics.json");
        w.end_array();
    });
}

void save_trace_csv(const std::vector<TracePoint>& trace, const fs::path& file) {
    std::string out = "x,energy,model_space,param_space\n";
    for (const TracePoint& pt : trace) {
        out += std::to_string(pt.iteration);
        out += ',';
        out += format_double17(pt.energy);
        out += ',';
        out += format_double17(pt.jsd_length);
        out += ',';
        out += format_double17(pt.euclid_length);
        out += '\n';
    }
    write_text_file(file, out);
}

std::vector<TracePoint> load_trace_csv(const fs::path& file) {
    std::istringstream in(read_text_file(file));
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,energy,model_space,param_space", 0) != 0) {
        throw std::runtime_error("load_trace_csv: bad header in " + file.string());
    }
    std::vector<TracePoint> trace;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        TracePoint pt;
        char comma = 0;
        std::istringstream row(line);
        if (!(row >> pt.iteration >> comma >> pt.energy >> comma >> pt.jsd_length >> comma >>
              pt.euclid_length)) {
            throw std::runtime_error("load_trace_csv: malformed line " +
                                     std::to_string(line_no) + " in " + file.string());
        }
        trace.push_back(pt);
    }
    return trace;
}

void run_all(const ExperimentConfig& cfg, const fs::path& out_dir) {
    cfg.validate();
    if (fs::exists(out_dir) && !fs::is_empty(out_dir)) {
        throw std::runtime_error("run-all: output directory " + out_dir.string() +
                                 " already contains a run; outputs are immutable");
    }
    ensure_dir(out_dir);
    write_text_file(out_dir / "run_manifest.json", experiment_config_json(cfg) + "\n");

    const SplitResult splits = stage_data(cfg, out_dir / "data");
    const ModelParams a = stage_train(cfg, splits.train, "../data/train.csv",
                                      endpoint_seed(cfg, 'a'), out_dir / "train_a");
    const ModelParams b = stage_train(cfg, splits.train, "../data/train.csv",
                                      endpoint_seed(cfg, 'b'), out_dir / "train_b");

    ModelParams b_end = b;
    std::string b_desc = "../train_b/model.json";
    if (cfg.align) {
        MatchOutputs match = stage_match(a, b, "../train_a/model.json", b_desc,
                                         out_dir / "match");
        b_end = std::move(match.b_aligned);
        b_desc = "../match/model_b_aligned.json";
    }

    const Path init = stage_interpolate(a, b_end, cfg.path_n, "../train_a/model.json", b_desc,
                                        out_dir / "path_init");

    GeodesicOpts gopts = cfg.geodesic;
    gopts.seed = geodesic_seed(cfg);
    const OptimizeResult opt = stage_optimize(init, strip_labels(splits.train), gopts,
                                              "../path_init", "../data/train.csv",
                                              out_dir / "optimize");

    stage_evaluate(a, splits.train, splits.test, "../train_a/model.json", out_dir / "eval",
                   "endpoint_a.json");
    stage_evaluate(b_end, splits.train, splits.test, b_desc, out_dir / "eval",
                   "endpoint_b.json");
    write_stage_manifest(out_dir / "eval", "evaluate", [&](JsonWriter& w) {
        w.key("outputs");
        w.begin_array();
        w.value("endpoint_a.json");
        w.value("endpoint_b.json");
        w.end_array();
    });

    stage_report(init, opt.path, opt.trace, splits.train, splits.test, out_dir / "report");
}

}  // namespace geopath
