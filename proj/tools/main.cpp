// geopath: finds low-loss paths between two trained networks by aligning
// them under permutation symmetry and bending the connecting path toward a
// geodesic of the predictive-distribution geometry.

#include <CLI11.hpp>
#include <cstdio>
#include <string>
#include <vector>

#include "geopath/checkpoint.hpp"
#include "geopath/jsonwrite.hpp"
#include "geopath/log.hpp"
#include "geopath/parallel.hpp"
#include "geopath/pipeline.hpp"
#include "geopath/rng.hpp"

namespace {

using namespace geopath;

struct CommonFlags {
    std::string config_path;
    std::string out;
    std::string dataset;
    std::string arch;
    std::string label_column = "label";
    std::uint64_t seed = 0;
    std::size_t n = 0;
    double lr = 0.0;
    std::size_t batch = 0;
    std::size_t iterations = 0;
    int threads = 1;

    bool has_seed = false;
    bool has_n = false;
    bool has_lr = false;
    bool has_batch = false;
    bool has_iterations = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool with_out = true) {
    cmd->add_option("--config", flags.config_path, "experiment config JSON");
    if (with_out) cmd->add_option("--out", flags.out, "output directory")->required();
    cmd->add_option("--seed", flags.seed, "override the experiment seed");
    cmd->add_option("--threads", flags.threads, "worker threads (results are identical at any value)");
}

MlpConfig parse_arch(const std::string& text) {
    MlpConfig config;
    config.use_layernorm = false;
    std::string cur;
    auto flush = [&] {
        if (cur.empty()) return;
        if (cur == "ln") {
            config.use_layernorm = true;
        } else {
            config.layer_sizes.push_back(std::stoul(cur));
        }
        cur.clear();
    };
    for (char c : text) {
        if (c == ',') {
            flush();
        } else {
            cur += c;
        }
    }
    flush();
    config.validate();
    return config;
}

// Resolves the experiment config from --config plus flag overrides.
ExperimentConfig resolve_config(const CommonFlags& flags) {
    ExperimentConfig cfg;
    if (!flags.config_path.empty()) cfg = load_config_file(flags.config_path);
    if (flags.has_seed) cfg.seed = flags.seed;
    if (flags.has_n) cfg.path_n = flags.n;
    if (flags.has_lr) cfg.geodesic.learning_rate = flags.lr;
    if (flags.has_batch) cfg.geodesic.batch_size = flags.batch;
    if (flags.has_iterations) cfg.geodesic.iterations = flags.iterations;
    if (!flags.dataset.empty()) {
        if (flags.dataset == "gaussian_mixture" || flags.dataset == "two_moons") {
            cfg.dataset.generator = flags.dataset;
        } else {
            cfg.dataset.generator = "csv";
            cfg.dataset.path = flags.dataset;
        }
    }
    if (!flags.arch.empty()) cfg.arch = parse_arch(flags.arch);
    if (flags.label_column != "label") cfg.dataset.label_column = flags.label_column;
    cfg.validate();
    return cfg;
}

Dataset load_dataset_arg(const CommonFlags& flags, const std::string& data_path) {
    return load_csv(data_path, flags.label_column);
}

int cmd_train(const CommonFlags& flags, const std::string& data_path,
              const std::string& which) {
    ExperimentConfig cfg = resolve_config(flags);
    Dataset train_data;
    std::string desc;
    if (!data_path.empty()) {
        train_data = load_dataset_arg(flags, data_path);
        desc = data_path;
    } else {
        train_data = build_split(cfg.dataset, dataset_seed(cfg)).train;
        desc = "generated:" + cfg.dataset.generator;
    }
    const std::uint64_t seed = endpoint_seed(cfg, which == "b" ? 'b' : 'a');
    stage_train(cfg, train_data, desc, seed, flags.out);
    std::printf("%s\n", (std::filesystem::path(flags.out) / "model.json").c_str());
    return 0;
}

int cmd_match(const CommonFlags& flags, const std::string& a_path, const std::string& b_path) {
    const ModelParams a = load_model(a_path);
    const ModelParams b = load_model(b_path);
    stage_match(a, b, a_path, b_path, flags.out);
    std::printf("%s\n", (std::filesystem::path(flags.out) / "model_b_aligned.json").c_str());
    return 0;
}

int cmd_interpolate(const CommonFlags& flags, const std::string& a_path,
                    const std::string& b_path) {
    ExperimentConfig cfg = resolve_config(flags);
    const ModelParams a = load_model(a_path);
    const ModelParams b = load_model(b_path);
    stage_interpolate(a, b, cfg.path_n, a_path, b_path, flags.out);
    std::printf("%s\n", flags.out.c_str());
    return 0;
}

int cmd_optimize(const CommonFlags& flags, const std::string& path_dir,
                 const std::string& data_path, std::size_t eval_every) {
    ExperimentConfig cfg = resolve_config(flags);
    const Path init = load_path(path_dir);
    const Dataset data = load_dataset_arg(flags, data_path);
    GeodesicOpts opts = cfg.geodesic;
    if (eval_every > 0) opts.eval_every = eval_every;
    opts.seed = geodesic_seed(cfg);
    // labels are stripped before the optimizer ever sees the data
    stage_optimize(init, strip_labels(data), opts, path_dir, data_path, flags.out);
    std::printf("%s\n", flags.out.c_str());
    return 0;
}

int cmd_evaluate(const CommonFlags& flags, const std::string& model_path,
                 const std::string& train_path, const std::string& test_path) {
    const ModelParams model = load_model(model_path);
    const Dataset train_data = load_dataset_arg(flags, train_path);
    const Dataset test_data = load_dataset_arg(flags, test_path.empty() ? train_path : test_path);
    stage_evaluate(model, train_data, test_data, model_path, flags.out, "eval.json");
    write_stage_manifest(flags.out, "evaluate", [&](JsonWriter& w) {
        w.key("model");
        w.value(model_path);
        w.key("outputs");
        w.begin_array();
        w.value("eval.json");
        w.end_array();
    });
    std::printf("%s\n", read_text_file(std::filesystem::path(flags.out) / "eval.json").c_str());
    return 0;
}

int cmd_report(const CommonFlags& flags, const std::string& pre_dir,
               const std::string& post_dir, const std::string& trace_path,
               const std::string& train_path, const std::string& test_path) {
    const Path pre = load_path(pre_dir);
    const Path post = load_path(post_dir);
    const std::vector<TracePoint> trace =
        trace_path.empty() ? std::vector<TracePoint>{} : load_trace_csv(trace_path);
    const Dataset train_data = load_dataset_arg(flags, train_path);
    const Dataset test_data = load_dataset_arg(flags, test_path);
    stage_report(pre, post, trace, train_data, test_data, flags.out);
    std::printf("%s\n", flags.out.c_str());
    return 0;
}

int cmd_run_all(const CommonFlags& flags) {
    ExperimentConfig cfg = resolve_config(flags);
    std::string out = flags.out;
    if (out.empty()) out = cfg.out;
    if (out.empty()) throw std::runtime_error("run-all: --out (or config field 'out') required");
    run_all(cfg, out);
    std::printf("%s\n", out.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"geodesic path finding between trained neural networks"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string data_path, which = "a", a_path, b_path, path_dir, model_path;
    std::string train_path, test_path, pre_dir, post_dir, trace_path;
    std::size_t eval_every = 0;

    CLI::App* train = app.add_subcommand("train", "train one endpoint model with seeded SGD");
    add_common(train, flags);
    train->add_option("--data", data_path, "training CSV (defaults to the config generator)");
    train->add_option("--which", which, "endpoint tag: a or b (selects the derived seed)");

    CLI::App* match = app.add_subcommand("match", "permutation weight matching of b onto a");
    add_common(match, flags);
    match->add_option("--a", a_path, "reference checkpoint")->required();
    match->add_option("--b", b_path, "checkpoint to permute")->required();

    CLI::App* interp = app.add_subcommand("interpolate", "linear path between two checkpoints");
    add_common(interp, flags);
    interp->add_option("--a", a_path, "first endpoint checkpoint")->required();
    interp->add_option("--b", b_path, "second endpoint checkpoint (aligned)")->required();

    CLI::App* optimize = app.add_subcommand("optimize", "minimize the path energy, endpoints fixed");
    add_common(optimize, flags);
    optimize->add_option("--path", path_dir, "initial path directory")->required();
    optimize->add_option("--data", data_path, "training CSV (labels are ignored)")->required();
    optimize->add_option("--eval-every", eval_every, "trace interval in iterations");

    CLI::App* evaluate = app.add_subcommand("evaluate", "loss/accuracy of a checkpoint");
    add_common(evaluate, flags);
    evaluate->add_option("--model", model_path, "checkpoint to evaluate")->required();
    evaluate->add_option("--train", train_path, "train CSV")->required();
    evaluate->add_option("--test", test_path, "test CSV");

    CLI::App* report = app.add_subcommand("report", "emit figure CSVs and metrics.json");
    add_common(report, flags);
    report->add_option("--pre", pre_dir, "pre-optimization path directory")->required();
    report->add_option("--post", post_dir, "optimized path directory")->required();
    report->add_option("--trace", trace_path, "trace.csv from optimize");
    report->add_option("--train", train_path, "train CSV")->required();
    report->add_option("--test", test_path, "test CSV")->required();

    CLI::App* runall = app.add_subcommand("run-all", "data -> train -> match -> interpolate -> "
                                                     "optimize -> evaluate -> report");
    add_common(runall, flags);

    for (CLI::App* cmd : {train, optimize, evaluate, report, runall}) {
        cmd->add_option("--label-column", flags.label_column, "CSV label column name");
    }
    for (CLI::App* cmd : {train, optimize, runall, interp}) {
        cmd->add_option("--n", flags.n, "number of path models");
        cmd->add_option("--lr", flags.lr, "geodesic learning rate");
        cmd->add_option("--batch", flags.batch, "geodesic batch size");
        cmd->add_option("--iterations", flags.iterations, "geodesic iterations");
        cmd->add_option("--dataset", flags.dataset,
                        "generator name (gaussian_mixture|two_moons) or a CSV path");
        cmd->add_option("--arch", flags.arch, "layer sizes, e.g. 2,8,8,5  (append ,ln for layernorm)");
    }

    CLI11_PARSE(app, argc, argv);

    CLI::App* active = app.get_subcommands().front();
    auto given = [&](const std::string& name) {
        const CLI::Option* opt = active->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    flags.has_seed = given("--seed");
    flags.has_n = given("--n");
    flags.has_lr = given("--lr");
    flags.has_batch = given("--batch");
    flags.has_iterations = given("--iterations");
    set_thread_count(flags.threads);

    try {
        if (active == train) return cmd_train(flags, data_path, which);
        if (active == match) return cmd_match(flags, a_path, b_path);
        if (active == interp) return cmd_interpolate(flags, a_path, b_path);
        if (active == optimize) return cmd_optimize(flags, path_dir, data_path, eval_every);
        if (active == evaluate) return cmd_evaluate(flags, model_path, train_path, test_path);
        if (active == report) {
            return cmd_report(flags, pre_dir, post_dir, trace_path, train_path, test_path);
        }
        if (active == runall) return cmd_run_all(flags);
    } catch (const std::exception& e) {
        JsonWriter w;
        w.begin_object();
        w.key("error");
        w.value(e.what());
        w.end_object();
        std::fprintf(stderr, "%s\n", w.str().c_str());
        return 1;
    }
    return 1;
}
