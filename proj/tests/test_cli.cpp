#include <doctest.h>

#include <json.hpp>

#include "geopath/checkpoint.hpp"
#include "geopath/dataset.hpp"
#include "geopath/geodesic.hpp"
#include "geopath/jsonwrite.hpp"
#include "helpers.hpp"

using namespace geopath;
using namespace testutil;

namespace {

// Two small endpoint checkpoints plus a matching dataset CSV.
struct CliFixture {
    fs::path dir;
    fs::path model_a;
    fs::path model_b;
    fs::path data_csv;
};

CliFixture make_fixture(const std::string& name) {
    CliFixture fx;
    fx.dir = fresh_dir(name);
    const MlpConfig config{{2, 4, 3}, Activation::relu, false};
    fx.model_a = fx.dir / "a.json";
    fx.model_b = fx.dir / "b.json";
    save_model(init_params(config, 1), fx.model_a);
    save_model(init_params(config, 2), fx.model_b);
    fx.data_csv = fx.dir / "data.csv";
    save_csv(random_dataset(8, 2, 3, 3), fx.data_csv);
    return fx;
}

}  // namespace

TEST_CASE("cli interpolate with n=25 writes 25 checkpoints") {
    const CliFixture fx = make_fixture("cli_interpolate");
    const fs::path out = fx.dir / "path";
    const int rc = run_cli("interpolate --a " + fx.model_a.string() + " --b " +
                           fx.model_b.string() + " --n 25 --out " + out.string());
    REQUIRE(rc == 0);

    std::size_t models = 0;
    for (const auto& entry : fs::directory_iterator(out)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("model_", 0) == 0 && name.find(".json") != std::string::npos) ++models;
    }
    CHECK(models == 25);
    CHECK(fs::exists(out / "model_000.json"));
    CHECK(fs::exists(out / "model_024.json"));
    const Path loaded = load_path(out);
    CHECK(loaded.size() == 25);
}

TEST_CASE("cli optimize defaults to learning rate 0.1 and batch 256") {
    const CliFixture fx = make_fixture("cli_optimize_defaults");
    const fs::path path_dir = fx.dir / "path";
    REQUIRE(run_cli("interpolate --a " + fx.model_a.string() + " --b " + fx.model_b.string() +
                    " --n 2 --out " + path_dir.string()) == 0);

    const fs::path out = fx.dir / "opt";
    REQUIRE(run_cli("optimize --path " + path_dir.string() + " --data " + fx.data_csv.string() +
                    " --iterations 3 --out " + out.string()) == 0);

    const auto manifest = nlohmann::json::parse(slurp(out / "stage.json"));
    CHECK(manifest.at("stage").get<std::string>() == "optimize");
    CHECK(manifest.at("learning_rate").get<double>() == 0.1);
    CHECK(manifest.at("batch_size").get<std::size_t>() == 256);
    CHECK(manifest.at("labels_used").get<bool>() == false);
    CHECK(fs::exists(out / "trace.csv"));
}

TEST_CASE("cli match and report chain on real files") {
    const CliFixture fx = make_fixture("cli_chain");
    const fs::path match_dir = fx.dir / "match";
    REQUIRE(run_cli("match --a " + fx.model_a.string() + " --b " + fx.model_b.string() +
                    " --out " + match_dir.string()) == 0);
    CHECK(fs::exists(match_dir / "perm.json"));

    const fs::path path_dir = fx.dir / "path";
    REQUIRE(run_cli("interpolate --a " + fx.model_a.string() + " --b " +
                    (match_dir / "model_b_aligned.json").string() + " --n 5 --out " +
                    path_dir.string()) == 0);

    const fs::path opt_dir = fx.dir / "opt";
    REQUIRE(run_cli("optimize --path " + path_dir.string() + " --data " + fx.data_csv.string() +
                    " --iterations 5 --batch 8 --out " + opt_dir.string()) == 0);

    const fs::path report_dir = fx.dir / "report";
    REQUIRE(run_cli("report --pre " + path_dir.string() + " --post " + opt_dir.string() +
                    " --trace " + (opt_dir / "trace.csv").string() + " --train " +
                    fx.data_csv.string() + " --test " + fx.data_csv.string() + " --out " +
                    report_dir.string()) == 0);
    CHECK(fs::exists(report_dir / "path_lengths.csv"));
    CHECK(fs::exists(report_dir / "pre_opt_loss.csv"));
    CHECK(fs::exists(report_dir / "post_opt_loss.csv"));
    CHECK(fs::exists(report_dir / "metrics.json"));

    const fs::path eval_dir = fx.dir / "eval";
    REQUIRE(run_cli("evaluate --model " + fx.model_a.string() + " --train " +
                    fx.data_csv.string() + " --out " + eval_dir.string()) == 0);
    const auto eval = nlohmann::json::parse(slurp(eval_dir / "eval.json"));
    CHECK(eval.contains("train_loss"));
    CHECK(eval.contains("train_accuracy"));
}

TEST_CASE("cli subcommands are idempotent given identical inputs") {
    const CliFixture fx = make_fixture("cli_idempotent");
    const std::string base = "interpolate --a " + fx.model_a.string() + " --b " +
                             fx.model_b.string() + " --n 5 --out ";
    REQUIRE(run_cli(base + (fx.dir / "path1").string()) == 0);
    REQUIRE(run_cli(base + (fx.dir / "path2").string()) == 0);
    std::string diff;
    CHECK(trees_identical(fx.dir / "path1", fx.dir / "path2", &diff));

    const std::string opt = "optimize --path " + (fx.dir / "path1").string() + " --data " +
                            fx.data_csv.string() + " --iterations 10 --batch 8 --out ";
    REQUIRE(run_cli(opt + (fx.dir / "opt1").string()) == 0);
    REQUIRE(run_cli(opt + (fx.dir / "opt2").string()) == 0);
    CHECK(trees_identical(fx.dir / "opt1", fx.dir / "opt2", &diff));
}

TEST_CASE("cli accepts a custom label column name") {
    const CliFixture fx = make_fixture("cli_label_column");
    // same data, label column renamed to "y"
    std::string csv = slurp(fx.data_csv);
    csv.replace(csv.find("label"), 5, "y");
    const fs::path renamed = fx.dir / "renamed.csv";
    write_text_file(renamed, csv);

    const fs::path out = fx.dir / "eval";
    CHECK(run_cli("evaluate --model " + fx.model_a.string() + " --train " + renamed.string() +
                  " --out " + out.string()) != 0);  // default column name is gone
    CHECK(run_cli("evaluate --model " + fx.model_a.string() + " --train " + renamed.string() +
                  " --label-column y --out " + out.string()) == 0);
}

TEST_CASE("cli failures exit nonzero with a machine-readable error line") {
    const fs::path dir = fresh_dir("cli_errors");
    const fs::path err = dir / "stderr.txt";
    const int rc = run_cli("match --a missing_a.json --b missing_b.json --out " +
                           (dir / "out").string(), err);
    CHECK(rc != 0);
    const std::string message = slurp(err);
    CHECK(message.rfind("{\"error\":", 0) == 0);
    CHECK(nlohmann::json::parse(message).contains("error"));
}
