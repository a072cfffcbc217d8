#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "geopath/align.hpp"
#include "geopath/dataset.hpp"
#include "geopath/geodesic.hpp"
#include "geopath/jsonwrite.hpp"
#include "geopath/metrics.hpp"
#include "geopath/nn.hpp"
#include "geopath/trainer.hpp"

namespace geopath {

// Where the experiment's data comes from: a seeded generator or files.
struct DatasetSpec {
    std::string generator = "gaussian_mixture";  // gaussian_mixture|two_moons|csv|idx

    // gaussian_mixture
    std::size_t classes = 5;
    std::size_t per_class = 500;
    std::size_t dim = 2;
    double spread = 0.8;

    // two_moons
    std::size_t n = 2000;
    double noise = 0.1;

    // csv / idx
    std::string path;
    std::string label_column = "label";
    std::string images;
    std::string labels;

    double test_fraction = 0.2;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    DatasetSpec dataset;
    MlpConfig arch{{2, 8, 8, 5}, Activation::relu, false};
    TrainOpts train{0.1, 256, 100, 0, 0.0};
    bool align = true;
    std::size_t path_n = 25;
    GeodesicOpts geodesic{0.1, 256, 4000, 0, 100};
    std::string out;  // default output directory; --out overrides

    void validate() const;
};

ExperimentConfig load_config_file(const std::filesystem::path& path);
std::string experiment_config_json(const ExperimentConfig& cfg);

// Endpoint trainings and the path optimizer draw from substreams of the
// experiment seed, so one integer pins the whole pipeline.
std::uint64_t endpoint_seed(const ExperimentConfig& cfg, char which);
std::uint64_t geodesic_seed(const ExperimentConfig& cfg);
std::uint64_t dataset_seed(const ExperimentConfig& cfg);

Dataset build_full_dataset(const DatasetSpec& spec, std::uint64_t seed);
SplitResult build_split(const DatasetSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// pipeline stages; each writes its outputs plus a stage.json manifest (stage
// name, seeds, resolved options, input/output names) into out_dir
// ---------------------------------------------------------------------------

SplitResult stage_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

ModelParams stage_train(const ExperimentConfig& cfg, const Dataset& train_data,
                        const std::string& data_desc, std::uint64_t seed,
                        const std::filesystem::path& out_dir);

struct MatchOutputs {
    PermutationSpec spec;
    ModelParams b_aligned;
};

MatchOutputs stage_match(const ModelParams& a, const ModelParams& b, const std::string& a_desc,
                         const std::string& b_desc, const std::filesystem::path& out_dir);

Path stage_interpolate(const ModelParams& a, const ModelParams& b, std::size_t n,
                       const std::string& a_desc, const std::string& b_desc,
                       const std::filesystem::path& out_dir);

OptimizeResult stage_optimize(const Path& init, const Dataset& inputs_only,
                              const GeodesicOpts& opts, const std::string& path_desc,
                              const std::string& data_desc,
                              const std::filesystem::path& out_dir);

void stage_evaluate(const ModelParams& model, const Dataset& train, const Dataset& test,
                    const std::string& model_desc, const std::filesystem::path& out_dir,
                    const std::string& file_name);

void stage_report(const Path& pre, const Path& post, const std::vector<TracePoint>& trace,
                  const Dataset& train, const Dataset& test,
                  const std::filesystem::path& out_dir);

void save_trace_csv(const std::vector<TracePoint>& trace, const std::filesystem::path& file);
std::vector<TracePoint> load_trace_csv(const std::filesystem::path& file);

void write_stage_manifest(const std::filesystem::path& dir, const std::string& stage,
                          const std::function<void(JsonWriter&)>& fill);

// Runs data -> train a/b -> match -> interpolate -> optimize -> evaluate ->
// report under out_dir, which must not already contain a run.
void run_all(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace geopath
