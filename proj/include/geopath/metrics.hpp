#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "geopath/dataset.hpp"
#include "geopath/geodesic.hpp"
#include "geopath/nn.hpp"

namespace geopath {

struct PathMetrics {
    std::vector<double> per_segment_jsd;     // N-1
    std::vector<double> per_segment_euclid;  // N-1
    std::vector<double> train_loss;          // N
    std::vector<double> test_loss;
    std::vector<double> train_acc;
    std::vector<double> test_acc;
};

struct PathLengths {
    double jsd_length = 0.0;         // sum of sqrt(segment JSD)
    double jsd_length_scaled = 0.0;  // sqrt(8) * jsd_length
    double euclid_length = 0.0;      // sum of flattened parameter distances
};

PathLengths lengths_from_segments(std::span<const double> segment_jsd,
                                  std::span<const double> segment_euclid);
PathLengths path_lengths(const Path& path, const Matrix& inputs);

// Segment JSDs on the train features, segment parameter norms, and each
// model's loss/accuracy on both splits.
PathMetrics loss_profile(const Path& path, const Dataset& train, const Dataset& test);

enum class FisherSamples { exact };  // expectation over classes is an exact sum

// Quadratic form d^T g(theta) d of the Fisher metric at theta along a
// parameter direction, with the empirical inputs supplying p(x): the mean
// over samples of E_{y ~ p(y|x)} [ (directional d/d(eps) log p(y|x)) ^ 2 ].
// Never materializes the metric tensor.
double fisher_quadratic_form(const ModelParams& theta, const ModelParams& direction,
                             const Dataset& data, FisherSamples mode = FisherSamples::exact);

// Emits path_lengths.csv ("x,model_space,param_space", one row per trace
// point), pre_opt_loss.csv / post_opt_loss.csv ("x,train_loss,test_loss",
// x = 1-based model index) and metrics.json.
void write_report(const PathMetrics& pre, const PathMetrics& post,
                  const std::vector<TracePoint>& trace, const std::filesystem::path& out_dir);

}  // namespace geopath
