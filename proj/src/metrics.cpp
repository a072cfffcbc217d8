#include "geopath/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "geopath/jsonwrite.hpp"
#include "geopath/trainer.hpp"

namespace geopath {

PathLengths lengths_from_segments(std::span<const double> segment_jsd,
                                  std::span<const double> segment_euclid) {
    if (segment_jsd.size() != segment_euclid.size()) {
        throw std::invalid_argument("lengths_from_segments: segment count mismatch");
    }
    PathLengths lengths;
    for (double v : segment_jsd) lengths.jsd_length += std::sqrt(v);
    for (double v : segment_euclid) lengths.euclid_length += v;
    lengths.jsd_length_scaled = std::sqrt(8.0) * lengths.jsd_length;
    return lengths;
}

namespace {

std::vector<double> segment_euclids(const Path& path) {
    std::vector<double> out(path.size() - 1);
    for (std::size_t s = 0; s + 1 < path.size(); ++s) {
        out[s] = param_distance(path.models[s], path.models[s + 1]);
    }
    return out;
}

}  // namespace

PathLengths path_lengths(const Path& path, const Matrix& inputs) {
    const PathEnergy energy = path_energy(path, inputs);
    return lengths_from_segments(energy.per_segment, segment_euclids(path));
}

PathMetrics loss_profile(const Path& path, const Dataset& train, const Dataset& test) {
    path.validate();
    train.validate();
    test.validate();

    PathMetrics metrics;
    metrics.per_segment_jsd = path_energy(path, train.features).per_segment;
    metrics.per_segment_euclid = segment_euclids(path);
    for (const ModelParams& m : path.models) {
        const EvalResult on_train = evaluate(m, train);
        const EvalResult on_test = evaluate(m, test);
        metrics.train_loss.push_back(on_train.loss);
        metrics.train_acc.push_back(on_train.accuracy);
        metrics.test_loss.push_back(on_test.loss);
        metrics.test_acc.push_back(on_test.accuracy);
    }
    return metrics;
}

double fisher_quadratic_form(const ModelParams& theta, const ModelParams& direction,
                             const Dataset& data, FisherSamples) {
    data.validate();
    Matrix logits;
    Matrix dlogits;
    forward_jvp(theta, direction, data.features, logits, dlogits);
    const Matrix probs = softmax(logits);

    // d/d(eps) log p(y|x) = dlogit_y - sum_c p_c dlogit_c; the empirical
    // log p(x) term carries no parameter dependence.
    double acc = 0.0;
    for (std::size_t r = 0; r < probs.rows; ++r) {
        const double* p = probs.row(r);
        const double* dz = dlogits.row(r);
        double mean_dz = 0.0;
        for (std::size_t c = 0; c < probs.cols; ++c) mean_dz += p[c] * dz[c];
        double row = 0.0;
        for (std::size_t c = 0; c < probs.cols; ++c) {
            const double score = dz[c] - mean_dz;
            row += p[c] * score * score;
        }
        acc += row;
    }
    return acc / static_cast<double>(probs.rows);
}

namespace {

void write_loss_csv(const std::filesystem::path& file, const PathMetrics& metrics) {
    std::string out = "x,train_loss,test_loss\n";
    for (std::size_t i = 0; i < metrics.train_loss.size(); ++i) {
        out += std::to_string(i + 1);
        out += ',';
        out += format_double17(metrics.train_loss[i]);
        out += ',';
        out += format_double17(metrics.test_loss[i]);
        out += '\n';
    }
    write_text_file(file, out);
}

void write_metrics_object(JsonWriter& w, const PathMetrics& m) {
    w.begin_object();
    w.key("per_segment_jsd");
    w.number_array(m.per_segment_jsd);
    w.key("per_segment_euclid");
    w.number_array(m.per_segment_euclid);
    w.key("train_loss");
    w.number_array(m.train_loss);
    w.key("test_loss");
    w.number_array(m.test_loss);
    w.key("train_acc");
    w.number_array(m.train_acc);
    w.key("test_acc");
    w.number_array(m.test_acc);
    const PathLengths lengths = lengths_from_segments(m.per_segment_jsd, m.per_segment_euclid);
    w.key("jsd_length");
    w.value(lengths.jsd_length);
    w.key("jsd_length_scaled");
    w.value(lengths.jsd_length_scaled);
    w.key("euclid_length");
    w.value(lengths.euclid_length);
    w.end_object();
}

}  // namespace

void write_report(const PathMetrics& pre, const PathMetrics& post,
                  const std::vector<TracePoint>& trace, const std::filesystem::path& out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw std::runtime_error("write_report: cannot create " + out_dir.string() + ": " +
                                 ec.message());
    }

    std::string lengths_csv = "x,model_space,param_space\n";
    for (const TracePoint& pt : trace) {
        lengths_csv += std::to_string(pt.iteration);
        lengths_csv += ',';
        lengths_csv += format_double17(pt.jsd_length);
        lengths_csv += ',';
        lengths_csv += format_double17(pt.euclid_length);
        lengths_csv += '\n';
    }
    write_text_file(out_dir / "path_lengths.csv", lengths_csv);

    write_loss_csv(out_dir / "pre_opt_loss.csv", pre);
    write_loss_csv(out_dir / "post_opt_loss.csv", post);

    JsonWriter w;
    w.begin_object();
    w.key("version");
    w.value(1);
    w.key("pre");
    write_metrics_object(w, pre);
    w.key("post");
    write_metrics_object(w, post);
    w.key("trace");
    w.begin_array();
    for (const TracePoint& pt : trace) {
        w.begin_object();
        w.key("iteration");
        w.value(pt.iteration);
        w.key("energy");
        w.value(pt.energy);
        w.key("jsd_length");
        w.value(pt.jsd_length);
        w.key("euclid_length");
        w.value(pt.euclid_length);
        w.end_object();
    }
    w.end_array();
    w.end_object();
    write_text_file(out_dir / "metrics.json", w.str() + "\n");
}

}  // namespace geopath
