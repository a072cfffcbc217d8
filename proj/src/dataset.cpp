#include "geopath/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "geopath/jsonwrite.hpp"
#include "geopath/rng.hpp"

namespace geopath {

void Dataset::validate() const {
    check_matrix(features, "Dataset");
    if (features.rows == 0) throw std::invalid_argument("Dataset: empty");
    if (labels.size() != features.rows) {
        throw std::invalid_argument("Dataset: label count does not match rows");
    }
    if (class_count < 1) throw std::invalid_argument("Dataset: class_count must be >= 1");
    for (int y : labels) {
        if (y < 0 || static_cast<std::size_t>(y) >= class_count) {
            throw std::invalid_argument("Dataset: label " + std::to_string(y) +
                                        " outside [0, " + std::to_string(class_count) + ")");
        }
    }
}

Dataset gen_gaussian_mixture(std::size_t classes, std::size_t per_class, std::size_t dim,
                             double spread, std::uint64_t seed) {
    if (classes < 2) throw std::invalid_argument("gen_gaussian_mixture: classes must be >= 2");
    if (per_class < 1) throw std::invalid_argument("gen_gaussian_mixture: per_class must be >= 1");
    if (dim < 1) throw std::invalid_argument("gen_gaussian_mixture: dim must be >= 1");
    if (!(spread > 0.0)) throw std::invalid_argument("gen_gaussian_mixture: spread must be > 0");

    RandomStream center_rng(mix_seed(seed, 0x6d69780001ull));
    Matrix centers(classes, dim);
    for (double& v : centers.data) v = 2.0 * center_rng.normal();

    RandomStream point_rng(mix_seed(seed, 0x6d69780002ull));
    Dataset data;
    data.features = Matrix(classes * per_class, dim);
    data.labels.resize(classes * per_class);
    data.class_count = classes;
    std::size_t row = 0;
    for (std::size_t k = 0; k < classes; ++k) {
        for (std::size_t i = 0; i < per_class; ++i, ++row) {
            double* out = data.features.row(row);
            for (std::size_t j = 0; j < dim; ++j) {
                out[j] = centers.at(k, j) + spread * point_rng.normal();
            }
            data.labels[row] = static_cast<int>(k);
        }
    }
    return data;
}

Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("gen_two_moons: n must be >= 2");
    if (noise < 0.0) throw std::invalid_argument("gen_two_moons: noise must be >= 0");

    const std::size_t n_outer = (n + 1) / 2;
    const std::size_t n_inner = n - n_outer;
    Dataset data;
    data.features = Matrix(n, 2);
    data.labels.resize(n);
    data.class_count = 2;

    RandomStream rng(mix_seed(seed, 0x6d6f6f6e73ull));
    for (std::size_t i = 0; i < n_outer; ++i) {
        const double t = n_outer > 1
                             ? std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(n_outer - 1)
                             : 0.0;
        data.features.at(i, 0) = std::cos(t);
        data.features.at(i, 1) = std::sin(t);
        data.labels[i] = 0;
    }
    for (std::size_t i = 0; i < n_inner; ++i) {
        const double t = n_inner > 1
                             ? std::numbers::pi * static_cast<double>(i) /
                                   static_cast<double>(n_inner - 1)
                             : 0.0;
        data.features.at(n_outer + i, 0) = 1.0 - std::cos(t);
        data.features.at(n_outer + i, 1) = 0.5 - std::sin(t);
        data.labels[n_outer + i] = 1;
    }
    if (noise > 0.0) {
        for (double& v : data.features.data) v += noise * rng.normal();
    }
    return data;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_cell(const std::string& cell, std::size_t line_no, std::size_t col,
                  const std::filesystem::path& path) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != cell.size() || cell.empty()) {
        throw std::runtime_error("load_csv: non-numeric cell '" + cell + "' at line " +
                                 std::to_string(line_no) + " column " + std::to_string(col + 1) +
                                 " of " + path.string());
    }
    return v;
}

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path,
                        const char* what) {
    unsigned char buf[4];
    in.read(reinterpret_cast<char*>(buf), 4);
    if (!in) {
        throw std::runtime_error("load_idx: truncated " + std::string(what) + " in " +
                                 path.string());
    }
    return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
           (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("load_csv: cannot open " + path.string());

    std::string line;
    if (!std::getline(f, line)) {
        throw std::runtime_error("load_csv: missing header row in " + path.string());
    }
    const std::vector<std::string> header = split_line(line);
    std::size_t label_idx = header.size();
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == label_column) label_idx = i;
    }
    if (label_idx == header.size()) {
        throw std::runtime_error("load_csv: header of " + path.string() +
                                 " has no column named '" + label_column + "'");
    }
    if (header.size() < 2) {
        throw std::runtime_error("load_csv: need at least one feature column in " +
                                 path.string());
    }

    const std::size_t dim = header.size() - 1;
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t line_no = 1;
    int max_label = -1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size()) {
            throw std::runtime_error("load_csv: line " + std::to_string(line_no) + " of " +
                                     path.string() + " has " + std::to_string(cells.size()) +
                                     " cells, header has " + std::to_string(header.size()));
        }
        for (std::size_t i = 0; i < cells.size(); ++i) {
            const double v = parse_cell(cells[i], line_no, i, path);
            if (i == label_idx) {
                const int y = static_cast<int>(v);
                if (static_cast<double>(y) != v || y < 0) {
                    throw std::runtime_error("load_csv: label '" + cells[i] + "' at line " +
                                             std::to_string(line_no) + " of " + path.string() +
                                             " is not a nonnegative integer");
                }
                labels.push_back(y);
                max_label = std::max(max_label, y);
            } else {
                values.push_back(v);
            }
        }
    }
    if (labels.empty()) {
        throw std::runtime_error("load_csv: no data rows in " + path.string());
    }

    Dataset data;
    data.features = Matrix(labels.size(), dim, std::move(values));
    data.labels = std::move(labels);
    data.class_count = static_cast<std::size_t>(max_label) + 1;
    if (data.class_count < 2) data.class_count = 2;
    data.validate();
    return data;
}

void save_csv(const Dataset& data, const std::filesystem::path& path) {
    data.validate();
    std::string out;
    for (std::size_t j = 0; j < data.dim(); ++j) {
        out += "f" + std::to_string(j) + ",";
    }
    out += "label\n";
    for (std::size_t r = 0; r < data.size(); ++r) {
        const double* row = data.features.row(r);
        for (std::size_t j = 0; j < data.dim(); ++j) {
            out += format_double17(row[j]);
            out += ',';
        }
        out += std::to_string(data.labels[r]);
        out += '\n';
    }
    write_text_file(path, out);
}

Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("load_idx: cannot open " + images_path.string());
    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw std::runtime_error("load_idx: cannot open " + labels_path.string());

    char hex[16];
    const std::uint32_t img_magic = read_be32(imgs, images_path, "image magic");
    if (img_magic != 0x00000803u) {
        std::snprintf(hex, sizeof(hex), "0x%08x", img_magic);
        throw std::runtime_error("load_idx: magic mismatch in " + images_path.string() +
                                 ": expected 0x00000803, got " + hex);
    }
    const std::uint32_t lab_magic = read_be32(labs, labels_path, "label magic");
    if (lab_magic != 0x00000801u) {
        std::snprintf(hex, sizeof(hex), "0x%08x", lab_magic);
        throw std::runtime_error("load_idx: magic mismatch in " + labels_path.string() +
                                 ": expected 0x00000801, got " + hex);
    }

    const std::uint32_t n_img = read_be32(imgs, images_path, "image count");
    const std::uint32_t rows = read_be32(imgs, images_path, "row count");
    const std::uint32_t cols = read_be32(imgs, images_path, "column count");
    const std::uint32_t n_lab = read_be32(labs, labels_path, "label count");
    if (n_img != n_lab) {
        throw std::runtime_error("load_idx: " + std::to_string(n_img) + " images but " +
                                 std::to_string(n_lab) + " labels");
    }
    if (n_img == 0) throw std::runtime_error("load_idx: empty image file " + images_path.string());

    const std::size_t dim = static_cast<std::size_t>(rows) * cols;
    Dataset data;
    data.features = Matrix(n_img, dim);
    data.labels.resize(n_img);

    std::vector<unsigned char> buf(dim);
    for (std::size_t i = 0; i < n_img; ++i) {
        imgs.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(dim));
        if (!imgs) {
            throw std::runtime_error("load_idx: truncated pixel data at image " +
                                     std::to_string(i) + " of " + images_path.string());
        }
        double* out = data.features.row(i);
        for (std::size_t j = 0; j < dim; ++j) out[j] = buf[j] / 255.0;
    }
    int max_label = 0;
    for (std::size_t i = 0; i < n_img; ++i) {
        char c = 0;
        labs.read(&c, 1);
        if (!labs) {
            throw std::runtime_error("load_idx: truncated label data at item " +
                                     std::to_string(i) + " of " + labels_path.string());
        }
        data.labels[i] = static_cast<unsigned char>(c);
        max_label = std::max(max_label, data.labels[i]);
    }
    data.class_count = static_cast<std::size_t>(max_label) + 1;
    if (data.class_count < 2) data.class_count = 2;
    data.validate();
    return data;
}

SplitResult split(const Dataset& data, double test_fraction, std::uint64_t seed) {
    data.validate();
    if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
        throw std::invalid_argument("split: test_fraction must be in (0, 1)");
    }
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    RandomStream rng(mix_seed(seed, 0x73706c6974ull));
    rng.shuffle(order);

    const std::size_t n_train = static_cast<std::size_t>(
        std::ceil(static_cast<double>(n) * (1.0 - test_fraction)));

    auto take = [&](std::size_t begin, std::size_t end) {
        Dataset out;
        out.features = Matrix(end - begin, data.dim());
        out.labels.resize(end - begin);
        out.class_count = data.class_count;
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t src = order[i];
            std::copy(data.features.row(src), data.features.row(src) + data.dim(),
                      out.features.row(i - begin));
            out.labels[i - begin] = data.labels[src];
        }
        return out;
    };

    SplitResult result;
    result.train = take(0, n_train);
    result.test = take(n_train, n);
    if (result.test.size() == 0) {
        throw std::invalid_argument("split: test partition is empty; lower test_fraction");
    }
    return result;
}

Dataset strip_labels(const Dataset& data) {
    Dataset out;
    out.features = data.features;
    out.labels.assign(data.size(), 0);
    out.class_count = data.class_count;
    return out;
}

}  // namespace geopath
