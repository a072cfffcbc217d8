#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "geopath/matrix.hpp"

namespace geopath {

// Feature matrix plus integer class labels; supplies the empirical input
// distribution for the label-free path optimizer.
struct Dataset {
    Matrix features;          // n x d
    std::vector<int> labels;  // length n, values in [0, class_count)
    std::size_t class_count = 0;

    std::size_t size() const { return features.rows; }
    std::size_t dim() const { return features.cols; }
    void validate() const;
};

// Isotropic Gaussian blobs around seeded random centers.
Dataset gen_gaussian_mixture(std::size_t classes, std::size_t per_class, std::size_t dim,
                             double spread, std::uint64_t seed);

// Interleaved half-circles, binary labels.
Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed);

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column = "label");
void save_csv(const Dataset& data, const std::filesystem::path& path);

// Standard big-endian IDX pair (0x00000803 images, 0x00000801 labels);
// pixel values scaled into [0, 1].
Dataset load_idx(const std::filesystem::path& images_path,
                 const std::filesystem::path& labels_path);

struct SplitResult {
    Dataset train;
    Dataset test;
};

// Seeded shuffle then partition; train gets ceil(n * (1 - test_fraction)) rows.
SplitResult split(const Dataset& data, double test_fraction, std::uint64_t seed);

// Copy with labels cleared; what the path optimizer is handed so that label
// bytes cannot influence it.
Dataset strip_labels(const Dataset& data);

}  // namespace geopath
