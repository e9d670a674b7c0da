#pragma once

#include <genbound/errors.hpp>
#include <genbound/model.hpp>

#include "json.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace genbound {

/// Images as columns of pixel intensities in [0, 1], with their digit labels.
struct RawMnist {
    Eigen::MatrixXd images;
    std::vector<int> digits;
    Index image_rows = 0;
    Index image_cols = 0;

    Index size() const { return images.cols(); }
};

/// Reads an IDX image file (magic 2051) and label file (magic 2049).
/// Pixels are divided by 255.
RawMnist load_mnist_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path);

Eigen::VectorXd one_hot(int digit, Index classes);
Eigen::MatrixXd one_hot_labels(const std::vector<int>& digits, Index classes);

/// Uniform sample of n distinct indices, redrawn until every class in
/// [0, classes) appears at least once.
std::vector<Index> sample_indices_with_coverage(const std::vector<int>& digits, Index n,
                                                std::uint64_t seed, int classes = 10);

/// The sampled images with one-hot labels.
Datasetd sample_with_digit_coverage(const RawMnist& raw, Index n, std::uint64_t seed,
                                    int classes = 10);

enum class LabelLaw { Gaussian, OneHot, Signed };

LabelLaw parse_label_law(const std::string& name);
std::string to_string(LabelLaw law);

/// Standard Gaussian inputs (full rank with probability one) and labels drawn
/// per law: Gaussian N(0,1), OneHot uniform class, Signed uniform in [-1, 1].
Datasetd synthetic_dataset(Index input_dim, Index label_dim, Index n, std::uint64_t seed,
                           LabelLaw law);

/// One sample per row: header x0..x{M0-1},y0..y{Q-1}, shortest round-trip floats.
void write_dataset_csv(const std::filesystem::path& path, const Datasetd& data);
Datasetd read_dataset_csv(const std::filesystem::path& path);

/// Provenance sidecar written next to an exported dataset.
struct DatasetProvenance {
    std::string source;
    std::uint64_t seed = 0;
    Index n = 0;
    std::string normalization;
    std::vector<Index> indices;
};

void to_json(nlohmann::json& j, const DatasetProvenance& p);
void write_provenance(const std::filesystem::path& path, const DatasetProvenance& p);

}  // namespace genbound
