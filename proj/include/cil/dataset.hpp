#ifndef CIL_DATASET_HPP
#define CIL_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "cil/model.hpp"
#include "cil/rng.hpp"

namespace cil {

enum class DatasetKind { synthetic, cifar100 };

/// In-memory labeled vectors; rows are samples.
struct Dataset {
    DatasetKind kind = DatasetKind::synthetic;
    Matrix train_x;
    std::vector<int> train_y;
    Matrix test_x;
    std::vector<int> test_y;
    int num_labels = 0;

    Eigen::Index input_dim() const { return train_x.cols(); }
    Eigen::Index train_size() const { return train_x.rows(); }
    Eigen::Index test_size() const { return test_x.rows(); }
};

/// Gaussian clusters with means at separation * (random unit direction),
/// one direction per class. Deterministic under seed.
struct SyntheticSpec {
    int num_classes = 10;
    Eigen::Index train_per_class = 100;
    Eigen::Index test_per_class = 50;
    Eigen::Index input_dim = 16;
    double separation = 3.0;
    double noise = 1.0;
    std::uint64_t seed = 0;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

/// Reads the canonical binary layout (train.bin / test.bin, one coarse and one
/// fine label byte followed by 3072 channel-major pixels per record). Images
/// are flattened, scaled to [0,1] and normalized per channel.
Dataset load_cifar100(const std::filesystem::path& root);

/// Random 4-pixel-pad crop plus horizontal flip on a flattened, normalized
/// CIFAR image.
Vector augment_cifar(const Vector& image, Rng& rng);

}  // namespace cil

#endif  // CIL_DATASET_HPP
