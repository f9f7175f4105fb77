#include "cil/dataset.hpp"

#include <fstream>
#include <random>

#include "cil/errors.hpp"

namespace cil {

namespace {

Matrix class_means(const SyntheticSpec& spec, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix means(spec.num_classes, spec.input_dim);
    for (int c = 0; c < spec.num_classes; ++c) {
        Vector dir(spec.input_dim);
        for (Eigen::Index i = 0; i < spec.input_dim; ++i) dir(i) = gauss(rng);
        const double n = dir.norm();
        if (n > 0) dir /= n;
        means.row(c) = spec.separation * dir.transpose();
    }
    return means;
}

void fill_split(Matrix& x, std::vector<int>& y, const Matrix& means, Eigen::Index per_class,
                double noise, Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const int num_classes = static_cast<int>(means.rows());
    x = Matrix(per_class * num_classes, means.cols());
    y.clear();
    Eigen::Index row = 0;
    for (int c = 0; c < num_classes; ++c) {
        for (Eigen::Index i = 0; i < per_class; ++i, ++row) {
            for (Eigen::Index k = 0; k < means.cols(); ++k)
                x(row, k) = means(c, k) + noise * gauss(rng);
            y.push_back(c);
        }
    }
}

}  // namespace

Dataset generate_synthetic(const SyntheticSpec& spec) {
    CIL_CHECK_ARG(spec.num_classes >= 1, "need at least one class");
    CIL_CHECK_ARG(spec.train_per_class >= 1 && spec.test_per_class >= 1,
                  "need at least one sample per class and split");
    CIL_CHECK_ARG(spec.input_dim >= 1, "input dimension must be positive");
    CIL_CHECK_ARG(spec.separation >= 0.0 && spec.noise >= 0.0,
                  "separation and noise must be non-negative");

    Rng rng = make_rng(derive_seed(spec.seed, "synthetic"));
    const Matrix means = class_means(spec, rng);

    Dataset ds;
    ds.kind = DatasetKind::synthetic;
    ds.num_labels = spec.num_classes;
    fill_split(ds.train_x, ds.train_y, means, spec.train_per_class, spec.noise, rng);
    fill_split(ds.test_x, ds.test_y, means, spec.test_per_class, spec.noise, rng);
    return ds;
}

namespace {

constexpr Eigen::Index kCifarSide = 32;
constexpr Eigen::Index kCifarChannels = 3;
constexpr Eigen::Index kCifarPixels = kCifarSide * kCifarSide * kCifarChannels;
constexpr Eigen::Index kCifarRecord = 2 + kCifarPixels;  // coarse byte, fine byte, pixels
constexpr int kCifarLabels = 100;

constexpr double kCifarMean[3] = {0.5071, 0.4865, 0.4409};
constexpr double kCifarStd[3] = {0.2673, 0.2564, 0.2762};

void load_cifar_split(const std::filesystem::path& file, Matrix& x, std::vector<int>& y) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw Error("cannot open dataset file " + file.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                     std::istreambuf_iterator<char>());
    if (bytes.empty() || bytes.size() % static_cast<std::size_t>(kCifarRecord) != 0)
        throw Error("dataset file " + file.string() + " is not a whole number of records");

    const Eigen::Index n = static_cast<Eigen::Index>(bytes.size()) / kCifarRecord;
    x = Matrix(n, kCifarPixels);
    y.clear();
    y.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const unsigned char* rec = bytes.data() + r * kCifarRecord;
        y.push_back(static_cast<int>(rec[1]));  // fine label
        for (Eigen::Index p = 0; p < kCifarPixels; ++p) {
            const int channel = static_cast<int>(p / (kCifarSide * kCifarSide));
            const double v = static_cast<double>(rec[2 + p]) / 255.0;
            x(r, p) = (v - kCifarMean[channel]) / kCifarStd[channel];
        }
    }
}

}  // namespace

Dataset load_cifar100(const std::filesystem::path& root) {
    Dataset ds;
    ds.kind = DatasetKind::cifar100;
    ds.num_labels = kCifarLabels;
    load_cifar_split(root / "train.bin", ds.train_x, ds.train_y);
    load_cifar_split(root / "test.bin", ds.test_x, ds.test_y);
    return ds;
}

Vector augment_cifar(const Vector& image, Rng& rng) {
    CIL_CHECK_ARG(image.size() == kCifarPixels, "not a flattened 3x32x32 image");
    constexpr Eigen::Index pad = 4;

    std::uniform_int_distribution<Eigen::Index> offset(0, 2 * pad);
    std::uniform_int_distribution<int> coin(0, 1);
    const Eigen::Index dy = offset(rng);
    const Eigen::Index dx = offset(rng);
    const bool flip = coin(rng) == 1;

    Vector out(kCifarPixels);
    for (Eigen::Index c = 0; c < kCifarChannels; ++c) {
        // Zero padding in raw pixel space corresponds to -mean/std here.
        const double fill = -kCifarMean[c] / kCifarStd[c];
        const Eigen::Index base = c * kCifarSide * kCifarSide;
        for (Eigen::Index row = 0; row < kCifarSide; ++row) {
            for (Eigen::Index col = 0; col < kCifarSide; ++col) {
                const Eigen::Index src_col = flip ? kCifarSide - 1 - col : col;
                const Eigen::Index py = row + dy - pad;
                const Eigen::Index px = src_col + dx - pad;
                double v = fill;
                if (py >= 0 && py < kCifarSide && px >= 0 && px < kCifarSide)
                    v = image(base + py * kCifarSide + px);
                out(base + row * kCifarSide + col) = v;
            }
        }
    }
    return out;
}

}  // namespace cil
