#ifndef CIL_MODEL_HPP
#define CIL_MODEL_HPP

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace cil {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Linear classifier head. Column c holds the weight vector for class c; the
/// first old_count columns belong to classes learned in earlier steps.
struct ClassifierHead {
    Matrix weights;              // feature_dim x (old_count + new_count)
    std::optional<Vector> bias;  // same length as columns when present
    Eigen::Index old_count = 0;
    Eigen::Index new_count = 0;

    Eigen::Index feature_dim() const { return weights.rows(); }
    Eigen::Index total_classes() const { return weights.cols(); }

    // d x 0 head used before the first expansion.
    static ClassifierHead empty(Eigen::Index feature_dim, bool with_bias);
};

/// Fill rule for freshly added head columns.
struct InitSpec {
    enum class Kind { zero, uniform };
    Kind kind = Kind::uniform;
    double half_width = 0.0;  // <= 0 means 1/sqrt(feature_dim)
    std::uint64_t seed = 0;

    static InitSpec zeros() { return {Kind::zero, 0.0, 0}; }
    static InitSpec uniform(std::uint64_t seed, double half_width = 0.0) {
        return {Kind::uniform, half_width, seed};
    }
};

Vector logits(const ClassifierHead& head, const Vector& features);

/// Copies existing columns bitwise and appends added_classes new ones. The
/// result treats every previously present column as old.
ClassifierHead expand_head(const ClassifierHead& head, Eigen::Index added_classes,
                           const InitSpec& init);

/// (W_old, W_new); concatenating the parts column-wise reproduces the head.
std::pair<Matrix, Matrix> split_weights(const ClassifierHead& head);

/// Two-layer perceptron. The final rectification keeps every feature
/// non-negative, which the weight-clipping restriction relies on.
struct FeatureExtractor {
    Matrix w1;  // hidden x input
    Vector b1;
    Matrix w2;  // feature x hidden
    Vector b2;
    bool rectify_output = true;

    Eigen::Index input_dim() const { return w1.cols(); }
    Eigen::Index hidden_dim() const { return w1.rows(); }
    Eigen::Index feature_dim() const { return w2.rows(); }

    Vector features(const Vector& x) const;

    // Intermediate activations kept for backpropagation.
    struct Trace {
        Vector z1, a1, z2, phi;
    };
    Trace forward_trace(const Vector& x) const;

    static FeatureExtractor make(Eigen::Index input_dim, Eigen::Index hidden_dim,
                                 Eigen::Index feature_dim, bool rectify_output,
                                 std::uint64_t seed);
};

struct Model {
    FeatureExtractor extractor;
    ClassifierHead head;
    std::uint64_t seed = 0;

    Vector logits_for(const Vector& x) const;
};

/// Ordered partition of the label universe into incremental batches. Head
/// column c corresponds to flat_order()[c].
struct TaskSchedule {
    std::vector<std::vector<int>> batches;

    static TaskSchedule from_order(const std::vector<int>& order,
                                   const std::vector<Eigen::Index>& step_sizes);

    Eigen::Index total_steps() const { return static_cast<Eigen::Index>(batches.size()); }
    Eigen::Index step_size(Eigen::Index step) const;      // 1-based
    Eigen::Index old_count_at(Eigen::Index step) const;   // sum of earlier step sizes
    Eigen::Index seen_count_at(Eigen::Index step) const;
    Eigen::Index total_classes() const;
    std::vector<int> flat_order() const;
};

void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace cil

#endif  // CIL_MODEL_HPP
