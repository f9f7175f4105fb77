#ifndef CIL_EXEMPLAR_MEMORY_HPP
#define CIL_EXEMPLAR_MEMORY_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <utility>
#include <vector>

#include "cil/model.hpp"

namespace cil {

/// Greedy selection order: at each step pick the candidate whose inclusion
/// keeps the mean of the selected features closest (2-norm) to the mean of all
/// candidate features. Ties go to the lowest index. Returns indices into
/// `features` in selection order; truncating the result to m' gives exactly
/// the size-m' selection.
std::vector<Eigen::Index> herding_select(const std::vector<Vector>& features, Eigen::Index m);

/// Uniform sample of m indices out of {0..n-1} without replacement,
/// deterministic under seed.
std::vector<Eigen::Index> random_select(Eigen::Index n, Eigen::Index m, std::uint64_t seed);

/// Fixed-budget rehearsal store. Keys are dataset labels; values are ordered
/// sample identifiers. Quotas stay balanced (max-min <= 1) as classes grow.
class ExemplarMemory {
public:
    enum class Strategy { herding, random };

    struct ClassCandidates {
        int label = 0;
        std::vector<Eigen::Index> sample_ids;
        std::vector<Vector> features;  // parallel to sample_ids
    };

    ExemplarMemory(Eigen::Index budget, Strategy strategy);

    /// Shrinks existing per-class lists to the new quota (prefix truncation)
    /// and fills the given new classes by the configured strategy.
    void rebalance(const std::vector<ClassCandidates>& new_classes, std::uint64_t seed);

    Eigen::Index budget() const { return budget_; }
    Strategy strategy() const { return strategy_; }
    Eigen::Index total_stored() const;
    Eigen::Index class_count() const { return static_cast<Eigen::Index>(per_class_.size()); }
    const std::map<int, std::vector<Eigen::Index>>& per_class() const { return per_class_; }

    void save_manifest(const std::filesystem::path& path) const;
    static ExemplarMemory load_manifest(const std::filesystem::path& path);

private:
    Eigen::Index budget_;
    Strategy strategy_;
    std::map<int, std::vector<Eigen::Index>> per_class_;
};

/// Every stored exemplar plus the new-step samples, as (sample_id, label)
/// pairs. Epoch shuffling is the caller's job.
std::vector<std::pair<Eigen::Index, int>> training_pool(
    const ExemplarMemory& memory, const std::vector<std::pair<Eigen::Index, int>>& new_data);

}  // namespace cil

#endif  // CIL_EXEMPLAR_MEMORY_HPP
