#ifndef CIL_DRIVER_HPP
#define CIL_DRIVER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cil/dataset.hpp"
#include "cil/exemplar_memory.hpp"
#include "cil/losses.hpp"
#include "cil/metrics.hpp"
#include "cil/model.hpp"
#include "cil/weight_aligning.hpp"

namespace cil {

/// Which parts of the method a run uses. The combinations mirror the ablation
/// grid: plain cross-entropy, adding distillation, adding the post-training
/// weight correction, or swapping the correction for a train-time
/// weight-normalization layer.
struct VariationSpec {
    bool use_kd = false;
    bool use_wa = false;
    bool use_wnl = false;
    bool use_unit_norm_post = false;
    bool restrict_nonnegative = true;
    bool bias_enabled = false;
    // Distill from the previous step's uncorrected head instead of the
    // deployed (corrected) one.
    bool distill_from_precorrection = false;
    NormKind norm_kind = NormKind::two_norm;

    void validate() const;  // use_wa and use_wnl are mutually exclusive
};

/// SGD with momentum and weight decay, step-decay learning rate.
struct TrainConfig {
    int epochs = 30;
    int batch_size = 32;
    double learning_rate = 0.1;
    std::vector<int> milestones = {18, 24};  // 0-based epochs where lr is scaled
    double lr_decay = 0.1;
    double momentum = 0.9;
    double weight_decay = 5e-4;
    LossConfig loss;

    void validate() const;

    static TrainConfig desk_default();
    /// 250 epochs with decays at 100/150/200.
    static TrainConfig cifar_schedule();
};

struct ModelSpec {
    Eigen::Index hidden_dim = 32;
    Eigen::Index feature_dim = 16;
    bool rectify_features = true;

    void validate() const;
};

struct MemorySpec {
    Eigen::Index budget = 2000;
    ExemplarMemory::Strategy strategy = ExemplarMemory::Strategy::herding;

    void validate() const;
};

/// Frozen copy of the previous step's deployed model.
struct TeacherSnapshot {
    Model model;
    Eigen::Index class_count = 0;
};

struct ExperimentResult {
    std::vector<StepMetrics> steps;
    Summary summary;
};

/// Runs the per-step protocol: snapshot teacher, expand head, train on the
/// rehearsal pool with the combined loss, correct the head, refresh exemplar
/// memory, evaluate on everything seen. Steps must be run in order.
class IncrementalDriver {
public:
    IncrementalDriver(const Dataset& dataset, TaskSchedule schedule, VariationSpec variation,
                      TrainConfig train, ModelSpec model_spec, MemorySpec memory_spec,
                      std::uint64_t seed);

    Eigen::Index steps_done() const { return steps_done_; }
    Eigen::Index total_steps() const { return schedule_.total_steps(); }

    StepMetrics run_step();
    /// Same, but with caller-supplied step data (sample id, dataset label);
    /// labels must match the schedule's batch for the upcoming step.
    StepMetrics run_step_with_data(const std::vector<std::pair<Eigen::Index, int>>& step_data);

    TeacherSnapshot snapshot_teacher() const;

    const Model& model() const { return model_; }
    const ExemplarMemory& memory() const { return memory_; }
    const TaskSchedule& schedule() const { return schedule_; }
    /// Head as it stood after training but before any correction, for the
    /// step that ran last.
    const ClassifierHead& precorrection_head() const;

private:
    StepMetrics execute_step(const std::vector<std::pair<Eigen::Index, int>>& step_data);
    void train_phase(const std::vector<std::pair<Eigen::Index, int>>& pool,
                     const std::optional<TeacherSnapshot>& teacher, Eigen::Index old_count,
                     Eigen::Index new_count, Eigen::Index step);
    void update_memory(const std::vector<std::pair<Eigen::Index, int>>& step_data,
                       Eigen::Index step);
    StepMetrics evaluate_step(Eigen::Index step, const NormReport& norms) const;
    Vector training_input(Eigen::Index sample_id, Rng& augment_rng) const;

    const Dataset& dataset_;
    TaskSchedule schedule_;
    VariationSpec variation_;
    TrainConfig train_;
    ModelSpec model_spec_;
    std::uint64_t seed_;

    Model model_;
    ExemplarMemory memory_;
    ClassifierHead precorrection_head_;
    bool have_precorrection_ = false;
    Eigen::Index steps_done_ = 0;
    std::vector<int> column_of_label_;  // -1 for labels outside the schedule
};

struct StepArtifacts {
    const StepMetrics& metrics;
    const Model& model;
    const ExemplarMemory& memory;
    const ClassifierHead& precorrection_head;
};
using StepObserver = std::function<void(const StepArtifacts&)>;

ExperimentResult run_experiment(const Dataset& dataset, const TaskSchedule& schedule,
                                const VariationSpec& variation, const TrainConfig& train,
                                const ModelSpec& model_spec, const MemorySpec& memory_spec,
                                std::uint64_t seed, const StepObserver& observer = {});

}  // namespace cil

#endif  // CIL_DRIVER_HPP
