#include "cil/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "cil/errors.hpp"
#include "cil/rng.hpp"

namespace cil {

void VariationSpec::validate() const {
    CIL_CHECK_ARG(!(use_wa && use_wnl),
                  "weight aligning and the weight normalization layer are mutually exclusive");
}

void TrainConfig::validate() const {
    CIL_CHECK_ARG(epochs >= 1, "epochs must be positive");
    CIL_CHECK_ARG(batch_size >= 1, "batch size must be positive");
    CIL_CHECK_ARG(learning_rate > 0.0, "learning rate must be positive");
    CIL_CHECK_ARG(lr_decay > 0.0 && lr_decay <= 1.0, "lr decay must be in (0, 1]");
    CIL_CHECK_ARG(momentum >= 0.0 && momentum < 1.0, "momentum must be in [0, 1)");
    CIL_CHECK_ARG(weight_decay >= 0.0, "weight decay must be non-negative");
    for (std::size_t i = 0; i < milestones.size(); ++i) {
        CIL_CHECK_ARG(milestones[i] >= 0 && milestones[i] < epochs,
                      "milestone epochs must lie within the run");
        if (i > 0)
            CIL_CHECK_ARG(milestones[i] > milestones[i - 1],
                          "milestones must be strictly increasing");
    }
    loss.validate();
}

TrainConfig TrainConfig::desk_default() { return TrainConfig{}; }

TrainConfig TrainConfig::cifar_schedule() {
    TrainConfig t;
    t.epochs = 250;
    t.milestones = {100, 150, 200};
    return t;
}

void ModelSpec::validate() const {
    CIL_CHECK_ARG(hidden_dim >= 1 && feature_dim >= 1, "model dimensions must be positive");
}

void MemorySpec::validate() const {
    CIL_CHECK_ARG(budget >= 1, "memory budget must be positive");
}

IncrementalDriver::IncrementalDriver(const Dataset& dataset, TaskSchedule schedule,
                                     VariationSpec variation, TrainConfig train,
                                     ModelSpec model_spec, MemorySpec memory_spec,
                                     std::uint64_t seed)
    : dataset_(dataset),
      schedule_(std::move(schedule)),
      variation_(variation),
      train_(std::move(train)),
      model_spec_(model_spec),
      seed_(seed),
      memory_(memory_spec.budget, memory_spec.strategy) {
    variation_.validate();
    train_.validate();
    model_spec_.validate();
    memory_spec.validate();
    CIL_CHECK_ARG(schedule_.total_steps() >= 1, "schedule has no steps");

    const auto order = schedule_.flat_order();
    CIL_CHECK_ARG(static_cast<int>(order.size()) <= dataset_.num_labels,
                  "schedule needs more classes than the dataset provides");
    column_of_label_.assign(static_cast<std::size_t>(dataset_.num_labels), -1);
    for (std::size_t c = 0; c < order.size(); ++c) {
        const int label = order[c];
        CIL_CHECK_ARG(label >= 0 && label < dataset_.num_labels,
                      "scheduled label outside the dataset label range");
        column_of_label_[static_cast<std::size_t>(label)] = static_cast<int>(c);
    }

    model_.extractor =
        FeatureExtractor::make(dataset_.input_dim(), model_spec_.hidden_dim,
                               model_spec_.feature_dim, model_spec_.rectify_features,
                               derive_seed(seed_, "extractor-init"));
    model_.head = ClassifierHead::empty(model_spec_.feature_dim, variation_.bias_enabled);
    model_.seed = seed_;
    precorrection_head_ = model_.head;
}

StepMetrics IncrementalDriver::run_step() {
    const Eigen::Index step = steps_done_ + 1;
    if (step > total_steps()) throw ProtocolError("all scheduled steps have already run");
    const auto& batch = schedule_.batches[static_cast<std::size_t>(step - 1)];
    const std::set<int> wanted(batch.begin(), batch.end());

    std::vector<std::pair<Eigen::Index, int>> data;
    for (Eigen::Index i = 0; i < dataset_.train_size(); ++i) {
        const int label = dataset_.train_y[static_cast<std::size_t>(i)];
        if (wanted.count(label)) data.emplace_back(i, label);
    }
    return execute_step(data);
}

StepMetrics IncrementalDriver::run_step_with_data(
    const std::vector<std::pair<Eigen::Index, int>>& step_data) {
    const Eigen::Index step = steps_done_ + 1;
    if (step > total_steps()) throw ProtocolError("all scheduled steps have already run");
    const auto& batch = schedule_.batches[static_cast<std::size_t>(step - 1)];
    const std::set<int> wanted(batch.begin(), batch.end());
    std::set<int> present;
    for (const auto& [id, label] : step_data) {
        if (!wanted.count(label))
            throw ProtocolError("step data contains label " + std::to_string(label) +
                                " outside the schedule batch for step " + std::to_string(step));
        present.insert(label);
    }
    if (present != wanted)
        throw ProtocolError("step data does not cover every class of the schedule batch for step " +
                            std::to_string(step));
    return execute_step(step_data);
}

TeacherSnapshot IncrementalDriver::snapshot_teacher() const {
    CIL_CHECK_STATE(steps_done_ >= 1, "no trained model to snapshot");
    TeacherSnapshot t;
    t.model = model_;
    t.class_count = model_.head.total_classes();
    return t;
}

const ClassifierHead& IncrementalDriver::precorrection_head() const {
    CIL_CHECK_STATE(have_precorrection_, "no step has run yet");
    return precorrection_head_;
}

StepMetrics IncrementalDriver::execute_step(
    const std::vector<std::pair<Eigen::Index, int>>& step_data) {
    const auto start = std::chrono::steady_clock::now();
    const Eigen::Index step = steps_done_ + 1;
    if (step > total_steps()) throw ProtocolError("all scheduled steps have already run");
    const Eigen::Index old_count = schedule_.old_count_at(step);
    const Eigen::Index new_count = schedule_.step_size(step);

    std::optional<TeacherSnapshot> teacher;
    if (step > 1) {
        TeacherSnapshot t;
        t.model = model_;
        if (variation_.distill_from_precorrection && have_precorrection_)
            t.model.head = precorrection_head_;
        t.class_count = t.model.head.total_classes();
        CIL_CHECK_STATE(t.class_count == old_count,
                        "teacher class count does not match the schedule");
        teacher = std::move(t);
    }

    model_.head = expand_head(model_.head, new_count,
                              InitSpec::uniform(derive_seed(seed_, "head-init",
                                                            static_cast<std::uint64_t>(step))));
    if (variation_.restrict_nonnegative) model_.head = clip_weights_nonnegative(model_.head);

    const auto pool = training_pool(memory_, step_data);
    train_phase(pool, teacher, old_count, new_count, step);

    precorrection_head_ = model_.head;
    have_precorrection_ = true;

    try {
        const NormReport norms = weight_norms(model_.head, variation_.norm_kind);
        if (variation_.use_wa && step > 1)
            model_.head = align_weights(model_.head, variation_.norm_kind);
        if (variation_.use_unit_norm_post)
            model_.head = unit_norm_postprocess(model_.head, variation_.norm_kind);
        if (variation_.use_wnl)
            model_.head.weights = wnl_effective_weights(model_.head.weights);

        update_memory(step_data, step);

        StepMetrics metrics = evaluate_step(step, norms);
        metrics.wallclock_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        steps_done_ = step;
        return metrics;
    } catch (const DegenerateWeights& e) {
        throw DegenerateWeights("step " + std::to_string(step) + ": " + e.what());
    }
}

void IncrementalDriver::train_phase(const std::vector<std::pair<Eigen::Index, int>>& pool,
                                    const std::optional<TeacherSnapshot>& teacher,
                                    Eigen::Index old_count, Eigen::Index new_count,
                                    Eigen::Index step) {
    CIL_CHECK_ARG(!pool.empty(), "empty training pool");
    const bool kd_active = variation_.use_kd && old_count > 0;
    CIL_CHECK_STATE(!kd_active || teacher.has_value(), "distillation requested without a teacher");

    FeatureExtractor& fx = model_.extractor;
    ClassifierHead& head = model_.head;

    Matrix vel_w1 = Matrix::Zero(fx.w1.rows(), fx.w1.cols());
    Vector vel_b1 = Vector::Zero(fx.b1.size());
    Matrix vel_w2 = Matrix::Zero(fx.w2.rows(), fx.w2.cols());
    Vector vel_b2 = Vector::Zero(fx.b2.size());
    Matrix vel_head = Matrix::Zero(head.weights.rows(), head.weights.cols());
    Vector vel_bias = head.bias ? Vector(Vector::Zero(head.bias->size())) : Vector();

    Matrix g_w1(fx.w1.rows(), fx.w1.cols());
    Vector g_b1(fx.b1.size());
    Matrix g_w2(fx.w2.rows(), fx.w2.cols());
    Vector g_b2(fx.b2.size());
    Matrix g_head(head.weights.rows(), head.weights.cols());
    Vector g_bias = head.bias ? Vector(head.bias->size()) : Vector();

    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    for (int epoch = 0; epoch < train_.epochs; ++epoch) {
        double lr = train_.learning_rate;
        for (int m : train_.milestones)
            if (epoch >= m) lr *= train_.lr_decay;

        const std::uint64_t epoch_tag =
            static_cast<std::uint64_t>(step) * 1000003ULL + static_cast<std::uint64_t>(epoch);
        Rng shuffle_rng = make_rng(derive_seed(seed_, "shuffle", epoch_tag));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        Rng augment_rng = make_rng(derive_seed(seed_, "augment", epoch_tag));

        for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(train_.batch_size)) {
            const std::size_t end =
                std::min(order.size(), begin + static_cast<std::size_t>(train_.batch_size));
            const double inv_batch = 1.0 / static_cast<double>(end - begin);

            Matrix wnl_eff;
            const bool use_wnl = variation_.use_wnl;
            if (use_wnl) wnl_eff = wnl_effective_weights(head.weights);
            const Matrix& w_forward = use_wnl ? wnl_eff : head.weights;

            g_w1.setZero();
            g_b1.setZero();
            g_w2.setZero();
            g_b2.setZero();
            g_head.setZero();
            if (head.bias) g_bias.setZero();

            for (std::size_t i = begin; i < end; ++i) {
                const auto& [sample_id, label] = pool[order[i]];
                const int column = column_of_label_[static_cast<std::size_t>(label)];
                CIL_CHECK_STATE(column >= 0 && column < old_count + new_count,
                                "pool sample outside the seen classes");

                const Vector x = training_input(sample_id, augment_rng);
                const FeatureExtractor::Trace trace = fx.forward_trace(x);

                Vector logits_vec = w_forward.transpose() * trace.phi;
                if (head.bias) logits_vec += *head.bias;

                Vector g_logits;
                if (kd_active) {
                    const Vector teacher_logits = teacher->model.logits_for(x);
                    g_logits = combined_grad(logits_vec, column, teacher_logits, train_.loss,
                                             old_count, new_count);
                } else {
                    g_logits = cross_entropy_grad(logits_vec, column);
                }

                g_head.noalias() += trace.phi * g_logits.transpose();
                if (head.bias) g_bias += g_logits;

                Vector d_phi = w_forward * g_logits;
                Vector d_z2 = fx.rectify_output
                                  ? Vector((trace.z2.array() > 0.0).cast<double>() * d_phi.array())
                                  : d_phi;
                g_w2.noalias() += d_z2 * trace.a1.transpose();
                g_b2 += d_z2;
                Vector d_a1 = fx.w2.transpose() * d_z2;
                Vector d_z1 = ((trace.z1.array() > 0.0).cast<double>() * d_a1.array()).matrix();
                g_w1.noalias() += d_z1 * x.transpose();
                g_b1 += d_z1;
            }

            const auto update = [&](auto& param, auto& vel, const auto& grad) {
                vel = train_.momentum * vel + (grad * inv_batch + train_.weight_decay * param);
                param -= lr * vel;
            };
            update(fx.w1, vel_w1, g_w1);
            update(fx.b1, vel_b1, g_b1);
            update(fx.w2, vel_w2, g_w2);
            update(fx.b2, vel_b2, g_b2);
            if (use_wnl) {
                const Matrix g_raw = wnl_backward(head.weights, Matrix(g_head * inv_batch));
                vel_head = train_.momentum * vel_head + (g_raw + train_.weight_decay * head.weights);
                head.weights -= lr * vel_head;
            } else {
                update(head.weights, vel_head, g_head);
            }
            if (head.bias) update(*head.bias, vel_bias, g_bias);

            if (variation_.restrict_nonnegative) head.weights = head.weights.cwiseMax(0.0);
        }
    }
}

void IncrementalDriver::update_memory(const std::vector<std::pair<Eigen::Index, int>>& step_data,
                                      Eigen::Index step) {
    std::map<int, ExemplarMemory::ClassCandidates> candidates;
    for (const auto& [sample_id, label] : step_data) {
        auto& c = candidates[label];
        c.label = label;
        c.sample_ids.push_back(sample_id);
    }
    for (auto& [label, c] : candidates) {
        c.features.reserve(c.sample_ids.size());
        for (Eigen::Index id : c.sample_ids)
            c.features.push_back(model_.extractor.features(dataset_.train_x.row(id).transpose()));
    }
    std::vector<ExemplarMemory::ClassCandidates> list;
    list.reserve(candidates.size());
    for (auto& [label, c] : candidates) list.push_back(std::move(c));
    memory_.rebalance(list, derive_seed(seed_, "memory", static_cast<std::uint64_t>(step)));
}

StepMetrics IncrementalDriver::evaluate_step(Eigen::Index step, const NormReport& norms) const {
    const Eigen::Index seen = schedule_.seen_count_at(step);
    const Eigen::Index old_count = schedule_.old_count_at(step);

    std::vector<Eigen::Index> rows;
    std::vector<int> labels;
    for (Eigen::Index i = 0; i < dataset_.test_size(); ++i) {
        const int label = dataset_.test_y[static_cast<std::size_t>(i)];
        const int column = column_of_label_[static_cast<std::size_t>(label)];
        if (column >= 0 && column < seen) {
            rows.push_back(i);
            labels.push_back(column);
        }
    }
    CIL_CHECK_STATE(!rows.empty(), "no test samples for the seen classes");

    Matrix logit_rows(static_cast<Eigen::Index>(rows.size()), seen);
    std::vector<int> predictions(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Vector phi = model_.extractor.features(dataset_.test_x.row(rows[i]).transpose());
        const Vector o = logits(model_.head, phi);
        logit_rows.row(static_cast<Eigen::Index>(i)) = o.transpose();
        predictions[i] = static_cast<int>(argmax_prediction(o));
    }

    std::set<int> old_set;
    for (Eigen::Index c = 0; c < old_count; ++c) old_set.insert(static_cast<int>(c));

    StepMetrics m;
    m.step = static_cast<int>(step);
    m.seen_classes = seen;
    m.top1 = topk_accuracy(logit_rows, labels, 1);
    m.top5 = topk_accuracy(logit_rows, labels, std::min<Eigen::Index>(5, seen));
    m.errors = error_decomposition(predictions, labels, old_set);
    m.confusion = confusion_matrix(predictions, labels, seen);
    m.norms = norms;
    return m;
}

Vector IncrementalDriver::training_input(Eigen::Index sample_id, Rng& augment_rng) const {
    Vector x = dataset_.train_x.row(sample_id).transpose();
    if (dataset_.kind == DatasetKind::cifar100) return augment_cifar(x, augment_rng);
    return x;
}

ExperimentResult run_experiment(const Dataset& dataset, const TaskSchedule& schedule,
                                const VariationSpec& variation, const TrainConfig& train,
                                const ModelSpec& model_spec, const MemorySpec& memory_spec,
                                std::uint64_t seed, const StepObserver& observer) {
    IncrementalDriver driver(dataset, schedule, variation, train, model_spec, memory_spec, seed);
    ExperimentResult result;
    for (Eigen::Index b = 1; b <= driver.total_steps(); ++b) {
        result.steps.push_back(driver.run_step());
        if (observer)
            observer({result.steps.back(), driver.model(), driver.memory(),
                      driver.precorrection_head()});
    }
    result.summary = summarize(result.steps);
    return result;
}

}  // namespace cil
