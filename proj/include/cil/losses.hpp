#ifndef CIL_LOSSES_HPP
#define CIL_LOSSES_HPP

#include <optional>

#include "cil/model.hpp"

namespace cil {

struct LossConfig {
    double temperature = 2.0;
    // Accepts 1.0 so a pure-distillation run is expressible.
    std::optional<double> lambda_override;

    void validate() const;
};

Vector softmax_with_temperature(const Vector& logits, double temperature);

/// -log softmax(logits)[label], temperature 1.
double cross_entropy_loss(const Vector& logits, Eigen::Index label);

/// Soft cross-entropy between the teacher distribution and the student
/// distribution over the first old_count logits only, both at temperature T.
/// The student distribution is renormalized over those entries.
double distillation_loss(const Vector& student_logits, const Vector& teacher_logits,
                         Eigen::Index old_count, double temperature);

/// old_count / (old_count + new_count).
double lambda_balance(Eigen::Index old_count, Eigen::Index new_count);

/// (1 - lambda) * CE + lambda * KD; exactly CE when old_count == 0.
double combined_loss(const Vector& student_logits, Eigen::Index label,
                     const std::optional<Vector>& teacher_logits, const LossConfig& config,
                     Eigen::Index old_count, Eigen::Index new_count);

// Gradients with respect to the student logits.
Vector cross_entropy_grad(const Vector& logits, Eigen::Index label);
Vector distillation_grad(const Vector& student_logits, const Vector& teacher_logits,
                         Eigen::Index old_count, double temperature);
Vector combined_grad(const Vector& student_logits, Eigen::Index label,
                     const std::optional<Vector>& teacher_logits, const LossConfig& config,
                     Eigen::Index old_count, Eigen::Index new_count);

}  // namespace cil

#endif  // CIL_LOSSES_HPP
