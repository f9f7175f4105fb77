#include "cil/losses.hpp"

#include <cmath>

#include "cil/errors.hpp"

namespace cil {

namespace {

void check_finite(const Vector& v, const char* what) {
    CIL_CHECK_ARG(v.allFinite(), std::string(what) + " contains non-finite values");
}

double log_sum_exp(const Vector& v) {
    const double m = v.maxCoeff();
    return m + std::log((v.array() - m).exp().sum());
}

}  // namespace

void LossConfig::validate() const {
    CIL_CHECK_ARG(temperature > 0.0, "temperature must be positive");
    if (lambda_override)
        CIL_CHECK_ARG(*lambda_override >= 0.0 && *lambda_override <= 1.0,
                      "lambda_override outside [0, 1]");
}

Vector softmax_with_temperature(const Vector& logits, double temperature) {
    CIL_CHECK_ARG(logits.size() >= 1, "softmax needs at least one logit");
    CIL_CHECK_ARG(temperature > 0.0, "temperature must be positive");
    check_finite(logits, "logits");
    Vector scaled = logits / temperature;
    const double m = scaled.maxCoeff();
    Vector e = (scaled.array() - m).exp().matrix();
    return e / e.sum();
}

double cross_entropy_loss(const Vector& logits, Eigen::Index label) {
    CIL_CHECK_ARG(label >= 0 && label < logits.size(), "label out of range");
    check_finite(logits, "logits");
    return log_sum_exp(logits) - logits(label);
}

double distillation_loss(const Vector& student_logits, const Vector& teacher_logits,
                         Eigen::Index old_count, double temperature) {
    CIL_CHECK_ARG(old_count >= 1, "distillation needs at least one old class");
    CIL_CHECK_ARG(teacher_logits.size() == old_count, "teacher logits length != old class count");
    CIL_CHECK_ARG(student_logits.size() >= old_count, "student logits shorter than old class count");
    CIL_CHECK_ARG(temperature > 0.0, "temperature must be positive");
    check_finite(student_logits, "student logits");
    check_finite(teacher_logits, "teacher logits");

    Vector s = student_logits.head(old_count) / temperature;
    Vector log_q = (s.array() - log_sum_exp(s)).matrix();
    Vector q_hat = softmax_with_temperature(teacher_logits, temperature);
    return -(q_hat.array() * log_q.array()).sum();
}

double lambda_balance(Eigen::Index old_count, Eigen::Index new_count) {
    CIL_CHECK_ARG(old_count >= 0, "old class count must be non-negative");
    CIL_CHECK_ARG(new_count >= 1, "new class count must be positive");
    return static_cast<double>(old_count) / static_cast<double>(old_count + new_count);
}

namespace {

double resolve_lambda(const LossConfig& config, Eigen::Index old_count, Eigen::Index new_count) {
    if (config.lambda_override) return *config.lambda_override;
    return lambda_balance(old_count, new_count);
}

void check_teacher_presence(const std::optional<Vector>& teacher_logits, Eigen::Index old_count) {
    CIL_CHECK_STATE(!(old_count > 0 && !teacher_logits),
                    "teacher logits required when old classes exist");
    CIL_CHECK_STATE(!(old_count == 0 && teacher_logits),
                    "teacher logits present but there are no old classes");
}

}  // namespace

double combined_loss(const Vector& student_logits, Eigen::Index label,
                     const std::optional<Vector>& teacher_logits, const LossConfig& config,
                     Eigen::Index old_count, Eigen::Index new_count) {
    config.validate();
    check_teacher_presence(teacher_logits, old_count);
    const double ce = cross_entropy_loss(student_logits, label);
    if (old_count == 0) return ce;
    const double lambda = resolve_lambda(config, old_count, new_count);
    const double kd =
        distillation_loss(student_logits, *teacher_logits, old_count, config.temperature);
    return (1.0 - lambda) * ce + lambda * kd;
}

Vector cross_entropy_grad(const Vector& logits, Eigen::Index label) {
    CIL_CHECK_ARG(label >= 0 && label < logits.size(), "label out of range");
    Vector g = softmax_with_temperature(logits, 1.0);
    g(label) -= 1.0;
    return g;
}

Vector distillation_grad(const Vector& student_logits, const Vector& teacher_logits,
                         Eigen::Index old_count, double temperature) {
    CIL_CHECK_ARG(old_count >= 1, "distillation needs at least one old class");
    CIL_CHECK_ARG(teacher_logits.size() == old_count, "teacher logits length != old class count");
    CIL_CHECK_ARG(student_logits.size() >= old_count, "student logits shorter than old class count");
    Vector g = Vector::Zero(student_logits.size());
    Vector q = softmax_with_temperature(student_logits.head(old_count), temperature);
    Vector q_hat = softmax_with_temperature(teacher_logits, temperature);
    g.head(old_count) = (q - q_hat) / temperature;
    return g;
}

Vector combined_grad(const Vector& student_logits, Eigen::Index label,
                     const std::optional<Vector>& teacher_logits, const LossConfig& config,
                     Eigen::Index old_count, Eigen::Index new_count) {
    config.validate();
    check_teacher_presence(teacher_logits, old_count);
    Vector g_ce = cross_entropy_grad(student_logits, label);
    if (old_count == 0) return g_ce;
    const double lambda = resolve_lambda(config, old_count, new_count);
    Vector g_kd =
        distillation_grad(student_logits, *teacher_logits, old_count, config.temperature);
    return (1.0 - lambda) * g_ce + lambda * g_kd;
}

}  // namespace cil
