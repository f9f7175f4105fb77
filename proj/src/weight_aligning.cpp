#include "cil/weight_aligning.hpp"

#include <cmath>
#include <limits>

#include "cil/errors.hpp"

namespace cil {

namespace {

double column_norm(const Matrix& w, Eigen::Index c, NormKind kind) {
    switch (kind) {
        case NormKind::one_norm:
            return w.col(c).lpNorm<1>();
        case NormKind::two_norm:
            return w.col(c).norm();
    }
    throw InvalidArgument("unknown norm kind");
}

}  // namespace

NormReport weight_norms(const ClassifierHead& head, NormKind kind) {
    CIL_CHECK_ARG(head.new_count >= 1, "head has no new classes");
    CIL_CHECK_ARG(head.old_count + head.new_count == head.total_classes(),
                  "inconsistent head partition");

    NormReport report;
    report.kind = kind;
    report.old_norms = Vector(head.old_count);
    report.new_norms = Vector(head.new_count);
    for (Eigen::Index c = 0; c < head.old_count; ++c)
        report.old_norms(c) = column_norm(head.weights, c, kind);
    for (Eigen::Index c = 0; c < head.new_count; ++c)
        report.new_norms(c) = column_norm(head.weights, head.old_count + c, kind);

    report.mean_new = report.new_norms.mean();
    if (report.mean_new == 0.0)
        throw DegenerateWeights("mean new-class weight norm is zero; gamma undefined");

    if (head.old_count >= 1) {
        report.mean_old = report.old_norms.mean();
        report.gamma = report.mean_old / report.mean_new;
    } else {
        report.mean_old = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

ClassifierHead align_weights(const ClassifierHead& head, NormKind kind) {
    CIL_CHECK_STATE(head.old_count >= 1, "weight aligning needs at least one old class");
    const NormReport report = weight_norms(head, kind);
    const double gamma = *report.gamma;

    ClassifierHead out = head;
    out.weights.rightCols(head.new_count) *= gamma;
    if (out.bias) out.bias->tail(head.new_count) *= gamma;
    return out;
}

Vector corrected_logits(const Vector& old_logits, const Vector& new_logits, double gamma) {
    CIL_CHECK_ARG(gamma > 0.0, "gamma must be positive");
    Vector out(old_logits.size() + new_logits.size());
    out.head(old_logits.size()) = old_logits;
    out.tail(new_logits.size()) = gamma * new_logits;
    return out;
}

ClassifierHead clip_weights_nonnegative(const ClassifierHead& head) {
    ClassifierHead out = head;
    out.weights = out.weights.cwiseMax(0.0);
    return out;
}

ClassifierHead unit_norm_postprocess(const ClassifierHead& head, NormKind kind) {
    ClassifierHead out = head;
    for (Eigen::Index c = 0; c < head.total_classes(); ++c) {
        const double n = column_norm(head.weights, c, kind);
        if (n == 0.0)
            throw DegenerateWeights("zero-norm column " + std::to_string(c) +
                                    " cannot be normalized");
        out.weights.col(c) /= n;
    }
    return out;
}

Matrix wnl_effective_weights(const Matrix& raw_weights) {
    Matrix eff = raw_weights;
    for (Eigen::Index c = 0; c < raw_weights.cols(); ++c) {
        const double n = raw_weights.col(c).norm();
        if (n == 0.0)
            throw DegenerateWeights("zero-norm column " + std::to_string(c) +
                                    " in weight normalization layer");
        eff.col(c) /= n;
    }
    return eff;
}

Matrix wnl_backward(const Matrix& raw_weights, const Matrix& grad_effective) {
    CIL_CHECK_ARG(raw_weights.rows() == grad_effective.rows() &&
                      raw_weights.cols() == grad_effective.cols(),
                  "gradient shape does not match weights");
    Matrix grad(raw_weights.rows(), raw_weights.cols());
    for (Eigen::Index c = 0; c < raw_weights.cols(); ++c) {
        const double n = raw_weights.col(c).norm();
        if (n == 0.0)
            throw DegenerateWeights("zero-norm column " + std::to_string(c) +
                                    " in weight normalization layer");
        const Vector unit = raw_weights.col(c) / n;
        const Vector g = grad_effective.col(c);
        grad.col(c) = (g - unit.dot(g) * unit) / n;
    }
    return grad;
}

}  // namespace cil
