#ifndef CIL_WEIGHT_ALIGNING_HPP
#define CIL_WEIGHT_ALIGNING_HPP

#include <optional>

#include "cil/model.hpp"

namespace cil {

enum class NormKind { one_norm, two_norm };

/// Per-class weight-vector norms, split by old/new group, plus the rescaling
/// coefficient derived from them.
struct NormReport {
    Vector old_norms;
    Vector new_norms;
    double mean_old = 0.0;  // NaN when there are no old classes
    double mean_new = 0.0;
    std::optional<double> gamma;  // empty when there are no old classes
    NormKind kind = NormKind::two_norm;
};

NormReport weight_norms(const ClassifierHead& head, NormKind kind = NormKind::two_norm);

/// Rescales every new-class column (and new-class bias entry, when present) by
/// gamma = mean_old / mean_new so the group mean norms match. Old columns are
/// returned bit-identical.
ClassifierHead align_weights(const ClassifierHead& head, NormKind kind = NormKind::two_norm);

/// Equivalent correction applied to logits instead of weights.
Vector corrected_logits(const Vector& old_logits, const Vector& new_logits, double gamma);

/// Projects every weight entry onto [0, inf); bias untouched.
ClassifierHead clip_weights_nonnegative(const ClassifierHead& head);

/// Post-hoc baseline: every column rescaled to unit norm.
ClassifierHead unit_norm_postprocess(const ClassifierHead& head,
                                     NormKind kind = NormKind::two_norm);

// Weight-normalization layer used by the trained-with-unit-norm baseline. The
// forward pass sees column-normalized weights while the raw parameters stay
// trainable; wnl_backward maps a gradient in effective weights back to the raw
// parameterization.
Matrix wnl_effective_weights(const Matrix& raw_weights);
Matrix wnl_backward(const Matrix& raw_weights, const Matrix& grad_effective);

}  // namespace cil

#endif  // CIL_WEIGHT_ALIGNING_HPP
