#ifndef CIL_METRICS_HPP
#define CIL_METRICS_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cil/model.hpp"
#include "cil/serialize.hpp"
#include "cil/weight_aligning.hpp"

namespace cil {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Index of the largest entry; ties go to the lower index.
Eigen::Index argmax_prediction(const Vector& logits);

/// Fraction of rows whose label is among the k largest logits (ties by lower
/// class index).
double topk_accuracy(const Matrix& logits, const std::vector<int>& labels, Eigen::Index k);

/// Wrong-prediction counts split by sample group and target group: e_n over
/// new-class samples, e_o over old-class samples, with e_o = e_on + e_oo
/// (misclassified as a new class vs as a wrong old class).
struct ErrorDecomposition {
    std::int64_t e_n = 0;
    std::int64_t e_o = 0;
    std::int64_t e_on = 0;
    std::int64_t e_oo = 0;
};

ErrorDecomposition error_decomposition(const std::vector<int>& predictions,
                                       const std::vector<int>& labels,
                                       const std::set<int>& old_classes);

CountMatrix confusion_matrix(const std::vector<int>& predictions, const std::vector<int>& labels,
                             Eigen::Index num_classes);

struct StepMetrics {
    int step = 0;  // 1-based
    Eigen::Index seen_classes = 0;
    double top1 = 0.0;
    double top5 = 0.0;
    ErrorDecomposition errors;
    CountMatrix confusion;
    NormReport norms;  // captured before any weight correction
    double wallclock_seconds = 0.0;
};

struct Summary {
    std::vector<double> per_step_top1;
    double last_top1 = 0.0;
    std::optional<double> incremental_average;  // empty for a single-step run
};

Summary summarize(const std::vector<StepMetrics>& steps);

Json step_metrics_to_json(const StepMetrics& m);
StepMetrics step_metrics_from_json(const Json& j);

void write_metrics_csv(const std::vector<StepMetrics>& steps, const std::filesystem::path& path);

void write_summary_csv(const Summary& summary, const std::filesystem::path& path);
Summary read_summary_csv(const std::filesystem::path& path);
std::string render_summary_table(const Summary& summary);

}  // namespace cil

#endif  // CIL_METRICS_HPP
