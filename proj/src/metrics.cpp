#include "cil/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "cil/errors.hpp"

namespace cil {

Eigen::Index argmax_prediction(const Vector& logits) {
    CIL_CHECK_ARG(logits.size() >= 1, "empty logits");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < logits.size(); ++i)
        if (logits(i) > logits(best)) best = i;
    return best;
}

double topk_accuracy(const Matrix& logits, const std::vector<int>& labels, Eigen::Index k) {
    CIL_CHECK_ARG(static_cast<std::size_t>(logits.rows()) == labels.size(),
                  "one label per logits row required");
    CIL_CHECK_ARG(k >= 1 && k <= logits.cols(), "k out of range");
    if (labels.empty()) return 0.0;

    std::int64_t hits = 0;
    std::vector<Eigen::Index> order(static_cast<std::size_t>(logits.cols()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
            if (logits(r, a) != logits(r, b)) return logits(r, a) > logits(r, b);
            return a < b;
        });
        const int label = labels[static_cast<std::size_t>(r)];
        for (Eigen::Index i = 0; i < k; ++i) {
            if (static_cast<int>(order[static_cast<std::size_t>(i)]) == label) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(logits.rows());
}

ErrorDecomposition error_decomposition(const std::vector<int>& predictions,
                                       const std::vector<int>& labels,
                                       const std::set<int>& old_classes) {
    CIL_CHECK_ARG(predictions.size() == labels.size(), "one prediction per label required");
    ErrorDecomposition e;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (predictions[i] == labels[i]) continue;
        const bool sample_old = old_classes.count(labels[i]) > 0;
        if (!sample_old) {
            ++e.e_n;
        } else {
            ++e.e_o;
            if (old_classes.count(predictions[i]) > 0)
                ++e.e_oo;
            else
                ++e.e_on;
        }
    }
    return e;
}

CountMatrix confusion_matrix(const std::vector<int>& predictions, const std::vector<int>& labels,
                             Eigen::Index num_classes) {
    CIL_CHECK_ARG(predictions.size() == labels.size(), "one prediction per label required");
    CountMatrix m = CountMatrix::Zero(num_classes, num_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CIL_CHECK_ARG(labels[i] >= 0 && labels[i] < num_classes, "label out of range");
        CIL_CHECK_ARG(predictions[i] >= 0 && predictions[i] < num_classes,
                      "prediction out of range");
        m(labels[i], predictions[i]) += 1;
    }
    return m;
}

Summary summarize(const std::vector<StepMetrics>& steps) {
    CIL_CHECK_ARG(!steps.empty(), "need at least one step");
    Summary s;
    for (const auto& m : steps) s.per_step_top1.push_back(m.top1);
    s.last_top1 = s.per_step_top1.back();
    if (steps.size() > 1) {
        const double sum =
            std::accumulate(s.per_step_top1.begin() + 1, s.per_step_top1.end(), 0.0);
        s.incremental_average = sum / static_cast<double>(steps.size() - 1);
    }
    return s;
}

namespace {

Json count_matrix_to_json(const CountMatrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

CountMatrix count_matrix_from_json(const Json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    Eigen::Index cols = rows > 0 ? static_cast<Eigen::Index>(j[0].size()) : 0;
    CountMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<std::int64_t>();
    return m;
}

Json norm_report_to_json(const NormReport& n) {
    Json j;
    j["kind"] = n.kind == NormKind::one_norm ? "one_norm" : "two_norm";
    j["old_norms"] = vector_to_json(n.old_norms);
    j["new_norms"] = vector_to_json(n.new_norms);
    j["mean_old"] = std::isnan(n.mean_old) ? Json(nullptr) : Json(n.mean_old);
    j["mean_new"] = n.mean_new;
    j["gamma"] = n.gamma ? Json(*n.gamma) : Json(nullptr);
    return j;
}

NormReport norm_report_from_json(const Json& j) {
    NormReport n;
    n.kind = j.at("kind").get<std::string>() == "one_norm" ? NormKind::one_norm
                                                           : NormKind::two_norm;
    n.old_norms = vector_from_json(j.at("old_norms"), "old_norms");
    n.new_norms = vector_from_json(j.at("new_norms"), "new_norms");
    n.mean_old = j.at("mean_old").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : j.at("mean_old").get<double>();
    n.mean_new = j.at("mean_new").get<double>();
    if (!j.at("gamma").is_null()) n.gamma = j.at("gamma").get<double>();
    return n;
}

}  // namespace

Json step_metrics_to_json(const StepMetrics& m) {
    Json j;
    j["step"] = m.step;
    j["seen_classes"] = m.seen_classes;
    j["top1"] = m.top1;
    j["top5"] = m.top5;
    j["errors"] = {{"e_n", m.errors.e_n},
                   {"e_o", m.errors.e_o},
                   {"e_on", m.errors.e_on},
                   {"e_oo", m.errors.e_oo}};
    j["confusion"] = count_matrix_to_json(m.confusion);
    j["norms"] = norm_report_to_json(m.norms);
    j["wallclock_seconds"] = m.wallclock_seconds;
    return j;
}

StepMetrics step_metrics_from_json(const Json& j) {
    StepMetrics m;
    m.step = j.at("step").get<int>();
    m.seen_classes = j.at("seen_classes").get<Eigen::Index>();
    m.top1 = j.at("top1").get<double>();
    m.top5 = j.at("top5").get<double>();
    const Json& e = j.at("errors");
    m.errors = {e.at("e_n").get<std::int64_t>(), e.at("e_o").get<std::int64_t>(),
                e.at("e_on").get<std::int64_t>(), e.at("e_oo").get<std::int64_t>()};
    m.confusion = count_matrix_from_json(j.at("confusion"));
    m.norms = norm_report_from_json(j.at("norms"));
    m.wallclock_seconds = j.at("wallclock_seconds").get<double>();
    return m;
}

void write_metrics_csv(const std::vector<StepMetrics>& steps, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write metrics csv " + path.string());
    out << "step,seen_classes,top1,top5,e_n,e_o,e_on,e_oo,gamma,mean_norm_old,mean_norm_new\n";
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (const auto& m : steps) {
        out << m.step << ',' << m.seen_classes << ',' << format_double(m.top1) << ','
            << format_double(m.top5) << ',' << m.errors.e_n << ',' << m.errors.e_o << ','
            << m.errors.e_on << ',' << m.errors.e_oo << ','
            << format_double(m.norms.gamma ? *m.norms.gamma : nan) << ','
            << format_double(m.norms.mean_old) << ',' << format_double(m.norms.mean_new) << '\n';
    }
    if (!out) throw Error("failed writing metrics csv " + path.string());
}

void write_summary_csv(const Summary& summary, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write summary csv " + path.string());
    out << "last_top1,avg_incremental_top1";
    for (std::size_t i = 0; i < summary.per_step_top1.size(); ++i) out << ",step" << (i + 1);
    out << '\n';
    out << format_double(summary.last_top1) << ','
        << format_double(summary.incremental_average
                             ? *summary.incremental_average
                             : std::numeric_limits<double>::quiet_NaN());
    for (double v : summary.per_step_top1) out << ',' << format_double(v);
    out << '\n';
}

Summary read_summary_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open summary csv " + path.string());
    std::string header, data;
    std::getline(in, header);
    std::getline(in, data);
    std::vector<std::string> cells;
    std::stringstream ss(data);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() < 3) throw Error("summary csv " + path.string() + " is truncated");

    Summary s;
    s.last_top1 = parse_double(cells[0]);
    const double avg = parse_double(cells[1]);
    if (!std::isnan(avg)) s.incremental_average = avg;
    for (std::size_t i = 2; i < cells.size(); ++i)
        s.per_step_top1.push_back(parse_double(cells[i]));
    return s;
}

std::string render_summary_table(const Summary& summary) {
    std::ostringstream os;
    os << "step ";
    for (std::size_t i = 0; i < summary.per_step_top1.size(); ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%8zu", i + 1);
        os << buf;
    }
    os << "\ntop1 ";
    for (double v : summary.per_step_top1) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%8.4f", v);
        os << buf;
    }
    os << "\n\nlast-step top1       : ";
    {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.4f", summary.last_top1);
        os << buf;
    }
    os << "\nincremental average  : ";
    if (summary.incremental_average) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%.4f", *summary.incremental_average);
        os << buf << "  (steps 2.." << summary.per_step_top1.size() << ")";
    } else {
        os << "undefined (single step)";
    }
    os << '\n';
    return os.str();
}

}  // namespace cil
