#include "cil/model.hpp"

#include <fstream>
#include <random>
#include <set>

#include "cil/errors.hpp"
#include "cil/rng.hpp"
#include "cil/serialize.hpp"

namespace cil {

ClassifierHead ClassifierHead::empty(Eigen::Index feature_dim, bool with_bias) {
    ClassifierHead head;
    head.weights = Matrix(feature_dim, 0);
    if (with_bias) head.bias = Vector(0);
    head.old_count = 0;
    head.new_count = 0;
    return head;
}

Vector logits(const ClassifierHead& head, const Vector& features) {
    CIL_CHECK_ARG(features.size() == head.feature_dim(),
                  "feature vector length does not match head");
    Vector o = head.weights.transpose() * features;
    if (head.bias) o += *head.bias;
    return o;
}

ClassifierHead expand_head(const ClassifierHead& head, Eigen::Index added_classes,
                           const InitSpec& init) {
    CIL_CHECK_ARG(added_classes >= 1, "added_classes must be positive");
    const Eigen::Index d = head.feature_dim();
    const Eigen::Index old_cols = head.total_classes();

    ClassifierHead out;
    out.weights = Matrix(d, old_cols + added_classes);
    out.weights.leftCols(old_cols) = head.weights;
    out.old_count = old_cols;
    out.new_count = added_classes;

    switch (init.kind) {
        case InitSpec::Kind::zero:
            out.weights.rightCols(added_classes).setZero();
            break;
        case InitSpec::Kind::uniform: {
            const double hw =
                init.half_width > 0 ? init.half_width : 1.0 / std::sqrt(static_cast<double>(d));
            Rng rng = make_rng(init.seed);
            std::uniform_real_distribution<double> dist(-hw, hw);
            for (Eigen::Index c = 0; c < added_classes; ++c)
                for (Eigen::Index r = 0; r < d; ++r) out.weights(r, old_cols + c) = dist(rng);
            break;
        }
    }

    if (head.bias) {
        Vector b = Vector::Zero(old_cols + added_classes);
        b.head(old_cols) = *head.bias;
        out.bias = std::move(b);
    }
    return out;
}

std::pair<Matrix, Matrix> split_weights(const ClassifierHead& head) {
    CIL_CHECK_ARG(head.old_count >= 0 && head.old_count + head.new_count == head.total_classes(),
                  "inconsistent head partition");
    return {head.weights.leftCols(head.old_count), head.weights.rightCols(head.new_count)};
}

Vector FeatureExtractor::features(const Vector& x) const {
    CIL_CHECK_ARG(x.size() == input_dim(), "input length does not match extractor");
    Vector a1 = ((w1 * x + b1).array().max(0.0)).matrix();
    Vector z2 = w2 * a1 + b2;
    return rectify_output ? Vector((z2.array().max(0.0)).matrix()) : z2;
}

FeatureExtractor::Trace FeatureExtractor::forward_trace(const Vector& x) const {
    CIL_CHECK_ARG(x.size() == input_dim(), "input length does not match extractor");
    Trace t;
    t.z1 = w1 * x + b1;
    t.a1 = (t.z1.array().max(0.0)).matrix();
    t.z2 = w2 * t.a1 + b2;
    t.phi = rectify_output ? Vector((t.z2.array().max(0.0)).matrix()) : t.z2;
    return t;
}

namespace {

void fill_uniform_fan_in(Matrix& w, Vector& b, Rng& rng) {
    const double hw = 1.0 / std::sqrt(static_cast<double>(w.cols()));
    std::uniform_real_distribution<double> dist(-hw, hw);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = dist(rng);
}

}  // namespace

FeatureExtractor FeatureExtractor::make(Eigen::Index input_dim, Eigen::Index hidden_dim,
                                        Eigen::Index feature_dim, bool rectify_output,
                                        std::uint64_t seed) {
    CIL_CHECK_ARG(input_dim >= 1 && hidden_dim >= 1 && feature_dim >= 1,
                  "extractor dimensions must be positive");
    FeatureExtractor fx;
    fx.w1 = Matrix(hidden_dim, input_dim);
    fx.b1 = Vector(hidden_dim);
    fx.w2 = Matrix(feature_dim, hidden_dim);
    fx.b2 = Vector(feature_dim);
    fx.rectify_output = rectify_output;
    Rng rng = make_rng(seed);
    fill_uniform_fan_in(fx.w1, fx.b1, rng);
    fill_uniform_fan_in(fx.w2, fx.b2, rng);
    return fx;
}

Vector Model::logits_for(const Vector& x) const { return logits(head, extractor.features(x)); }

TaskSchedule TaskSchedule::from_order(const std::vector<int>& order,
                                      const std::vector<Eigen::Index>& step_sizes) {
    Eigen::Index total = 0;
    for (Eigen::Index s : step_sizes) {
        CIL_CHECK_ARG(s >= 1, "every step must introduce at least one class");
        total += s;
    }
    CIL_CHECK_ARG(total == static_cast<Eigen::Index>(order.size()),
                  "step sizes do not sum to the class-order length");
    std::set<int> seen(order.begin(), order.end());
    CIL_CHECK_ARG(seen.size() == order.size(), "class order contains duplicates");

    TaskSchedule sched;
    std::size_t pos = 0;
    for (Eigen::Index s : step_sizes) {
        sched.batches.emplace_back(order.begin() + pos, order.begin() + pos + s);
        pos += static_cast<std::size_t>(s);
    }
    return sched;
}

Eigen::Index TaskSchedule::step_size(Eigen::Index step) const {
    CIL_CHECK_ARG(step >= 1 && step <= total_steps(), "step out of range");
    return static_cast<Eigen::Index>(batches[static_cast<std::size_t>(step - 1)].size());
}

Eigen::Index TaskSchedule::old_count_at(Eigen::Index step) const {
    CIL_CHECK_ARG(step >= 1 && step <= total_steps(), "step out of range");
    Eigen::Index n = 0;
    for (Eigen::Index b = 1; b < step; ++b) n += step_size(b);
    return n;
}

Eigen::Index TaskSchedule::seen_count_at(Eigen::Index step) const {
    return old_count_at(step) + step_size(step);
}

Eigen::Index TaskSchedule::total_classes() const {
    Eigen::Index n = 0;
    for (const auto& b : batches) n += static_cast<Eigen::Index>(b.size());
    return n;
}

std::vector<int> TaskSchedule::flat_order() const {
    std::vector<int> order;
    for (const auto& b : batches) order.insert(order.end(), b.begin(), b.end());
    return order;
}

namespace {
constexpr const char* kCheckpointFormat = "cil-checkpoint-v1";
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) {
    Json j;
    j["format"] = kCheckpointFormat;
    j["seed"] = model.seed;
    j["extractor"] = {{"w1", matrix_to_json(model.extractor.w1)},
                      {"b1", vector_to_json(model.extractor.b1)},
                      {"w2", matrix_to_json(model.extractor.w2)},
                      {"b2", vector_to_json(model.extractor.b2)},
                      {"rectify_output", model.extractor.rectify_output}};
    j["head"] = {{"weights", matrix_to_json(model.head.weights)},
                 {"bias", model.head.bias ? vector_to_json(*model.head.bias) : Json(nullptr)},
                 {"old_count", model.head.old_count},
                 {"new_count", model.head.new_count}};

    std::ofstream out(path);
    if (!out) throw Error("cannot write checkpoint file " + path.string());
    out << j.dump(1) << '\n';
    if (!out) throw Error("failed writing checkpoint file " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open checkpoint file " + path.string());
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& e) {
        throw Error("malformed checkpoint " + path.string() + ": " + e.what());
    }
    if (!j.contains("format") || j["format"] != kCheckpointFormat)
        throw Error("unrecognized checkpoint format in " + path.string());

    Model m;
    m.seed = j.at("seed").get<std::uint64_t>();
    const Json& fx = j.at("extractor");
    m.extractor.w1 = matrix_from_json(fx.at("w1"), "extractor.w1");
    m.extractor.b1 = vector_from_json(fx.at("b1"), "extractor.b1");
    m.extractor.w2 = matrix_from_json(fx.at("w2"), "extractor.w2");
    m.extractor.b2 = vector_from_json(fx.at("b2"), "extractor.b2");
    m.extractor.rectify_output = fx.at("rectify_output").get<bool>();

    const Json& hd = j.at("head");
    m.head.weights = matrix_from_json(hd.at("weights"), "head.weights");
    if (!hd.at("bias").is_null()) m.head.bias = vector_from_json(hd.at("bias"), "head.bias");
    m.head.old_count = hd.at("old_count").get<Eigen::Index>();
    m.head.new_count = hd.at("new_count").get<Eigen::Index>();

    if (m.head.old_count + m.head.new_count != m.head.total_classes())
        throw Error("checkpoint head partition inconsistent in " + path.string());
    if (m.head.bias && m.head.bias->size() != m.head.total_classes())
        throw Error("checkpoint bias length inconsistent in " + path.string());
    if (m.extractor.feature_dim() != m.head.feature_dim())
        throw Error("checkpoint extractor/head dimensions inconsistent in " + path.string());
    return m;
}

}  // namespace cil
