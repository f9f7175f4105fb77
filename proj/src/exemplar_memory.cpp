#include "cil/exemplar_memory.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>

#include "cil/errors.hpp"
#include "cil/rng.hpp"
#include "cil/serialize.hpp"

namespace cil {

std::vector<Eigen::Index> herding_select(const std::vector<Vector>& features, Eigen::Index m) {
    CIL_CHECK_ARG(!features.empty(), "herding selection on an empty class");
    const Eigen::Index n = static_cast<Eigen::Index>(features.size());
    CIL_CHECK_ARG(m >= 0 && m <= n, "cannot select more exemplars than samples");

    const Eigen::Index d = features.front().size();
    Vector mu = Vector::Zero(d);
    for (const auto& f : features) {
        CIL_CHECK_ARG(f.size() == d, "inconsistent feature dimensions");
        mu += f;
    }
    mu /= static_cast<double>(n);

    std::vector<Eigen::Index> selected;
    selected.reserve(static_cast<std::size_t>(m));
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    Vector running_sum = Vector::Zero(d);

    for (Eigen::Index k = 1; k <= m; ++k) {
        Eigen::Index best = -1;
        double best_dist = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (used[static_cast<std::size_t>(i)]) continue;
            const double dist = (mu - (running_sum + features[static_cast<std::size_t>(i)]) /
                                          static_cast<double>(k))
                                    .norm();
            if (best < 0 || dist < best_dist) {
                best = i;
                best_dist = dist;
            }
        }
        used[static_cast<std::size_t>(best)] = true;
        running_sum += features[static_cast<std::size_t>(best)];
        selected.push_back(best);
    }
    return selected;
}

std::vector<Eigen::Index> random_select(Eigen::Index n, Eigen::Index m, std::uint64_t seed) {
    CIL_CHECK_ARG(n >= 0 && m >= 0 && m <= n, "cannot select more exemplars than samples");
    std::vector<Eigen::Index> indices(static_cast<std::size_t>(n));
    std::iota(indices.begin(), indices.end(), Eigen::Index{0});
    Rng rng = make_rng(seed);
    // Partial Fisher-Yates; only the first m slots are needed.
    for (Eigen::Index i = 0; i < m; ++i) {
        std::uniform_int_distribution<Eigen::Index> dist(i, n - 1);
        std::swap(indices[static_cast<std::size_t>(i)],
                  indices[static_cast<std::size_t>(dist(rng))]);
    }
    indices.resize(static_cast<std::size_t>(m));
    return indices;
}

ExemplarMemory::ExemplarMemory(Eigen::Index budget, Strategy strategy)
    : budget_(budget), strategy_(strategy) {
    CIL_CHECK_ARG(budget >= 1, "memory budget must be positive");
}

void ExemplarMemory::rebalance(const std::vector<ClassCandidates>& new_classes,
                               std::uint64_t seed) {
    for (const auto& cand : new_classes)
        CIL_CHECK_ARG(per_class_.find(cand.label) == per_class_.end(),
                      "class " + std::to_string(cand.label) + " already stored");

    const Eigen::Index total = class_count() + static_cast<Eigen::Index>(new_classes.size());
    if (total == 0) return;
    const Eigen::Index quota = budget_ / total;
    const Eigen::Index remainder = budget_ % total;
    if (quota == 0)
        throw ConfigError("memory budget " + std::to_string(budget_) + " too small for " +
                          std::to_string(total) + " classes");

    // Labels in ascending order; the first `remainder` get one extra slot.
    std::vector<int> labels;
    for (const auto& [label, ids] : per_class_) labels.push_back(label);
    for (const auto& cand : new_classes) labels.push_back(cand.label);
    std::sort(labels.begin(), labels.end());
    std::map<int, Eigen::Index> quotas;
    for (std::size_t i = 0; i < labels.size(); ++i)
        quotas[labels[i]] = quota + (static_cast<Eigen::Index>(i) < remainder ? 1 : 0);

    for (auto& [label, ids] : per_class_) {
        const auto q = static_cast<std::size_t>(quotas[label]);
        if (ids.size() > q) ids.resize(q);
    }

    for (const auto& cand : new_classes) {
        CIL_CHECK_ARG(cand.sample_ids.size() == cand.features.size(),
                      "sample ids and features must be parallel");
        CIL_CHECK_ARG(!cand.sample_ids.empty(),
                      "no candidates for class " + std::to_string(cand.label));
        const Eigen::Index want =
            std::min(quotas[cand.label], static_cast<Eigen::Index>(cand.sample_ids.size()));
        std::vector<Eigen::Index> order;
        if (strategy_ == Strategy::herding) {
            order = herding_select(cand.features, want);
        } else {
            order = random_select(static_cast<Eigen::Index>(cand.sample_ids.size()), want,
                                  derive_seed(seed, "class", static_cast<std::uint64_t>(
                                                                static_cast<unsigned>(cand.label))));
        }
        std::vector<Eigen::Index>& stored = per_class_[cand.label];
        for (Eigen::Index idx : order)
            stored.push_back(cand.sample_ids[static_cast<std::size_t>(idx)]);
    }
}

Eigen::Index ExemplarMemory::total_stored() const {
    Eigen::Index n = 0;
    for (const auto& [label, ids] : per_class_) n += static_cast<Eigen::Index>(ids.size());
    return n;
}

namespace {
constexpr const char* kManifestFormat = "cil-memory-v1";
}

void ExemplarMemory::save_manifest(const std::filesystem::path& path) const {
    Json j;
    j["format"] = kManifestFormat;
    j["budget"] = budget_;
    j["strategy"] = strategy_ == Strategy::herding ? "herding" : "random";
    Json classes = Json::object();
    for (const auto& [label, ids] : per_class_) classes[std::to_string(label)] = ids;
    j["per_class"] = std::move(classes);

    std::ofstream out(path);
    if (!out) throw Error("cannot write memory manifest " + path.string());
    out << j.dump(1) << '\n';
}

ExemplarMemory ExemplarMemory::load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open memory manifest " + path.string());
    Json j;
    try {
        in >> j;
    } catch (const Json::parse_error& e) {
        throw Error("malformed memory manifest " + path.string() + ": " + e.what());
    }
    if (!j.contains("format") || j["format"] != kManifestFormat)
        throw Error("unrecognized memory manifest format in " + path.string());

    const std::string strat = j.at("strategy").get<std::string>();
    ExemplarMemory mem(j.at("budget").get<Eigen::Index>(),
                       strat == "random" ? Strategy::random : Strategy::herding);
    for (const auto& [key, ids] : j.at("per_class").items())
        mem.per_class_[std::stoi(key)] = ids.get<std::vector<Eigen::Index>>();
    return mem;
}

std::vector<std::pair<Eigen::Index, int>> training_pool(
    const ExemplarMemory& memory, const std::vector<std::pair<Eigen::Index, int>>& new_data) {
    std::vector<std::pair<Eigen::Index, int>> pool;
    pool.reserve(static_cast<std::size_t>(memory.total_stored()) + new_data.size());
    for (const auto& [label, ids] : memory.per_class())
        for (Eigen::Index id : ids) pool.emplace_back(id, label);
    pool.insert(pool.end(), new_data.begin(), new_data.end());
    return pool;
}

}  // namespace cil
