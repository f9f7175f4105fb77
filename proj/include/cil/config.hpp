#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cil/dataset.hpp"
#include "cil/driver.hpp"
#include "cil/serialize.hpp"

namespace cil {

// Which dataset a run trains on and how to obtain it.  Synthetic runs carry
// generator parameters; image runs carry the directory with the canonical
// binary files.  When no explicit dataset seed is given the generator seed is
// derived from the run's global seed.
struct DatasetSpec {
    DatasetKind kind = DatasetKind::synthetic;
    SyntheticSpec synthetic;
    std::optional<std::uint64_t> synthetic_seed;
    std::string root;  // cifar100 only

    // Number of labels the dataset provides (before any schedule subsetting).
    int label_count() const;
    void validate() const;
};

// How the label universe is carved into incremental batches.  The class order
// is a seeded-random permutation by default; an explicit order pins it for
// reproduction runs.  The schedule uses the first sum(classes_per_step)
// entries of the order.
struct ScheduleSpec {
    std::vector<Eigen::Index> classes_per_step = {2, 2, 2, 2, 2};
    std::optional<std::vector<int>> class_order;
    std::optional<std::uint64_t> order_seed;

    Eigen::Index total_classes() const;
    void validate() const;
};

// Everything a run needs.  parse_config fills unspecified fields with the
// defaults below, so a minimal file only names a dataset and a schedule.
struct ExperimentConfig {
    DatasetSpec dataset;
    ScheduleSpec schedule;
    VariationSpec variation = variation_preset_default();
    TrainConfig train = TrainConfig::desk_default();
    ModelSpec model;
    MemorySpec memory;
    std::string output = "runs/latest";
    std::uint64_t seed = 1;

    void validate() const;

    static VariationSpec variation_preset_default();
};

// Strict schema: unknown keys are rejected with the offending field path, and
// every value is type- and range-checked before the run starts.
ExperimentConfig config_from_json(const Json& j);
Json config_to_json(const ExperimentConfig& config);
ExperimentConfig parse_config(const std::filesystem::path& path);

// Applies one "dotted.path=value" override onto a raw config document before
// validation; values parse as JSON when possible and as strings otherwise.
void apply_override(Json& j, const std::string& assignment);

// Named method variants (what to train with and whether to correct the head).
VariationSpec variation_preset(const std::string& name);

// Full desk-scale run configurations for each documented preset name.
ExperimentConfig preset(const std::string& name);
const std::vector<std::string>& preset_names();

// Materialization: config pieces -> runtime objects.
Dataset load_dataset(const DatasetSpec& spec, std::uint64_t global_seed);
TaskSchedule make_schedule(const ScheduleSpec& spec, int label_count, std::uint64_t global_seed);

}  // namespace cil
