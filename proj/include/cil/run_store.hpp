#pragma once

#include <filesystem>
#include <vector>

#include "cil/driver.hpp"
#include "cil/metrics.hpp"
#include "cil/serialize.hpp"

namespace cil {

// Owns a run directory: resolved config copy, one metrics record and one
// checkpoint per step, aggregate CSVs, and figures. A lock file guards the
// directory against concurrent writers; the lock is released when the store
// is destroyed. The directory is self-describing — analyze/plot work from it
// alone.
class RunStore {
public:
    static RunStore create(const std::filesystem::path& dir, const Json& resolved_config);

    RunStore(RunStore&& other) noexcept;
    RunStore& operator=(RunStore&&) = delete;
    RunStore(const RunStore&) = delete;
    RunStore& operator=(const RunStore&) = delete;
    ~RunStore();

    const std::filesystem::path& dir() const { return dir_; }

    void record_step(const StepArtifacts& artifacts);
    void finalize(const ExperimentResult& result);

    // Layout helpers (shared by the writer and the read-only commands).
    static std::filesystem::path config_path(const std::filesystem::path& dir);
    static std::filesystem::path lock_path(const std::filesystem::path& dir);
    static std::filesystem::path step_metrics_path(const std::filesystem::path& dir, int step);
    static std::filesystem::path model_path(const std::filesystem::path& dir, int step);
    static std::filesystem::path memory_path(const std::filesystem::path& dir, int step);
    static std::filesystem::path metrics_csv_path(const std::filesystem::path& dir);
    static std::filesystem::path summary_csv_path(const std::filesystem::path& dir);
    static std::filesystem::path figures_dir(const std::filesystem::path& dir);

    // Read side for analyze/plot; missing artifacts raise errors naming the
    // expected file.
    static Json load_config(const std::filesystem::path& dir);
    static std::vector<StepMetrics> load_steps(const std::filesystem::path& dir);

private:
    explicit RunStore(std::filesystem::path dir);

    std::filesystem::path dir_;
    bool locked_ = false;
};

}  // namespace cil
