#include "cil/run_store.hpp"

#include <cstdio>
#include <fstream>

#include "cil/errors.hpp"

namespace cil {

namespace fs = std::filesystem;

RunStore::RunStore(fs::path dir) : dir_(std::move(dir)) {}

RunStore RunStore::create(const fs::path& dir, const Json& resolved_config) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create run directory " + dir.string() + ": " + ec.message());
    fs::create_directories(dir / "checkpoints", ec);
    if (!ec) fs::create_directories(figures_dir(dir), ec);
    if (ec) throw Error("cannot create run directory " + dir.string() + ": " + ec.message());

    // Exclusive-create the lock so two writers cannot share a directory.
    const fs::path lock = lock_path(dir);
    std::FILE* f = std::fopen(lock.string().c_str(), "wx");
    if (!f)
        throw ProtocolError("run directory " + dir.string() + " is locked (found " +
                            lock.string() + "); remove the lock file if a previous run crashed");
    std::fputs("locked\n", f);
    std::fclose(f);

    RunStore store(dir);
    store.locked_ = true;

    std::ofstream out(config_path(dir));
    if (!out) throw Error("cannot write " + config_path(dir).string());
    out << resolved_config.dump(2) << "\n";
    return store;
}

RunStore::RunStore(RunStore&& other) noexcept : dir_(std::move(other.dir_)), locked_(other.locked_) {
    other.locked_ = false;
}

RunStore::~RunStore() {
    if (locked_) {
        std::error_code ec;
        fs::remove(lock_path(dir_), ec);
    }
}

fs::path RunStore::config_path(const fs::path& dir) { return dir / "config.lock"; }
fs::path RunStore::lock_path(const fs::path& dir) { return dir / ".lock"; }
fs::path RunStore::step_metrics_path(const fs::path& dir, int step) {
    return dir / ("metrics_step" + std::to_string(step) + ".json");
}
fs::path RunStore::model_path(const fs::path& dir, int step) {
    return dir / "checkpoints" / ("model_step" + std::to_string(step) + ".json");
}
fs::path RunStore::memory_path(const fs::path& dir, int step) {
    return dir / "checkpoints" / ("memory_step" + std::to_string(step) + ".json");
}
fs::path RunStore::metrics_csv_path(const fs::path& dir) { return dir / "metrics.csv"; }
fs::path RunStore::summary_csv_path(const fs::path& dir) { return dir / "summary.csv"; }
fs::path RunStore::figures_dir(const fs::path& dir) { return dir / "figures"; }

void RunStore::record_step(const StepArtifacts& artifacts) {
    const int step = artifacts.metrics.step;
    {
        std::ofstream out(step_metrics_path(dir_, step));
        if (!out) throw Error("cannot write " + step_metrics_path(dir_, step).string());
        out << step_metrics_to_json(artifacts.metrics).dump(2) << "\n";
    }
    save_checkpoint(artifacts.model, model_path(dir_, step));
    artifacts.memory.save_manifest(memory_path(dir_, step));
}

void RunStore::finalize(const ExperimentResult& result) {
    write_metrics_csv(result.steps, metrics_csv_path(dir_));
    write_summary_csv(result.summary, summary_csv_path(dir_));
}

Json RunStore::load_config(const fs::path& dir) {
    const fs::path path = config_path(dir);
    std::ifstream in(path);
    if (!in)
        throw ProtocolError("run directory " + dir.string() + " has no config copy; expected " +
                            path.string());
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw Error("corrupt config copy " + path.string() + ": " + e.what());
    }
}

std::vector<StepMetrics> RunStore::load_steps(const fs::path& dir) {
    std::vector<StepMetrics> steps;
    for (int b = 1;; ++b) {
        const fs::path path = step_metrics_path(dir, b);
        std::ifstream in(path);
        if (!in) break;
        Json j;
        try {
            j = Json::parse(in);
        } catch (const Json::parse_error& e) {
            throw Error("corrupt metrics record " + path.string() + ": " + e.what());
        }
        steps.push_back(step_metrics_from_json(j));
    }
    if (steps.empty())
        throw ProtocolError("no step metrics in " + dir.string() + "; expected " +
                            step_metrics_path(dir, 1).string());
    return steps;
}

}  // namespace cil
