#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cil/config.hpp"
#include "cil/driver.hpp"
#include "cil/errors.hpp"
#include "cil/metrics.hpp"
#include "cil/plotting.hpp"
#include "cil/run_store.hpp"

namespace {

cil::Json read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw cil::ConfigError("config file not found or unreadable: " + path.string());
    try {
        return cil::Json::parse(in);
    } catch (const cil::Json::parse_error& e) {
        throw cil::ConfigError("config " + path.string() + ": " + e.what());
    }
}

struct RunOptions {
    std::string config_path;
    std::string preset_name;
    std::string output;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
};

int command_run(const RunOptions& opt) {
    if (opt.config_path.empty() == opt.preset_name.empty())
        throw cil::ConfigError("run needs exactly one of --config or --preset");

    cil::Json raw = opt.preset_name.empty()
                        ? read_config_file(opt.config_path)
                        : cil::config_to_json(cil::preset(opt.preset_name));
    for (const std::string& assignment : opt.overrides) cil::apply_override(raw, assignment);
    if (opt.seed) raw["seed"] = *opt.seed;
    if (!opt.output.empty()) raw["output"] = opt.output;

    const cil::ExperimentConfig config = cil::config_from_json(raw);
    const cil::Json resolved = cil::config_to_json(config);

    const cil::Dataset dataset = cil::load_dataset(config.dataset, config.seed);
    const cil::TaskSchedule schedule =
        cil::make_schedule(config.schedule, dataset.num_labels, config.seed);

    cil::RunStore store = cil::RunStore::create(config.output, resolved);
    const auto total = schedule.total_steps();

    const cil::ExperimentResult result = cil::run_experiment(
        dataset, schedule, config.variation, config.train, config.model, config.memory,
        config.seed, [&](const cil::StepArtifacts& artifacts) {
            store.record_step(artifacts);
            const cil::StepMetrics& m = artifacts.metrics;
            std::printf("step %d/%ld  seen=%ld  top1=%.4f  top5=%.4f", m.step,
                        static_cast<long>(total), static_cast<long>(m.seen_classes), m.top1,
                        m.top5);
            if (m.norms.gamma) std::printf("  gamma=%.4f", *m.norms.gamma);
            std::printf("\n");
            std::fflush(stdout);
        });

    store.finalize(result);
    std::cout << cil::render_summary_table(result.summary);
    std::cout << "run directory: " << store.dir().string() << "\n";
    return 0;
}

int command_analyze(const std::filesystem::path& dir) {
    const std::vector<cil::StepMetrics> steps = cil::RunStore::load_steps(dir);
    const cil::Summary summary = cil::summarize(steps);
    cil::write_metrics_csv(steps, cil::RunStore::metrics_csv_path(dir));
    cil::write_summary_csv(summary, cil::RunStore::summary_csv_path(dir));
    std::cout << cil::render_summary_table(summary);
    return 0;
}

int command_plot(const std::filesystem::path& dir) {
    const std::vector<cil::StepMetrics> steps = cil::RunStore::load_steps(dir);
    std::vector<std::filesystem::path> files = cil::norm_plot(steps, cil::RunStore::figures_dir(dir));
    std::vector<std::filesystem::path> confusion =
        cil::confusion_plot(steps, cil::RunStore::figures_dir(dir));
    files.insert(files.end(), confusion.begin(), confusion.end());
    for (const auto& f : files) std::cout << "wrote " << f.string() << "\n";
    return 0;
}

int command_preset_list() {
    const std::vector<std::pair<std::string, std::string>> blurbs = {
        {"variation1", "cross-entropy only"},
        {"variation2", "cross-entropy + weight aligning"},
        {"variation3", "cross-entropy + distillation"},
        {"variation4", "cross-entropy + distillation + weight normalization layer"},
        {"ours", "cross-entropy + distillation + weight aligning"},
        {"upper_bound", "joint training on all classes in one step"},
    };
    for (const auto& [name, blurb] : blurbs) std::printf("%-12s %s\n", name.c_str(), blurb.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Class-incremental learning experiments with distillation and head correction"};
    app.require_subcommand(1);

    RunOptions run_opt;
    CLI::App* run = app.add_subcommand("run", "Train an incremental run from a config or preset");
    run->add_option("--config", run_opt.config_path, "Path to a JSON experiment config");
    run->add_option("--preset", run_opt.preset_name, "Named preset (see preset-list)");
    run->add_option("--seed", run_opt.seed, "Global seed (overrides the config)");
    run->add_option("--output", run_opt.output, "Run directory (overrides the config)");
    run->add_option("--override", run_opt.overrides,
                    "Config override as dotted.path=value (repeatable)");

    std::string analyze_dir;
    CLI::App* analyze =
        app.add_subcommand("analyze", "Recompute summary tables from a finished run directory");
    analyze->add_option("dir", analyze_dir, "Run directory")->required();

    std::string plot_dir;
    CLI::App* plot =
        app.add_subcommand("plot", "Render norm and confusion figures from a run directory");
    plot->add_option("dir", plot_dir, "Run directory")->required();

    CLI::App* preset_list = app.add_subcommand("preset-list", "List the named presets");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return command_run(run_opt);
        if (analyze->parsed()) return command_analyze(analyze_dir);
        if (plot->parsed()) return command_plot(plot_dir);
        if (preset_list->parsed()) return command_preset_list();
        return 1;
    } catch (const cil::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
