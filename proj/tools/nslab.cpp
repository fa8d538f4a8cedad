#include "nslab/errors.hpp"
#include "nslab/experiment.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

enum Exit { kOk = 0, kConfig = 2, kMissingInput = 3, kNumeric = 4 };

struct GlobalOptions {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::size_t> jobs;
    bool paper_scale = false;
};

nslab::ExperimentConfig resolve(const GlobalOptions& g) {
    nslab::ExperimentConfig cfg = g.config.empty() ? nslab::ExperimentConfig{} : nslab::load_config(g.config);
    if (g.paper_scale) cfg.apply_paper_scale();
    if (g.seed) cfg.seed = *g.seed;
    if (g.out) cfg.out = *g.out;
    if (const char* env = std::getenv("NSLAB_OUT"); env && *env) cfg.out = env;
    if (g.jobs) cfg.jobs = *g.jobs;
    cfg.validate();
    return cfg;
}

int run_all(const nslab::ExperimentConfig& cfg) {
    for (auto* step : {nslab::cmd_gen_data, nslab::cmd_train, nslab::cmd_analyze, nslab::cmd_fit_channels,
                       nslab::cmd_predict, nslab::cmd_report})
        if (int rc = step(cfg)) return rc;
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Nonsmoothness laboratory: synthetic videos, autoencoders, SMP channel models"};
    app.set_version_flag("--version", nslab::kToolVersion);
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config, "key=value config file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "master seed (overrides config)");
    app.add_option("--out", g.out, "output directory (NSLAB_OUT takes precedence)");
    app.add_option("--jobs", g.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_flag("--paper-scale", g.paper_scale, "restore full dataset and realization counts");

    using Cmd = int (*)(const nslab::ExperimentConfig&);
    const std::vector<std::tuple<std::string, std::string, Cmd>> commands{
        {"gen-data", "generate training images and test videos", nslab::cmd_gen_data},
        {"train", "train every setup and realization", nslab::cmd_train},
        {"analyze", "AveNonSmooth of originals and reconstructions", nslab::cmd_analyze},
        {"fit-channels", "fit ReLU and max-pool channel models on the default video", nslab::cmd_fit_channels},
        {"predict", "conv R^2, weight correlation and Monte Carlo prediction", nslab::cmd_predict},
        {"report", "validate tables and write the manifest", nslab::cmd_report},
        {"all", "run every step in order", run_all},
    };
    Cmd chosen = nullptr;
    for (const auto& [name, help, fn] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->callback([&chosen, fn = fn] { chosen = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        return chosen(resolve(g));
    } catch (const nslab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfig;
    } catch (const nslab::MissingInputError& e) {
        std::cerr << e.what() << "\n";
        return kMissingInput;
    } catch (const nslab::FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kMissingInput;
    } catch (const nslab::ValidationError& e) {
        std::cerr << "validation failed: " << e.what() << "\n";
        return kMissingInput;
    } catch (const nslab::TrainingError& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return kNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kNumeric;
    }
}
