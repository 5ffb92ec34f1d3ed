// mortenv: spatially smoothed weekly mortality baseline + environmental
// gradient boosting, with interpretation, harvesting, and backtesting
// subcommands. Exit codes: 0 success, 1 validation error, 2 numerical
// failure.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mortenv/pipeline.hpp"

namespace {

void write_error_file(const std::string& out_dir, const std::string& subcommand,
                      const std::string& kind, const std::string& message) {
    try {
        std::filesystem::create_directories(out_dir);
        nlohmann::json error;
        error["subcommand"] = subcommand;
        error["kind"] = kind;
        error["message"] = message;
        std::ofstream out(out_dir + "/error.json");
        out << error.dump(2) << "\n";
    } catch (...) {
        // The diagnostic file is best effort; the exit code is the contract.
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weekly mortality baseline + environmental boosting pipeline"};
    app.require_subcommand(1);

    std::string config_path;
    int jobs = 0;
    long long seed_override = -1;

    const std::map<std::string, std::function<void(const mortenv::RunConfig&, int)>>
        runners = {
            {"synth", mortenv::pipeline::run_synth},
            {"ingest", mortenv::pipeline::run_ingest},
            {"features", mortenv::pipeline::run_features},
            {"baseline", mortenv::pipeline::run_baseline},
            {"cv", mortenv::pipeline::run_cv},
            {"boost", mortenv::pipeline::run_boost},
            {"interpret", mortenv::pipeline::run_interpret},
            {"harvest", mortenv::pipeline::run_harvest},
            {"backtest", mortenv::pipeline::run_backtest},
        };

    const std::map<std::string, std::string> descriptions = {
        {"synth", "generate a synthetic input fixture with known ground truth"},
        {"ingest", "validate the mortality panel and emit panel.csv"},
        {"features", "engineer the weekly environmental feature matrix"},
        {"baseline", "fit the spatially smoothed weekly baseline"},
        {"cv", "year-fold cross-validation over the boosting grid"},
        {"boost", "fit the offset-aware boosted multiplier model"},
        {"interpret", "feature importance and ALE effects"},
        {"harvest", "excess-death-proportion grids over a feature and its lag"},
        {"backtest", "hold out the final year and compare deviances"},
    };

    for (const auto& [name, runner] : runners) {
        CLI::App* sub = app.add_subcommand(name, descriptions.at(name));
        sub->add_option("--config", config_path, "run configuration file")->required();
        sub->add_option("--jobs", jobs, "worker thread cap (0 = hardware)");
        sub->add_option("--seed", seed_override, "override the config seed");
    }

    CLI11_PARSE(app, argc, argv);
    const std::string subcommand = app.get_subcommands().front()->get_name();

    std::string out_dir = "out";
    try {
        mortenv::RunConfig config = mortenv::RunConfig::from_file(config_path);
        if (seed_override >= 0) config.set("seed", std::to_string(seed_override));
        if (jobs > 0) config.set("jobs", std::to_string(jobs));
        out_dir = config.get("out_dir", "out");
        config.require("seed");
        const int effective_jobs =
            static_cast<int>(config.get_long("jobs", 0));
        runners.at(subcommand)(config, effective_jobs);
        return 0;
    } catch (const mortenv::ValidationError& e) {
        std::fprintf(stderr, "mortenv %s: validation error: %s\n", subcommand.c_str(),
                     e.what());
        write_error_file(out_dir, subcommand, "validation", e.what());
        return 1;
    } catch (const mortenv::NumericError& e) {
        std::fprintf(stderr, "mortenv %s: numerical failure: %s\n", subcommand.c_str(),
                     e.what());
        write_error_file(out_dir, subcommand, "numeric", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "mortenv %s: internal error: %s\n", subcommand.c_str(),
                     e.what());
        write_error_file(out_dir, subcommand, "internal", e.what());
        return 2;
    }
}
