#include <cstdint>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "nmfsga/nmfsga.h"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    bool out_set = false;
    bool fast = false;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
    auto* config = cmd->add_option("--config", opts.config_path, "experiment config file");
    if (config_required) config->required();
    cmd->add_option("--seed", opts.seed, "master seed override")
        ->each([&opts](const std::string&) { opts.seed_set = true; });
    cmd->add_option("--out", opts.out_dir, "output directory override")
        ->each([&opts](const std::string&) { opts.out_set = true; });
    cmd->add_flag("--fast", opts.fast, "desk-scale preset (G=200, C=60, M=2, MC=1e6)");
}

int fail_with(const char* context) {
    std::fprintf(stderr, "nmfs: %s: %s\n", context, nmfs_last_error());
    return 1;
}

nmfs_experiment* load_config(const CommonOpts& opts) {
    nmfs_experiment* cfg = nullptr;
    if (nmfs_experiment_load(opts.config_path.c_str(), &cfg) != NMFS_OK) {
        fail_with("config");
        return nullptr;
    }
    if (opts.seed_set &&
        nmfs_experiment_set(cfg, "seed", std::to_string(opts.seed).c_str()) != NMFS_OK) {
        fail_with("--seed");
        nmfs_experiment_free(cfg);
        return nullptr;
    }
    if (opts.out_set && nmfs_experiment_set(cfg, "out_dir", opts.out_dir.c_str()) != NMFS_OK) {
        fail_with("--out");
        nmfs_experiment_free(cfg);
        return nullptr;
    }
    if (opts.fast && nmfs_experiment_fast_preset(cfg) != NMFS_OK) {
        fail_with("--fast");
        nmfs_experiment_free(cfg);
        return nullptr;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nmfs: noise-aware multi-objective feature selection experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(nmfs_version()));

    CommonOpts generate_opts;
    auto* generate = app.add_subcommand("generate", "write the task's dataset plus provenance");
    add_common(generate, generate_opts, true);

    CommonOpts run_opts;
    int workers = 1;
    auto* run = app.add_subcommand("run", "run the experiment grid");
    add_common(run, run_opts, true);
    run->add_option("--workers", workers, "maximum concurrent cells")->check(CLI::PositiveNumber);

    CommonOpts report_opts;
    auto* report = app.add_subcommand("report", "render tables from a result directory");
    add_common(report, report_opts, false);

    CLI11_PARSE(app, argc, argv);

    if (generate->parsed()) {
        nmfs_experiment* cfg = load_config(generate_opts);
        if (!cfg) return 1;
        const nmfs_status status = nmfs_cmd_generate(cfg);
        nmfs_experiment_free(cfg);
        if (status != NMFS_OK) return fail_with("generate");
        return 0;
    }

    if (run->parsed()) {
        nmfs_experiment* cfg = load_config(run_opts);
        if (!cfg) return 1;
        const nmfs_status status = nmfs_cmd_run(cfg, workers);
        nmfs_experiment_free(cfg);
        if (status == NMFS_OK) return 0;
        if (status == NMFS_ERR_PARTIAL) {
            std::fprintf(stderr, "nmfs: run: %s\n", nmfs_last_error());
            return 2;
        }
        return fail_with("run");
    }

    if (report->parsed()) {
        std::string dir = report_opts.out_dir;
        if (dir.empty()) {
            if (report_opts.config_path.empty()) {
                std::fprintf(stderr, "nmfs: report: pass --out DIR or --config FILE\n");
                return 1;
            }
            nmfs_experiment* cfg = load_config(report_opts);
            if (!cfg) return 1;
            char* configured = nullptr;
            const nmfs_status status = nmfs_experiment_get(cfg, "out_dir", &configured);
            nmfs_experiment_free(cfg);
            if (status != NMFS_OK) return fail_with("report");
            dir = configured;
            nmfs_string_free(configured);
        }
        char* table = nullptr;
        const nmfs_status status = nmfs_cmd_report(dir.c_str(), &table);
        if (table) {
            std::fputs(table, stdout);
            nmfs_string_free(table);
        }
        if (status == NMFS_OK) return 0;
        if (status == NMFS_ERR_PARTIAL) return 2;
        return fail_with("report");
    }

    return 1;
}
