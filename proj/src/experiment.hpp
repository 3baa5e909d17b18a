#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evaluation.hpp"
#include "ga.hpp"

namespace nmfs {

/// Declarative description of one experiment grid: a task, a list of noise
/// rates, a list of losses, and a replicate count, plus every tunable of the
/// GA and the loss. Parsed from `key = value` text; unknown keys are hard
/// errors so typos in sweeps cannot pass silently.
struct ExperimentConfig {
    std::string task = "synthA";  // synthA | synthB | csv
    std::string csv_path;
    std::string label_column;
    std::string positive_label;
    int noise_features = 300;
    bool standardize = true;  // z-score csv features before noise augmentation
    int n_per_class = 100;
    std::vector<double> noise_rates = {0.1};
    std::vector<LossKind> losses = {LossKind::CWD};
    int replicates = 1;
    std::uint64_t seed = 0;
    std::string out_dir = "results";
    std::int64_t mc_samples = 10000000;
    int mc_shards = 16;
    int eval_cv_folds = 10;
    GaConfig ga;
    // Empty means each cell assumes its own injected rate (the known-rate
    // setting); a value fixes the assumption across the whole grid.
    std::optional<double> assumed_noise_rate;
    bool fast_preset = false;

    static ExperimentConfig from_file(const std::string& path);

    /// Applies one `key = value` assignment; throws on unknown keys or
    /// unparsable values.
    void apply_kv(const std::string& key, const std::string& value);

    /// Desk-scale preset: G=200, C=60, M=2, MC=1e6.
    void apply_fast_preset();

    void validate() const;

    /// Every resolved setting as canonical strings; embedded in artifacts so
    /// any cell can be rerun from its JSON alone.
    std::map<std::string, std::string> echo() const;

    int n_cells() const {
        return static_cast<int>(noise_rates.size() * losses.size()) * replicates;
    }
};

/// Runs one grid cell: inject label noise at noise_rates[rate_index], run the
/// GA with losses[loss_index], select the final subset, and evaluate it
/// (PCC oracles for synthetic tasks, clean-label CV metrics for csv).
/// Deterministic in (config, indices); n_threads only parallelizes inner
/// evaluation work.
ExperimentResult run_cell(const ExperimentConfig& config, int rate_index, int loss_index,
                          int replicate, int n_threads = 1);

/// Writes the task's dataset CSV plus a provenance sidecar JSON into
/// config.out_dir. Byte-identical for identical configs. Returns an exit
/// code: 0 on success.
int cmd_generate(const ExperimentConfig& config);

/// Runs the whole grid with at most `workers` concurrent cells, writing one
/// JSON per cell plus cells.csv and aggregate.csv (atomic writes, canonical
/// order, no volatile fields). Returns 0 if every cell succeeded, 2 if some
/// failed.
int cmd_run(const ExperimentConfig& config, int workers);

/// Reads every cell_*.json under result_dir and renders the grid as a text
/// table and a CSV (rows = noise rates, columns = losses, cells = mean, sd
/// across replicates), written to report.txt / report.csv in the same
/// directory. Failed cells render as ERR. Returns 0, or 1 when the directory
/// has no cells or any cell failed. When `rendered` is non-null the text
/// table is also stored there.
int cmd_report(const std::string& result_dir, std::string* rendered = nullptr);

}  // namespace nmfs
