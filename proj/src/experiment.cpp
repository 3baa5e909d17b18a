#include "experiment.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <json.hpp>

#include "lda.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "textio.hpp"

namespace fs = std::filesystem;

namespace nmfs {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

double parse_double(const std::string& value) {
    const std::string v = trim(value);
    double out = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("not a number: '" + value + "'");
    return out;
}

long long parse_int(const std::string& value) {
    const std::string v = trim(value);
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("not an integer: '" + value + "'");
    return out;
}

std::uint64_t parse_u64(const std::string& value) {
    const std::string v = trim(value);
    std::uint64_t out = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size())
        throw std::invalid_argument("not an unsigned integer: '" + value + "'");
    return out;
}

bool parse_bool(const std::string& value) {
    const std::string v = trim(value);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("not a boolean: '" + value + "'");
}

std::vector<std::string> split_list(const std::string& value) {
    std::vector<std::string> items;
    std::string cur;
    for (char c : value) {
        if (c == ',') {
            items.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    items.push_back(trim(cur));
    for (const auto& item : items)
        if (item.empty()) throw std::invalid_argument("empty element in list: '" + value + "'");
    return items;
}

std::uint64_t task_tag(const std::string& task) {
    if (task == "synthA") return 1;
    if (task == "synthB") return 2;
    if (task == "csv") return 3;
    throw std::invalid_argument("unknown task: '" + task + "'");
}

void standardize_columns(Dataset& ds) {
    for (int j = 0; j < ds.cols(); ++j) {
        auto col = ds.features.col(j);
        const double mu = col.mean();
        col.array() -= mu;
        const double sd = ds.rows() > 1 ? std::sqrt(col.squaredNorm() / (ds.rows() - 1)) : 0.0;
        if (sd > 0.0) col /= sd;
    }
}

Eigen::MatrixXd masked_columns(const Dataset& ds, const Chromosome& mask) {
    std::vector<int> cols;
    for (int j = 0; j < ds.cols(); ++j)
        if (mask[j]) cols.push_back(j);
    Eigen::MatrixXd x(ds.rows(), cols.size());
    for (std::size_t c = 0; c < cols.size(); ++c) x.col(c) = ds.features.col(cols[c]);
    return x;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string sanitize_csv_field(std::string text) {
    for (char& c : text)
        if (c == ',' || c == '\n' || c == '\r') c = ';';
    return text;
}

std::string cell_file_name(const ExperimentConfig& cfg, int rate_index, int loss_index,
                           int replicate) {
    char buf[128];
    std::snprintf(buf, sizeof(buf), "cell_r%d_%s_rep%d.json", rate_index,
                  loss_kind_name(cfg.losses[loss_index]).c_str(), replicate);
    return buf;
}

std::uint64_t cell_seed_of(const ExperimentConfig& cfg, int rate_index, int loss_index,
                           int replicate) {
    return derive_seed(cfg.seed,
                       {task_tag(cfg.task), static_cast<std::uint64_t>(rate_index),
                        static_cast<std::uint64_t>(loss_index),
                        static_cast<std::uint64_t>(replicate)});
}

std::map<std::string, std::string> cell_echo(const ExperimentConfig& cfg, int rate_index,
                                             int loss_index, int replicate) {
    auto echo = cfg.echo();
    echo["cell.noise_rate"] = format_double(cfg.noise_rates[rate_index]);
    echo["cell.loss"] = loss_kind_name(cfg.losses[loss_index]);
    echo["cell.replicate"] = std::to_string(replicate);
    echo["cell.seed"] = std::to_string(cell_seed_of(cfg, rate_index, loss_index, replicate));
    return echo;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open config: " + path);
    ExperimentConfig cfg;
    std::string line;
    int line_no = 0;
    std::vector<std::string> seen;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string stripped = trim(line);
        if (stripped.empty()) continue;
        const auto eq = stripped.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": expected 'key = value'");
        const std::string key = trim(stripped.substr(0, eq));
        const std::string value = trim(stripped.substr(eq + 1));
        if (key.empty() || value.empty())
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": empty key or value");
        if (std::find(seen.begin(), seen.end(), key) != seen.end())
            throw std::invalid_argument("config line " + std::to_string(line_no) +
                                        ": duplicate key '" + key + "'");
        seen.push_back(key);
        try {
            cfg.apply_kv(key, value);
        } catch (const std::exception& e) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": " +
                                        e.what());
        }
    }
    return cfg;
}

void ExperimentConfig::apply_kv(const std::string& key, const std::string& value) {
    if (key == "task") {
        task_tag(value);  // rejects unknown names
        task = value;
    } else if (key == "csv_path") {
        csv_path = value;
    } else if (key == "label_column") {
        label_column = value;
    } else if (key == "positive_label") {
        positive_label = value;
    } else if (key == "noise_features") {
        noise_features = static_cast<int>(parse_int(value));
    } else if (key == "standardize") {
        standardize = parse_bool(value);
    } else if (key == "n_per_class") {
        n_per_class = static_cast<int>(parse_int(value));
    } else if (key == "noise_rates") {
        noise_rates.clear();
        for (const auto& item : split_list(value)) noise_rates.push_back(parse_double(item));
    } else if (key == "losses") {
        losses.clear();
        for (const auto& item : split_list(value)) losses.push_back(parse_loss_kind(item));
    } else if (key == "replicates") {
        replicates = static_cast<int>(parse_int(value));
    } else if (key == "seed") {
        seed = parse_u64(value);
    } else if (key == "out_dir") {
        out_dir = value;
    } else if (key == "mc_samples") {
        mc_samples = parse_int(value);
    } else if (key == "mc_shards") {
        mc_shards = static_cast<int>(parse_int(value));
    } else if (key == "eval_cv_folds") {
        eval_cv_folds = static_cast<int>(parse_int(value));
    } else if (key == "ga.population_per_niche") {
        ga.population_per_niche = static_cast<int>(parse_int(value));
    } else if (key == "ga.niches") {
        ga.niches = static_cast<int>(parse_int(value));
    } else if (key == "ga.generations") {
        ga.generations = static_cast<int>(parse_int(value));
    } else if (key == "ga.crossover_rate") {
        ga.crossover_rate = parse_double(value);
    } else if (key == "ga.mutation_rate") {
        ga.mutation_rate = parse_double(value);
    } else if (key == "ga.crossover_probability") {
        ga.crossover_probability = parse_double(value);
    } else if (key == "ga.init_density") {
        ga.init_density = parse_double(value);
    } else if (key == "ga.migration_interval_fraction") {
        ga.migration_interval_fraction = parse_double(value);
    } else if (key == "ga.migration_fraction") {
        ga.migration_fraction = parse_double(value);
    } else if (key == "ga.cv_folds") {
        ga.cv_folds = static_cast<int>(parse_int(value));
    } else if (key == "ga.shrinkage") {
        ga.shrinkage = parse_double(value);
    } else if (key == "loss.alpha") {
        ga.loss.alpha = parse_double(value);
    } else if (key == "loss.beta") {
        ga.loss.beta = parse_double(value);
    } else if (key == "loss.q") {
        ga.loss.q = parse_double(value);
    } else if (key == "loss.Q") {
        ga.loss.cwd_q = parse_double(value);
    } else if (key == "loss.assumed_noise_rate") {
        if (value == "track")
            assumed_noise_rate.reset();
        else
            assumed_noise_rate = parse_double(value);
    } else if (key == "loss.peer_sampled") {
        ga.loss.peer_sampled = parse_bool(value);
    } else {
        throw std::invalid_argument("unknown config key: '" + key + "'");
    }
}

void ExperimentConfig::apply_fast_preset() {
    fast_preset = true;
    ga.generations = 200;
    ga.population_per_niche = 60;
    ga.niches = 2;
    mc_samples = 1000000;
}

void ExperimentConfig::validate() const {
    task_tag(task);
    if (task == "csv") {
        if (csv_path.empty() || label_column.empty() || positive_label.empty())
            throw std::invalid_argument(
                "csv task requires csv_path, label_column and positive_label");
        if (!fs::exists(csv_path))
            throw std::invalid_argument("csv_path does not exist: " + csv_path);
        if (noise_features < 0) throw std::invalid_argument("noise_features must be >= 0");
    } else {
        if (n_per_class < 2) throw std::invalid_argument("n_per_class must be at least 2");
    }
    if (noise_rates.empty()) throw std::invalid_argument("noise_rates must be nonempty");
    for (double rate : noise_rates)
        if (!(rate >= 0.0 && rate < 0.5))
            throw std::invalid_argument("noise rates must lie in [0, 0.5)");
    if (losses.empty()) throw std::invalid_argument("losses must be nonempty");
    if (replicates < 1) throw std::invalid_argument("replicates must be at least 1");
    if (out_dir.empty()) throw std::invalid_argument("out_dir must be nonempty");
    if (mc_samples < 2) throw std::invalid_argument("mc_samples must be at least 2");
    if (mc_shards < 1) throw std::invalid_argument("mc_shards must be positive");
    if (eval_cv_folds < 2) throw std::invalid_argument("eval_cv_folds must be at least 2");
    if (assumed_noise_rate && !(*assumed_noise_rate >= 0.0 && *assumed_noise_rate < 0.5))
        throw std::invalid_argument("loss.assumed_noise_rate must lie in [0, 0.5)");
    GaConfig probe = ga;
    probe.loss.kind = losses.front();
    probe.loss.assumed_noise_rate = assumed_noise_rate.value_or(noise_rates.front());
    probe.validate();
}

std::map<std::string, std::string> ExperimentConfig::echo() const {
    std::map<std::string, std::string> e;
    e["task"] = task;
    e["seed"] = std::to_string(seed);
    e["out_dir"] = out_dir;
    std::string rates;
    for (std::size_t i = 0; i < noise_rates.size(); ++i) {
        if (i) rates += ",";
        rates += format_double(noise_rates[i]);
    }
    e["noise_rates"] = rates;
    std::string loss_names;
    for (std::size_t i = 0; i < losses.size(); ++i) {
        if (i) loss_names += ",";
        loss_names += loss_kind_name(losses[i]);
    }
    e["losses"] = loss_names;
    e["replicates"] = std::to_string(replicates);
    e["n_per_class"] = std::to_string(n_per_class);
    e["mc_samples"] = std::to_string(mc_samples);
    e["mc_shards"] = std::to_string(mc_shards);
    e["eval_cv_folds"] = std::to_string(eval_cv_folds);
    e["csv_path"] = csv_path;
    e["label_column"] = label_column;
    e["positive_label"] = positive_label;
    e["noise_features"] = std::to_string(noise_features);
    e["standardize"] = standardize ? "true" : "false";
    e["fast"] = fast_preset ? "true" : "false";
    e["ga.population_per_niche"] = std::to_string(ga.population_per_niche);
    e["ga.niches"] = std::to_string(ga.niches);
    e["ga.generations"] = std::to_string(ga.generations);
    e["ga.crossover_rate"] = format_double(ga.crossover_rate);
    e["ga.mutation_rate"] = format_double(ga.mutation_rate);
    e["ga.crossover_probability"] = format_double(ga.crossover_probability);
    e["ga.init_density"] = format_double(ga.init_density);
    e["ga.migration_interval_fraction"] = format_double(ga.migration_interval_fraction);
    e["ga.migration_fraction"] = format_double(ga.migration_fraction);
    e["ga.cv_folds"] = std::to_string(ga.cv_folds);
    e["ga.shrinkage"] = format_double(ga.shrinkage);
    e["loss.alpha"] = std::isnan(ga.loss.alpha) ? "default" : format_double(ga.loss.alpha);
    e["loss.beta"] = format_double(ga.loss.beta);
    e["loss.q"] = format_double(ga.loss.q);
    e["loss.Q"] = std::isnan(ga.loss.cwd_q) ? "default" : format_double(ga.loss.cwd_q);
    e["loss.assumed_noise_rate"] =
        assumed_noise_rate ? format_double(*assumed_noise_rate) : "track";
    e["loss.peer_sampled"] = ga.loss.peer_sampled ? "true" : "false";
    return e;
}

ExperimentResult run_cell(const ExperimentConfig& config, int rate_index, int loss_index,
                          int replicate, int n_threads) {
    config.validate();
    if (rate_index < 0 || rate_index >= static_cast<int>(config.noise_rates.size()))
        throw std::invalid_argument("rate_index out of range");
    if (loss_index < 0 || loss_index >= static_cast<int>(config.losses.size()))
        throw std::invalid_argument("loss_index out of range");
    if (replicate < 0 || replicate >= config.replicates)
        throw std::invalid_argument("replicate out of range");

    const double rate = config.noise_rates[rate_index];
    const std::uint64_t cell_seed = cell_seed_of(config, rate_index, loss_index, replicate);
    const auto start = std::chrono::steady_clock::now();

    GaConfig ga = config.ga;
    ga.loss.kind = config.losses[loss_index];
    ga.loss.assumed_noise_rate = config.assumed_noise_rate.value_or(rate);
    if (ga.loss.peer_sampled) ga.loss.peer_seed = derive_seed(cell_seed, {7});
    ga.seed = derive_seed(cell_seed, {4});

    ExperimentResult result;
    if (config.task == "csv") {
        Dataset base = load_csv(config.csv_path, config.label_column, config.positive_label);
        if (config.standardize) standardize_columns(base);
        Dataset staged = config.noise_features > 0
                             ? augment_noise_features(base, config.noise_features,
                                                      derive_seed(cell_seed, {2}))
                             : std::move(base);
        const Dataset noisy =
            inject_label_noise(staged, NoiseSpec::symmetric(rate, derive_seed(cell_seed, {3})));

        const ParetoResult pareto = run_nmfs_ga(noisy, ga, n_threads);
        const Individual& best = select_final(pareto);
        result = cross_validated_report(noisy, best.mask, config.eval_cv_folds,
                                        derive_seed(cell_seed, {6}), ga.shrinkage);
        if (noisy.informative_count > 0)
            result.informative_recovered = score_feature_recovery(best.mask, noisy);
    } else {
        const GaussianTaskSpec spec =
            config.task == "synthA" ? GaussianTaskSpec::dataset_a(derive_seed(cell_seed, {1}))
                                    : GaussianTaskSpec::dataset_b(derive_seed(cell_seed, {1}));
        const Dataset clean = generate_synthetic(spec, config.n_per_class);
        const Dataset noisy =
            inject_label_noise(clean, NoiseSpec::symmetric(rate, derive_seed(cell_seed, {3})));

        const ParetoResult pareto = run_nmfs_ga(noisy, ga, n_threads);
        const Individual& best = select_final(pareto);

        const LdaModel model =
            fit_lda(masked_columns(noisy, best.mask), noisy.noisy_labels, ga.shrinkage);
        result.selected_mask = best.mask;
        result.pcc_closed =
            conditional_pcc_closed_form(model, best.mask, spec, noisy.column_permutation);
        result.pcc_mc =
            conditional_pcc_mc(model, best.mask, spec, config.mc_samples,
                               derive_seed(cell_seed, {5}), noisy.column_permutation,
                               config.mc_shards, n_threads);
        result.informative_recovered = score_feature_recovery(best.mask, noisy);
    }

    const auto end = std::chrono::steady_clock::now();
    result.runtime_seconds = std::chrono::duration<double>(end - start).count();
    result.config_echo = cell_echo(config, rate_index, loss_index, replicate);
    return result;
}

int cmd_generate(const ExperimentConfig& config) {
    config.validate();
    fs::create_directories(config.out_dir);

    Dataset ds;
    std::string stem;
    nlohmann::json sidecar;
    if (config.task == "csv") {
        ds = load_csv(config.csv_path, config.label_column, config.positive_label);
        if (config.standardize) standardize_columns(ds);
        if (config.noise_features > 0)
            ds = augment_noise_features(ds, config.noise_features, derive_seed(config.seed, {2}));
        stem = "csv_augmented";
        sidecar["source_csv"] = config.csv_path;
        sidecar["noise_features"] = config.noise_features;
        sidecar["standardize"] = config.standardize;
    } else {
        const GaussianTaskSpec spec =
            config.task == "synthA" ? GaussianTaskSpec::dataset_a(derive_seed(config.seed, {1}))
                                    : GaussianTaskSpec::dataset_b(derive_seed(config.seed, {1}));
        ds = generate_synthetic(spec, config.n_per_class);
        stem = config.task;
        sidecar["d_total"] = spec.d_total;
        sidecar["k_informative"] = spec.k_informative;
        sidecar["target_bayes_error"] = spec.target_bayes_error;
        sidecar["n_per_class"] = config.n_per_class;
        sidecar["spec_seed"] = spec.seed;
    }
    sidecar["task"] = config.task;
    sidecar["master_seed"] = config.seed;
    sidecar["column_permutation"] = ds.column_permutation;
    sidecar["informative_count"] = ds.informative_count;
    std::vector<int> informative_columns;
    if (ds.informative_count > 0)
        for (int j = 0; j < ds.cols(); ++j)
            if (ds.identity_of(j) < ds.informative_count) informative_columns.push_back(j);
    sidecar["informative_columns"] = informative_columns;
    sidecar["config_echo"] = config.echo();

    const fs::path dir(config.out_dir);
    const fs::path csv_tmp = dir / (stem + ".csv.tmp");
    save_csv(ds, csv_tmp.string());
    fs::rename(csv_tmp, dir / (stem + ".csv"));
    write_file_atomic(dir / (stem + ".provenance.json"), sidecar.dump(2) + "\n");
    return 0;
}

namespace {

struct CellKey {
    int rate_index;
    int loss_index;
    int replicate;
};

struct CellOutcome {
    bool ok = false;
    std::string error;
    ExperimentResult result;
};

std::optional<double> primary_metric(const ExperimentResult& result) {
    if (result.pcc_mc) return result.pcc_mc;
    if (result.metrics) return result.metrics->balanced_accuracy.mean;
    return std::nullopt;
}

}  // namespace

int cmd_run(const ExperimentConfig& config, int workers) {
    config.validate();
    if (workers < 1) workers = 1;
    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);

    std::vector<CellKey> cells;
    for (int ri = 0; ri < static_cast<int>(config.noise_rates.size()); ++ri)
        for (int li = 0; li < static_cast<int>(config.losses.size()); ++li)
            for (int rep = 0; rep < config.replicates; ++rep) cells.push_back({ri, li, rep});
    const int n = static_cast<int>(cells.size());
    const int outer = std::min(workers, n);
    const int inner = std::max(1, workers / std::max(outer, 1));

    std::vector<CellOutcome> outcomes(n);
    parallel_for(0, n, outer, [&](int i) {
        const auto [ri, li, rep] = cells[i];
        nlohmann::json artifact;
        try {
            outcomes[i].result = run_cell(config, ri, li, rep, inner);
            outcomes[i].ok = true;
            artifact["status"] = "ok";
            artifact["result"] = outcomes[i].result.to_json();
        } catch (const std::exception& e) {
            outcomes[i].error = e.what();
            artifact["status"] = "error";
            artifact["message"] = outcomes[i].error;
            artifact["config_echo"] = cell_echo(config, ri, li, rep);
        }
        write_file_atomic(dir / cell_file_name(config, ri, li, rep), artifact.dump(2) + "\n");
    });

    // cells.csv: one row per cell in canonical order, volatile fields omitted
    // so identical configs reproduce identical bytes.
    std::string cells_csv =
        "status,task,noise_rate,loss,replicate,cell_seed,n_selected,selected_indices,"
        "pcc_mc,pcc_closed,balanced_accuracy_mean,balanced_accuracy_sd,"
        "sensitivity_mean,sensitivity_sd,specificity_mean,specificity_sd,"
        "auc_mean,auc_sd,informative_recovered,error\n";
    for (int i = 0; i < n; ++i) {
        const auto [ri, li, rep] = cells[i];
        const auto& outcome = outcomes[i];
        std::string row = outcome.ok ? "ok" : "ERR";
        row += "," + config.task;
        row += "," + format_double(config.noise_rates[ri]);
        row += "," + loss_kind_name(config.losses[li]);
        row += "," + std::to_string(rep);
        row += "," + std::to_string(cell_seed_of(config, ri, li, rep));
        if (outcome.ok) {
            const auto& r = outcome.result;
            row += "," + std::to_string(popcount_mask(r.selected_mask));
            std::string indices;
            for (std::size_t j = 0; j < r.selected_mask.size(); ++j)
                if (r.selected_mask[j]) {
                    if (!indices.empty()) indices += ";";
                    indices += std::to_string(j);
                }
            row += "," + indices;
            const auto add_opt = [&row](const std::optional<double>& v) {
                row += ",";
                if (v) row += format_double(*v);
            };
            add_opt(r.pcc_mc);
            add_opt(r.pcc_closed);
            const auto add_metric = [&](const MetricSummary& s) {
                row += "," + format_double(s.mean) + "," + format_double(s.sd);
            };
            if (r.metrics) {
                add_metric(r.metrics->balanced_accuracy);
                add_metric(r.metrics->sensitivity);
                add_metric(r.metrics->specificity);
                add_metric(r.metrics->auc);
            } else {
                row += ",,,,,,,,";
            }
            row += ",";
            if (r.informative_recovered) row += std::to_string(*r.informative_recovered);
            row += ",";
        } else {
            row += ",,,,,,,,,,,,,";
            row += "," + sanitize_csv_field(outcome.error);
        }
        cells_csv += row + "\n";
    }
    write_file_atomic(dir / "cells.csv", cells_csv);

    // aggregate.csv: mean and sd of the primary metric per grid cell group.
    std::string aggregate_csv = "task,noise_rate,loss,metric,n_ok,n_failed,mean,sd\n";
    const std::string metric_name = config.task == "csv" ? "balanced_accuracy" : "pcc_mc";
    bool any_failed = false;
    for (int ri = 0; ri < static_cast<int>(config.noise_rates.size()); ++ri) {
        for (int li = 0; li < static_cast<int>(config.losses.size()); ++li) {
            std::vector<double> values;
            int failed = 0;
            for (int i = 0; i < n; ++i) {
                if (cells[i].rate_index != ri || cells[i].loss_index != li) continue;
                const auto value =
                    outcomes[i].ok ? primary_metric(outcomes[i].result) : std::nullopt;
                if (value)
                    values.push_back(*value);
                else
                    ++failed;
            }
            any_failed = any_failed || failed > 0;
            std::string row = config.task;
            row += "," + format_double(config.noise_rates[ri]);
            row += "," + loss_kind_name(config.losses[li]);
            row += "," + metric_name;
            row += "," + std::to_string(values.size());
            row += "," + std::to_string(failed);
            if (!values.empty())
                row += "," + format_double(mean(values)) + "," + format_double(sample_sd(values));
            else
                row += ",,";
            aggregate_csv += row + "\n";
        }
    }
    write_file_atomic(dir / "aggregate.csv", aggregate_csv);
    return any_failed ? 2 : 0;
}

int cmd_report(const std::string& result_dir, std::string* rendered) {
    const fs::path dir(result_dir);
    if (!fs::is_directory(dir))
        throw std::invalid_argument("not a result directory: " + result_dir);

    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (entry.is_regular_file() && name.rfind("cell_", 0) == 0 &&
            name.size() > 5 + 5 && name.substr(name.size() - 5) == ".json")
            files.push_back(entry.path());
    }
    if (files.empty())
        throw std::invalid_argument("no cell artifacts in " + result_dir);
    std::sort(files.begin(), files.end());

    struct CellRecord {
        double rate = 0.0;
        std::string rate_text;
        LossKind loss = LossKind::BA;
        bool ok = false;
        std::optional<double> value;
    };
    std::vector<CellRecord> records;
    for (const auto& file : files) {
        std::ifstream in(file);
        nlohmann::json j;
        in >> j;
        CellRecord rec;
        const nlohmann::json& echo = j.at("status").get<std::string>() == "ok"
                                         ? j.at("result").at("config_echo")
                                         : j.at("config_echo");
        rec.rate_text = echo.at("cell.noise_rate").get<std::string>();
        rec.rate = parse_double(rec.rate_text);
        rec.loss = parse_loss_kind(echo.at("cell.loss").get<std::string>());
        if (j.at("status").get<std::string>() == "ok") {
            const ExperimentResult result = ExperimentResult::from_json(j.at("result"));
            rec.value = primary_metric(result);
            rec.ok = rec.value.has_value();
        }
        records.push_back(std::move(rec));
    }

    std::vector<std::pair<double, std::string>> rates;
    for (const auto& rec : records) {
        const auto found = std::find_if(rates.begin(), rates.end(), [&](const auto& r) {
            return r.second == rec.rate_text;
        });
        if (found == rates.end()) rates.emplace_back(rec.rate, rec.rate_text);
    }
    std::sort(rates.begin(), rates.end());

    std::vector<LossKind> losses;
    for (const LossKind kind : {LossKind::BA, LossKind::CE, LossKind::SCE, LossKind::GCE,
                                LossKind::JOL, LossKind::PL, LossKind::CWD}) {
        if (std::any_of(records.begin(), records.end(),
                        [kind](const CellRecord& rec) { return rec.loss == kind; }))
            losses.push_back(kind);
    }

    bool any_error = false;
    std::string table;
    std::string csv = "noise_rate";
    for (const LossKind kind : losses)
        csv += "," + loss_kind_name(kind) + "_mean," + loss_kind_name(kind) + "_sd," +
               loss_kind_name(kind) + "_n";
    csv += "\n";

    constexpr int kCellWidth = 17;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-12s", "noise_rate");
    table += buf;
    for (const LossKind kind : losses) {
        std::snprintf(buf, sizeof(buf), "%*s", kCellWidth, loss_kind_name(kind).c_str());
        table += buf;
    }
    table += "\n";

    for (const auto& [rate_value, rate_text] : rates) {
        std::snprintf(buf, sizeof(buf), "%-12s", rate_text.c_str());
        table += buf;
        csv += rate_text;
        for (const LossKind kind : losses) {
            std::vector<double> values;
            int failed = 0;
            int present = 0;
            for (const auto& rec : records) {
                if (rec.rate_text != rate_text || rec.loss != kind) continue;
                ++present;
                if (rec.ok)
                    values.push_back(*rec.value);
                else
                    ++failed;
            }
            std::string cell_text;
            if (present == 0) {
                cell_text = "-";
                csv += ",,,0";
            } else if (failed > 0) {
                any_error = true;
                cell_text = "ERR";
                csv += ",ERR,ERR," + std::to_string(values.size());
            } else {
                const double m = mean(values);
                const double s = sample_sd(values);
                std::snprintf(buf, sizeof(buf), "%.3f +- %.3f", m, s);
                cell_text = buf;
                csv += "," + format_double(m) + "," + format_double(s) + "," +
                       std::to_string(values.size());
            }
            std::snprintf(buf, sizeof(buf), "%*s", kCellWidth, cell_text.c_str());
            table += buf;
        }
        table += "\n";
        csv += "\n";
    }

    write_file_atomic(dir / "report.txt", table);
    write_file_atomic(dir / "report.csv", csv);
    if (rendered) *rendered = table;
    return any_error ? 1 : 0;
}

}  // namespace nmfs
