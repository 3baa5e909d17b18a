#include "nmfsga/nmfsga.h"

#include <cstring>
#include <exception>
#include <stdexcept>
#include <string>
#include <utility>

#include "dataset.hpp"
#include "experiment.hpp"
#include "ga.hpp"

struct nmfs_dataset {
    nmfs::Dataset ds;
};

struct nmfs_ga_result {
    nmfs::ParetoResult result;
};

struct nmfs_experiment {
    nmfs::ExperimentConfig cfg;
};

namespace {

thread_local std::string t_last_error;

nmfs_status fail(nmfs_status code, const std::string& message) {
    t_last_error = message;
    return code;
}

char* copy_string(const std::string& text) {
    char* copy = new char[text.size() + 1];
    std::memcpy(copy, text.c_str(), text.size() + 1);
    return copy;
}

template <typename Fn>
nmfs_status guarded(Fn&& fn) {
    try {
        const nmfs_status status = fn();
        if (status == NMFS_OK) t_last_error.clear();
        return status;
    } catch (const std::invalid_argument& e) {
        return fail(NMFS_ERR_INVALID_ARGUMENT, e.what());
    } catch (const std::runtime_error& e) {
        return fail(NMFS_ERR_RUNTIME, e.what());
    } catch (const std::exception& e) {
        return fail(NMFS_ERR_INTERNAL, e.what());
    } catch (...) {
        return fail(NMFS_ERR_INTERNAL, "unknown error");
    }
}

nmfs_status require(bool condition, const char* message) {
    if (condition) return NMFS_OK;
    throw std::invalid_argument(message);
}

nmfs_status copy_individual(const nmfs::Individual& ind, uint8_t* mask_buffer,
                            size_t mask_length, double* loss, int* n_selected) {
    require(mask_buffer != nullptr, "mask_buffer is NULL");
    require(mask_length == ind.mask.size(), "mask_length does not match the chromosome length");
    std::memcpy(mask_buffer, ind.mask.data(), ind.mask.size());
    if (loss) *loss = ind.loss;
    if (n_selected) *n_selected = ind.n_selected;
    return NMFS_OK;
}

}  // namespace

extern "C" {

const char* nmfs_version(void) { return "0.1.0"; }

const char* nmfs_last_error(void) { return t_last_error.c_str(); }

nmfs_status nmfs_dataset_synthetic(const char* preset, int n_per_class, uint64_t seed,
                                   nmfs_dataset** out) {
    return guarded([&]() -> nmfs_status {
        require(preset != nullptr, "preset is NULL");
        require(out != nullptr, "out is NULL");
        const std::string name(preset);
        nmfs::GaussianTaskSpec spec;
        if (name == "A")
            spec = nmfs::GaussianTaskSpec::dataset_a(seed);
        else if (name == "B")
            spec = nmfs::GaussianTaskSpec::dataset_b(seed);
        else
            throw std::invalid_argument("preset must be \"A\" or \"B\"");
        auto* handle = new nmfs_dataset{nmfs::generate_synthetic(spec, n_per_class)};
        *out = handle;
        return NMFS_OK;
    });
}

nmfs_status nmfs_dataset_load_csv(const char* path, const char* label_column,
                                  const char* positive_label, nmfs_dataset** out) {
    return guarded([&]() -> nmfs_status {
        require(path && label_column && positive_label, "path/label arguments must be non-NULL");
        require(out != nullptr, "out is NULL");
        auto* handle = new nmfs_dataset{nmfs::load_csv(path, label_column, positive_label)};
        *out = handle;
        return NMFS_OK;
    });
}

nmfs_status nmfs_dataset_augment_noise(nmfs_dataset* ds, int count, uint64_t seed) {
    return guarded([&]() -> nmfs_status {
        require(ds != nullptr, "dataset is NULL");
        ds->ds = nmfs::augment_noise_features(ds->ds, count, seed);
        return NMFS_OK;
    });
}

nmfs_status nmfs_dataset_inject_noise(nmfs_dataset* ds, double rho_0_to_1, double rho_1_to_0,
                                      uint64_t seed) {
    return guarded([&]() -> nmfs_status {
        require(ds != nullptr, "dataset is NULL");
        ds->ds = nmfs::inject_label_noise(ds->ds, nmfs::NoiseSpec{rho_0_to_1, rho_1_to_0, seed});
        return NMFS_OK;
    });
}

nmfs_status nmfs_dataset_save_csv(const nmfs_dataset* ds, const char* path) {
    return guarded([&]() -> nmfs_status {
        require(ds != nullptr, "dataset is NULL");
        require(path != nullptr, "path is NULL");
        nmfs::save_csv(ds->ds, path);
        return NMFS_OK;
    });
}

int nmfs_dataset_rows(const nmfs_dataset* ds) { return ds ? ds->ds.rows() : -1; }

int nmfs_dataset_cols(const nmfs_dataset* ds) { return ds ? ds->ds.cols() : -1; }

void nmfs_dataset_free(nmfs_dataset* ds) { delete ds; }

nmfs_status nmfs_ga_run(const nmfs_dataset* ds, const char* loss_kind,
                        const char* const* config_keys, const char* const* config_values,
                        size_t n_config, uint64_t seed, int n_threads, nmfs_ga_result** out) {
    return guarded([&]() -> nmfs_status {
        require(ds != nullptr, "dataset is NULL");
        require(loss_kind != nullptr, "loss_kind is NULL");
        require(out != nullptr, "out is NULL");
        require(n_config == 0 || (config_keys && config_values),
                "config arrays must be non-NULL when n_config > 0");

        nmfs::ExperimentConfig carrier;  // reuse the config parser for overrides
        for (size_t i = 0; i < n_config; ++i) {
            require(config_keys[i] && config_values[i], "config entries must be non-NULL");
            const std::string key(config_keys[i]);
            if (key.rfind("ga.", 0) != 0 && key.rfind("loss.", 0) != 0)
                throw std::invalid_argument("nmfs_ga_run accepts only ga.* and loss.* keys, got '" +
                                            key + "'");
            carrier.apply_kv(key, config_values[i]);
        }
        nmfs::GaConfig config = carrier.ga;
        config.loss.kind = nmfs::parse_loss_kind(loss_kind);
        config.loss.assumed_noise_rate = carrier.assumed_noise_rate.value_or(
            config.loss.assumed_noise_rate);
        config.seed = seed;
        if (n_threads < 1) n_threads = 1;

        auto* handle = new nmfs_ga_result{nmfs::run_nmfs_ga(ds->ds, config, n_threads)};
        *out = handle;
        return NMFS_OK;
    });
}

size_t nmfs_ga_front_size(const nmfs_ga_result* result) {
    return result ? result->result.front.size() : 0;
}

nmfs_status nmfs_ga_front_get(const nmfs_ga_result* result, size_t index, uint8_t* mask_buffer,
                              size_t mask_length, double* loss, int* n_selected) {
    return guarded([&]() -> nmfs_status {
        require(result != nullptr, "result is NULL");
        require(index < result->result.front.size(), "front index out of range");
        return copy_individual(result->result.front[index], mask_buffer, mask_length, loss,
                               n_selected);
    });
}

nmfs_status nmfs_ga_select_final(const nmfs_ga_result* result, uint8_t* mask_buffer,
                                 size_t mask_length, double* loss, int* n_selected) {
    return guarded([&]() -> nmfs_status {
        require(result != nullptr, "result is NULL");
        return copy_individual(nmfs::select_final(result->result), mask_buffer, mask_length,
                               loss, n_selected);
    });
}

void nmfs_ga_result_free(nmfs_ga_result* result) { delete result; }

nmfs_status nmfs_experiment_load(const char* config_path, nmfs_experiment** out) {
    return guarded([&]() -> nmfs_status {
        require(config_path != nullptr, "config_path is NULL");
        require(out != nullptr, "out is NULL");
        auto* handle = new nmfs_experiment{nmfs::ExperimentConfig::from_file(config_path)};
        *out = handle;
        return NMFS_OK;
    });
}

nmfs_status nmfs_experiment_set(nmfs_experiment* config, const char* key, const char* value) {
    return guarded([&]() -> nmfs_status {
        require(config != nullptr, "config is NULL");
        require(key && value, "key/value must be non-NULL");
        config->cfg.apply_kv(key, value);
        return NMFS_OK;
    });
}

nmfs_status nmfs_experiment_fast_preset(nmfs_experiment* config) {
    return guarded([&]() -> nmfs_status {
        require(config != nullptr, "config is NULL");
        config->cfg.apply_fast_preset();
        return NMFS_OK;
    });
}

nmfs_status nmfs_experiment_get(const nmfs_experiment* config, const char* key, char** value) {
    return guarded([&]() -> nmfs_status {
        require(config != nullptr, "config is NULL");
        require(key != nullptr, "key is NULL");
        require(value != nullptr, "value is NULL");
        const auto echo = config->cfg.echo();
        const auto it = echo.find(key);
        if (it == echo.end()) throw std::invalid_argument("unknown config key: '" + std::string(key) + "'");
        *value = copy_string(it->second);
        return NMFS_OK;
    });
}

void nmfs_experiment_free(nmfs_experiment* config) { delete config; }

nmfs_status nmfs_cmd_generate(const nmfs_experiment* config) {
    return guarded([&]() -> nmfs_status {
        require(config != nullptr, "config is NULL");
        nmfs::cmd_generate(config->cfg);
        return NMFS_OK;
    });
}

nmfs_status nmfs_cmd_run(const nmfs_experiment* config, int workers) {
    return guarded([&]() -> nmfs_status {
        require(config != nullptr, "config is NULL");
        const int code = nmfs::cmd_run(config->cfg, workers);
        if (code == 0) return NMFS_OK;
        return fail(NMFS_ERR_PARTIAL, "some grid cells failed; see cells.csv");
    });
}

nmfs_status nmfs_cmd_report(const char* result_dir, char** rendered_table) {
    return guarded([&]() -> nmfs_status {
        require(result_dir != nullptr, "result_dir is NULL");
        std::string table;
        const int code = nmfs::cmd_report(result_dir, &table);
        if (rendered_table) *rendered_table = copy_string(table);
        if (code == 0) return NMFS_OK;
        return fail(NMFS_ERR_PARTIAL, "report contains failed cells");
    });
}

void nmfs_string_free(char* text) { delete[] text; }

}  // extern "C"
