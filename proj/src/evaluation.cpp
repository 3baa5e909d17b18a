#include "evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "loss.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "stats.hpp"
#include "textio.hpp"

namespace nmfs {

namespace {

std::vector<int> selected_columns(const Chromosome& mask) {
    std::vector<int> cols;
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) cols.push_back(static_cast<int>(j));
    return cols;
}

}  // namespace

GenerativeRestriction restrict_task(const GaussianTaskSpec& spec, const Chromosome& mask,
                                    const std::vector<int>& column_permutation) {
    spec.validate();
    if (static_cast<int>(mask.size()) != spec.d_total)
        throw std::invalid_argument("mask length does not match task dimension");
    if (!column_permutation.empty() &&
        static_cast<int>(column_permutation.size()) != spec.d_total)
        throw std::invalid_argument("column permutation does not match task dimension");

    const auto identity = [&](int pos) {
        const int id = column_permutation.empty() ? pos : column_permutation[pos];
        if (id < 0 || id >= spec.d_total)
            throw std::invalid_argument("column permutation holds an out-of-range identity");
        return id;
    };

    GenerativeRestriction gen;
    for (std::size_t j = 0; j < mask.size(); ++j)
        if (mask[j]) gen.identities.push_back(identity(static_cast<int>(j)));

    const int p = static_cast<int>(gen.identities.size());
    const int k = spec.k_informative;
    const Eigen::VectorXd shift = spec.calibrated_shift();

    gen.mu0 = Eigen::VectorXd::Zero(p);
    gen.mu1 = Eigen::VectorXd::Zero(p);
    gen.sigma = Eigen::MatrixXd::Zero(p, p);
    for (int a = 0; a < p; ++a) {
        const int ia = gen.identities[a];
        if (ia < k) {
            gen.mu0[a] = -0.5 * shift[ia];
            gen.mu1[a] = 0.5 * shift[ia];
        }
        for (int b = 0; b < p; ++b) {
            const int ib = gen.identities[b];
            if (ia < k && ib < k)
                gen.sigma(a, b) = spec.covariance(ia, ib);
            else if (a == b)
                gen.sigma(a, b) = 1.0;
        }
    }
    return gen;
}

double linear_rule_pcc(const Eigen::VectorXd& w, double b, const GenerativeRestriction& gen) {
    if (w.size() != gen.mu0.size())
        throw std::invalid_argument("rule dimension does not match restriction");
    const double variance = w.size() == 0 ? 0.0 : double(w.transpose() * gen.sigma * w);
    if (!(variance > 0.0) || !std::isfinite(variance)) return 0.5;
    const double s = std::sqrt(variance);
    const double hit1 = normal_cdf((w.dot(gen.mu1) + b) / s);
    const double hit0 = normal_cdf(-(w.dot(gen.mu0) + b) / s);
    return 0.5 * (hit0 + hit1);
}

double linear_rule_pcc_mc(const Eigen::VectorXd& w, double b, const GenerativeRestriction& gen,
                          std::int64_t n_samples, std::uint64_t seed, int n_shards,
                          int n_threads) {
    const int p = static_cast<int>(gen.mu0.size());
    if (w.size() != p) throw std::invalid_argument("rule dimension does not match restriction");
    if (n_samples < 2) throw std::invalid_argument("n_samples must be at least 2");
    if (n_shards < 1) throw std::invalid_argument("n_shards must be positive");

    // score(x) = w.x + b depends on x = mu + L z only through the projection
    // v = L' w, so each sample consumes exactly p stream normals and costs
    // one length-p dot product.
    Eigen::VectorXd v(p);
    if (p > 0) {
        Eigen::LLT<Eigen::MatrixXd> llt(gen.sigma);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("restricted covariance is not positive definite");
        v = Eigen::MatrixXd(llt.matrixL()).transpose() * w;
    }
    const double c0 = (p > 0 ? w.dot(gen.mu0) : 0.0) + b;
    const double c1 = (p > 0 ? w.dot(gen.mu1) : 0.0) + b;

    const std::int64_t half = n_samples / 2;
    std::vector<std::int64_t> shard_size(n_shards);
    for (int s = 0; s < n_shards; ++s)
        shard_size[s] = half / n_shards + (s < half % n_shards ? 1 : 0);

    std::vector<std::int64_t> correct(n_shards, 0);
    parallel_for(0, n_shards, n_threads, [&](int s) {
        Rng rng(derive_seed(seed, {kRoleShard, static_cast<std::uint64_t>(s)}));
        const std::int64_t n = shard_size[s];
        std::int64_t good = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            double score = c0;
            for (int j = 0; j < p; ++j) score += v[j] * rng.normal();
            if (!(score > 0.0)) ++good;  // class 0 point, predicted 0
        }
        for (std::int64_t i = 0; i < n; ++i) {
            double score = c1;
            for (int j = 0; j < p; ++j) score += v[j] * rng.normal();
            if (score > 0.0) ++good;  // class 1 point, predicted 1
        }
        correct[s] = good;
    });

    std::int64_t total_correct = 0;
    for (std::int64_t c : correct) total_correct += c;
    return static_cast<double>(total_correct) / static_cast<double>(2 * half);
}

double conditional_pcc_closed_form(const LdaModel& model, const Chromosome& mask,
                                   const GaussianTaskSpec& spec,
                                   const std::vector<int>& column_permutation) {
    const GenerativeRestriction gen = restrict_task(spec, mask, column_permutation);
    if (model.dim() != static_cast<int>(gen.identities.size()))
        throw std::invalid_argument("model dimension does not match mask");
    return linear_rule_pcc(model.weights, model.bias, gen);
}

double conditional_pcc_mc(const LdaModel& model, const Chromosome& mask,
                          const GaussianTaskSpec& spec, std::int64_t n_samples,
                          std::uint64_t seed, const std::vector<int>& column_permutation,
                          int n_shards, int n_threads) {
    const GenerativeRestriction gen = restrict_task(spec, mask, column_permutation);
    if (model.dim() != static_cast<int>(gen.identities.size()))
        throw std::invalid_argument("model dimension does not match mask");
    return linear_rule_pcc_mc(model.weights, model.bias, gen, n_samples, seed, n_shards,
                              n_threads);
}

MetricSummary MetricSummary::from_folds(std::vector<double> fold_values) {
    if (fold_values.empty()) throw std::invalid_argument("no fold values");
    MetricSummary summary;
    summary.folds = std::move(fold_values);
    summary.mean = nmfs::mean(summary.folds);
    summary.sd = nmfs::sample_sd(summary.folds);
    return summary;
}

ExperimentResult cross_validated_report(const Dataset& ds, const Chromosome& mask, int k,
                                        std::uint64_t seed, double shrinkage) {
    ds.validate();
    if (!ds.has_clean_labels())
        throw std::invalid_argument("cross-validated report requires clean labels");
    if (static_cast<int>(mask.size()) != ds.cols())
        throw std::invalid_argument("mask length does not match dataset width");
    const std::vector<int> cols = selected_columns(mask);
    if (cols.empty()) throw std::invalid_argument("mask selects no features");

    const FoldAssignment folds = stratified_kfold(ds.clean_labels, k, seed);
    const int n = ds.rows();
    const int p = static_cast<int>(cols.size());
    Eigen::MatrixXd x(n, p);
    for (int c = 0; c < p; ++c) x.col(c) = ds.features.col(cols[c]);

    std::vector<double> ba, sens, spec_v, auc;
    for (int f = 0; f < k; ++f) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < n; ++i)
            (folds.fold_index[i] == f ? test_rows : train_rows).push_back(i);

        Eigen::MatrixXd x_train(train_rows.size(), p);
        std::vector<int> y_train(train_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            x_train.row(i) = x.row(train_rows[i]);
            y_train[i] = ds.noisy_labels[train_rows[i]];
        }
        Eigen::MatrixXd x_test(test_rows.size(), p);
        std::vector<int> y_clean(test_rows.size());
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            x_test.row(i) = x.row(test_rows[i]);
            y_clean[i] = ds.clean_labels[test_rows[i]];
        }

        const LdaModel model = fit_lda(x_train, y_train, shrinkage);
        const MetricSuite suite = metric_suite(model.predict_proba(x_test), 0.5, y_clean);
        ba.push_back(suite.balanced_accuracy);
        sens.push_back(suite.sensitivity);
        spec_v.push_back(suite.specificity);
        auc.push_back(suite.auc);
    }

    CrossValReport report;
    report.balanced_accuracy = MetricSummary::from_folds(std::move(ba));
    report.sensitivity = MetricSummary::from_folds(std::move(sens));
    report.specificity = MetricSummary::from_folds(std::move(spec_v));
    report.auc = MetricSummary::from_folds(std::move(auc));
    report.n_folds = k;

    ExperimentResult result;
    result.selected_mask = mask;
    result.metrics = std::move(report);
    return result;
}

int score_feature_recovery(const Chromosome& mask, const Dataset& ds) {
    ds.validate();
    if (ds.informative_count <= 0)
        throw std::invalid_argument("dataset carries no informative-feature provenance");
    if (static_cast<int>(mask.size()) != ds.cols())
        throw std::invalid_argument("mask length does not match dataset width");
    int recovered = 0;
    for (int j = 0; j < ds.cols(); ++j)
        if (mask[j] && ds.identity_of(j) < ds.informative_count) ++recovered;
    return recovered;
}

namespace {

nlohmann::json summary_to_json(const MetricSummary& summary) {
    return {{"folds", summary.folds}, {"mean", summary.mean}, {"sd", summary.sd}};
}

MetricSummary summary_from_json(const nlohmann::json& j) {
    MetricSummary summary;
    summary.folds = j.at("folds").get<std::vector<double>>();
    summary.mean = j.at("mean").get<double>();
    summary.sd = j.at("sd").get<double>();
    return summary;
}

std::string join_indices(const std::vector<int>& indices) {
    std::string out;
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (i) out.push_back(';');
        out += std::to_string(indices[i]);
    }
    return out;
}

}  // namespace

nlohmann::json ExperimentResult::to_json() const {
    nlohmann::json j;
    j["mask_length"] = selected_mask.size();
    j["selected_indices"] = selected_columns(selected_mask);
    j["n_selected"] = popcount_mask(selected_mask);
    j["pcc_mc"] = pcc_mc ? nlohmann::json(*pcc_mc) : nlohmann::json(nullptr);
    j["pcc_closed"] = pcc_closed ? nlohmann::json(*pcc_closed) : nlohmann::json(nullptr);
    if (metrics) {
        j["metrics"] = {{"n_folds", metrics->n_folds},
                        {"balanced_accuracy", summary_to_json(metrics->balanced_accuracy)},
                        {"sensitivity", summary_to_json(metrics->sensitivity)},
                        {"specificity", summary_to_json(metrics->specificity)},
                        {"auc", summary_to_json(metrics->auc)}};
    } else {
        j["metrics"] = nullptr;
    }
    j["informative_recovered"] =
        informative_recovered ? nlohmann::json(*informative_recovered) : nlohmann::json(nullptr);
    j["runtime_seconds"] = runtime_seconds;
    j["config_echo"] = config_echo;
    return j;
}

ExperimentResult ExperimentResult::from_json(const nlohmann::json& j) {
    ExperimentResult result;
    const auto mask_length = j.at("mask_length").get<std::size_t>();
    result.selected_mask.assign(mask_length, 0);
    for (int idx : j.at("selected_indices").get<std::vector<int>>()) {
        if (idx < 0 || idx >= static_cast<int>(mask_length))
            throw std::invalid_argument("selected index out of range");
        result.selected_mask[idx] = 1;
    }
    if (!j.at("pcc_mc").is_null()) result.pcc_mc = j.at("pcc_mc").get<double>();
    if (!j.at("pcc_closed").is_null()) result.pcc_closed = j.at("pcc_closed").get<double>();
    if (!j.at("metrics").is_null()) {
        const auto& m = j.at("metrics");
        CrossValReport report;
        report.n_folds = m.at("n_folds").get<int>();
        report.balanced_accuracy = summary_from_json(m.at("balanced_accuracy"));
        report.sensitivity = summary_from_json(m.at("sensitivity"));
        report.specificity = summary_from_json(m.at("specificity"));
        report.auc = summary_from_json(m.at("auc"));
        result.metrics = std::move(report);
    }
    if (!j.at("informative_recovered").is_null())
        result.informative_recovered = j.at("informative_recovered").get<int>();
    result.runtime_seconds = j.at("runtime_seconds").get<double>();
    result.config_echo =
        j.at("config_echo").get<std::map<std::string, std::string>>();
    return result;
}

std::string ExperimentResult::csv_header() {
    return "n_selected,selected_indices,pcc_mc,pcc_closed,"
           "balanced_accuracy_mean,balanced_accuracy_sd,sensitivity_mean,sensitivity_sd,"
           "specificity_mean,specificity_sd,auc_mean,auc_sd,"
           "informative_recovered,runtime_seconds";
}

std::string ExperimentResult::csv_row() const {
    std::string row = std::to_string(popcount_mask(selected_mask));
    row.push_back(',');
    row += join_indices(selected_columns(selected_mask));
    const auto add_opt = [&row](const std::optional<double>& v) {
        row.push_back(',');
        if (v) row += format_double(*v);
    };
    add_opt(pcc_mc);
    add_opt(pcc_closed);
    const auto add_summary = [&row](const std::optional<CrossValReport>& m,
                                    const MetricSummary CrossValReport::*field) {
        if (m) {
            row.push_back(',');
            row += format_double(((*m).*field).mean);
            row.push_back(',');
            row += format_double(((*m).*field).sd);
        } else {
            row += ",,";
        }
    };
    add_summary(metrics, &CrossValReport::balanced_accuracy);
    add_summary(metrics, &CrossValReport::sensitivity);
    add_summary(metrics, &CrossValReport::specificity);
    add_summary(metrics, &CrossValReport::auc);
    row.push_back(',');
    if (informative_recovered) row += std::to_string(*informative_recovered);
    row.push_back(',');
    row += format_double(runtime_seconds);
    return row;
}

}  // namespace nmfs
