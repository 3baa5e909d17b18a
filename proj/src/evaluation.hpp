#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dataset.hpp"
#include "ga.hpp"
#include "lda.hpp"

namespace nmfs {

/// True class means and covariance of a synthetic task restricted to the
/// selected columns. Column positions are resolved to original feature
/// identities through the permutation (empty = identity order), so the
/// restriction matches a model trained on the permuted dataset.
struct GenerativeRestriction {
    Eigen::VectorXd mu0;
    Eigen::VectorXd mu1;
    Eigen::MatrixXd sigma;
    std::vector<int> identities;  // original identity per selected column
};

GenerativeRestriction restrict_task(const GaussianTaskSpec& spec, const Chromosome& mask,
                                    const std::vector<int>& column_permutation = {});

/// Probability of correct classification of the rule "predict 1 when
/// w.x + b > 0" under the equal-prior two-Gaussian mixture:
/// 1/2 Phi((w.mu1+b)/s) + 1/2 Phi(-(w.mu0+b)/s), s = sqrt(w' Sigma w).
/// A degenerate rule (s = 0, e.g. zero weights) scores 0.5.
double linear_rule_pcc(const Eigen::VectorXd& w, double b, const GenerativeRestriction& gen);

/// Monte-Carlo counterpart of linear_rule_pcc: n_samples/2 noiseless points
/// per class drawn from the restricted generative model and classified by the
/// rule. Sampling is split into n_shards streams with derived sub-seeds; the
/// estimate is the sample-weighted mean over shards, deterministic in
/// (seed, n_shards) regardless of n_threads.
double linear_rule_pcc_mc(const Eigen::VectorXd& w, double b, const GenerativeRestriction& gen,
                          std::int64_t n_samples, std::uint64_t seed, int n_shards = 16,
                          int n_threads = 1);

double conditional_pcc_closed_form(const LdaModel& model, const Chromosome& mask,
                                   const GaussianTaskSpec& spec,
                                   const std::vector<int>& column_permutation = {});

double conditional_pcc_mc(const LdaModel& model, const Chromosome& mask,
                          const GaussianTaskSpec& spec, std::int64_t n_samples,
                          std::uint64_t seed, const std::vector<int>& column_permutation = {},
                          int n_shards = 16, int n_threads = 1);

/// Per-fold values of one metric with their mean and sample standard
/// deviation (n-1 denominator), always recomputable from the stored folds.
struct MetricSummary {
    std::vector<double> folds;
    double mean = 0.0;
    double sd = 0.0;

    static MetricSummary from_folds(std::vector<double> fold_values);
};

struct CrossValReport {
    MetricSummary balanced_accuracy;
    MetricSummary sensitivity;
    MetricSummary specificity;
    MetricSummary auc;
    int n_folds = 0;
};

/// Everything measured about one experiment cell. Optional members are
/// engaged when the corresponding evaluation applies (PCC oracles for
/// synthetic tasks, cross-validated metrics for real data).
struct ExperimentResult {
    Chromosome selected_mask;
    std::optional<double> pcc_mc;
    std::optional<double> pcc_closed;
    std::optional<CrossValReport> metrics;
    std::optional<int> informative_recovered;
    double runtime_seconds = 0.0;
    std::map<std::string, std::string> config_echo;

    nlohmann::json to_json() const;
    static ExperimentResult from_json(const nlohmann::json& j);

    static std::string csv_header();
    std::string csv_row() const;
};

/// Stratified k-fold evaluation of one feature subset: LDA is trained per
/// fold on the noisy labels of the training split and scored on the held-out
/// fold against clean labels. Folds are stratified on clean labels so every
/// held-out fold contains both classes.
ExperimentResult cross_validated_report(const Dataset& ds, const Chromosome& mask, int k,
                                        std::uint64_t seed, double shrinkage = 0.1);

/// Number of truly informative features among the selected columns, resolved
/// through the dataset's recorded column permutation. Errors when the dataset
/// carries no generative provenance.
int score_feature_recovery(const Chromosome& mask, const Dataset& ds);

}  // namespace nmfs
