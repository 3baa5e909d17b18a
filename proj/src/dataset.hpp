#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace nmfs {

/// Binary classification dataset. Rows are samples, columns are features.
/// noisy_labels are what an optimizer is allowed to see; clean_labels, when
/// present, are reserved for evaluation. column_permutation maps the current
/// column position to the original feature identity assigned at construction
/// (empty means identity order). Identities below informative_count are the
/// features that actually carry class signal.
struct Dataset {
    Eigen::MatrixXd features;            // N x d
    std::vector<int> noisy_labels;       // length N, values 0/1
    std::vector<int> clean_labels;       // empty or length N
    std::vector<std::string> feature_names;
    std::vector<int> column_permutation;  // position -> original identity
    int informative_count = 0;            // 0 = unknown provenance
    std::vector<int> flipped_indices;     // rows flipped by the last noise injection

    int rows() const { return static_cast<int>(features.rows()); }
    int cols() const { return static_cast<int>(features.cols()); }
    bool has_clean_labels() const { return !clean_labels.empty(); }

    /// Original identity of the feature at column position `pos`.
    int identity_of(int pos) const {
        return column_permutation.empty() ? pos : column_permutation[pos];
    }

    /// Throws if the structural invariants are violated.
    void validate() const;
};

/// Generative model of a synthetic task: two equal-prior Gaussian classes
/// sharing `covariance` on the informative block, centered at +-shift/2,
/// plus independent standard-normal noise features. mean_shift holds the
/// unscaled direction; generation rescales it so the closed-form Bayes error
/// equals target_bayes_error.
struct GaussianTaskSpec {
    int d_total = 0;
    int k_informative = 0;
    Eigen::VectorXd mean_shift;   // length k_informative
    Eigen::MatrixXd covariance;   // k x k, symmetric positive-definite
    double target_bayes_error = 0.0;
    std::uint64_t seed = 0;

    void validate() const;

    /// mean_shift rescaled so that the Mahalanobis separation yields exactly
    /// target_bayes_error. Throws on a zero shift.
    Eigen::VectorXd calibrated_shift() const;

    /// 500-dimensional task with 6 informative features, Bayes error 0.046.
    static GaussianTaskSpec dataset_a(std::uint64_t seed);
    /// 500-dimensional task with 7 informative features, Bayes error 0.141.
    static GaussianTaskSpec dataset_b(std::uint64_t seed);
    /// Equicorrelated informative block (unit variance, pairwise correlation
    /// 0.7), mean shift along the all-ones direction.
    static GaussianTaskSpec equicorrelated(int d_total, int k_informative,
                                           double target_bayes_error, std::uint64_t seed);
};

/// Class-conditional label flip probabilities. The symmetric noise model is
/// rho_0_to_1 == rho_1_to_0.
struct NoiseSpec {
    double rho_0_to_1 = 0.0;
    double rho_1_to_0 = 0.0;
    std::uint64_t seed = 0;

    static NoiseSpec symmetric(double rho, std::uint64_t seed) { return {rho, rho, seed}; }
    void validate() const;  // rates in [0,1], sum < 1
};

struct FoldAssignment {
    std::vector<int> fold_index;  // length N, values in [0, n_folds)
    int n_folds = 0;
};

/// Bayes error of two equal-prior Gaussians with shared covariance and mean
/// difference `shift`: Phi(-sqrt(shift' cov^-1 shift) / 2).
double mahalanobis_bayes_error(const Eigen::VectorXd& shift, const Eigen::MatrixXd& cov);

/// Closed-form Bayes error of the calibrated spec; equals
/// spec.target_bayes_error by construction.
double bayes_error(const GaussianTaskSpec& spec);

/// Draws n_per_class samples per class and randomly permutes the columns,
/// recording the permutation. clean_labels are set and noisy_labels start
/// identical to them.
Dataset generate_synthetic(const GaussianTaskSpec& spec, int n_per_class);

/// Flips each label independently at its class-conditional rate. Features and
/// clean_labels are preserved; the returned dataset records which rows
/// flipped.
Dataset inject_label_noise(const Dataset& ds, const NoiseSpec& noise);

/// Strict CSV reader. Columns named clean_label / noisy_label are treated as
/// label columns, never as features. For external files, label_column names
/// the label column and positive_label the value mapped to class 1; loaded
/// labels are stored as clean_labels (noisy starts equal to clean).
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::string& positive_label);

/// Writes features plus clean_label/noisy_label columns. Numeric values use
/// shortest round-trip formatting, so write-then-read reproduces the matrix
/// bit-exactly.
void save_csv(const Dataset& ds, const std::string& path);

/// Appends `count` i.i.d. standard-normal columns, then applies a seeded
/// random permutation to all column positions. The permutation is composed
/// into column_permutation so original identities stay recoverable.
Dataset augment_noise_features(const Dataset& ds, int count, std::uint64_t seed);

/// Stratified k-fold assignment over a binary label vector; deterministic in
/// seed. Per-fold class counts differ from the exact proportion by at most
/// one sample. Throws if a class has fewer than k members.
FoldAssignment stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed);

/// Stratifies on noisy_labels (the labels an optimizer is allowed to see).
FoldAssignment stratified_kfold(const Dataset& ds, int k, std::uint64_t seed);

}  // namespace nmfs
