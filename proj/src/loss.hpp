#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace nmfs {

/// The seven fitness criteria. Every kind maps a prediction batch to a scalar
/// where lower is better; BA is reported as 1 - balanced accuracy.
enum class LossKind { BA, CE, SCE, GCE, JOL, PL, CWD };

LossKind parse_loss_kind(const std::string& name);
std::string loss_kind_name(LossKind kind);

struct LossSpec {
    LossKind kind = LossKind::CWD;
    // NaN fields resolve to kind-specific defaults at evaluation time.
    double alpha = std::numeric_limits<double>::quiet_NaN();  // SCE weight / JOL penalty weight
    double beta = 0.1;                                        // JOL parameter-penalty weight
    double q = 0.7;                                           // GCE exponent, (0,1]
    double cwd_q = std::numeric_limits<double>::quiet_NaN();  // CWD constant Q
    double assumed_noise_rate = 0.0;                          // CWD centroid correction, [0,0.5)
    bool peer_sampled = false;  // literal random-peer form of PL instead of the expectation form
    std::uint64_t peer_seed = 0;

    void validate() const;
    double resolved_alpha() const;  // SCE: 0.7, JOL: 1.0
    double resolved_cwd_q() const;  // -2 / (1 - 2 * assumed_noise_rate)
};

/// Predictions of one evaluation batch. scores are the raw linear values
/// w.x + b (used by CWD); probs are their clamped logistics. model_weights
/// and centroid_estimate are required by JOL / CWD respectively.
struct PredictionBatch {
    Eigen::VectorXd probs;
    Eigen::VectorXd scores;
    std::vector<int> noisy_labels;
    Eigen::VectorXd model_weights;      // empty unless supplied
    Eigen::VectorXd centroid_estimate;  // empty unless supplied

    void validate() const;
};

/// Scalar fitness of the batch under the chosen criterion; lower is better.
double eval_loss(const LossSpec& spec, const PredictionBatch& batch);

/// Noise-corrected signed class centroid: mean of (2y-1) x divided by
/// (1 - 2 assumed_noise_rate).
Eigen::VectorXd estimate_centroid(const Eigen::MatrixXd& x, const std::vector<int>& noisy_labels,
                                  double assumed_noise_rate);

struct MetricSuite {
    double balanced_accuracy = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double auc = 0.0;
};

/// Confusion-matrix metrics at the given probability threshold plus
/// Mann-Whitney AUC (ties count one half). Requires both classes.
MetricSuite metric_suite(const Eigen::VectorXd& probs, double threshold,
                         const std::vector<int>& true_labels);

}  // namespace nmfs
