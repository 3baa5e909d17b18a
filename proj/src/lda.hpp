#pragma once

#include <Eigen/Dense>
#include <vector>

namespace nmfs {

/// Binary LDA with shrinkage-regularized pooled covariance. The decision
/// score is w.x + b including the log-prior offset; class-1 probability is
/// the logistic of the score.
struct LdaModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    Eigen::VectorXd mean0, mean1;
    Eigen::MatrixXd pooled_covariance;  // unregularized, denominator N-2
    double shrinkage = 0.0;
    double prior1 = 0.5;

    int dim() const { return static_cast<int>(weights.size()); }

    /// Raw decision scores w.x + b for each row of x.
    Eigen::VectorXd decision_scores(const Eigen::MatrixXd& x) const;

    /// Class-1 probabilities, clamped to [1e-12, 1-1e-12].
    Eigen::VectorXd predict_proba(const Eigen::MatrixXd& x) const;
};

inline constexpr double kProbClamp = 1e-12;

double clamp_probability(double p);

/// Fits LDA on an N x p feature matrix with 0/1 labels. The pooled
/// within-class covariance uses denominator N-2 and is regularized as
/// (1-g) S + g (trace(S)/p) I before the solve. Empirical class priors.
LdaModel fit_lda(const Eigen::MatrixXd& x, const std::vector<int>& labels, double shrinkage);

}  // namespace nmfs
