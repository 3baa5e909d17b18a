#include "lda.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stats.hpp"

namespace nmfs {

double clamp_probability(double p) {
    return std::clamp(p, kProbClamp, 1.0 - kProbClamp);
}

Eigen::VectorXd LdaModel::decision_scores(const Eigen::MatrixXd& x) const {
    if (x.cols() != weights.size())
        throw std::invalid_argument("lda: feature count " + std::to_string(x.cols()) +
                                    " does not match model dimension " +
                                    std::to_string(weights.size()));
    return (x * weights).array() + bias;
}

Eigen::VectorXd LdaModel::predict_proba(const Eigen::MatrixXd& x) const {
    Eigen::VectorXd s = decision_scores(x);
    for (Eigen::Index i = 0; i < s.size(); ++i) s[i] = clamp_probability(logistic(s[i]));
    return s;
}

LdaModel fit_lda(const Eigen::MatrixXd& x, const std::vector<int>& labels, double shrinkage) {
    const Eigen::Index n = x.rows();
    const Eigen::Index p = x.cols();
    if (static_cast<Eigen::Index>(labels.size()) != n)
        throw std::invalid_argument("fit_lda: label count mismatch");
    if (p < 1) throw std::invalid_argument("fit_lda: need at least one feature");
    if (shrinkage < 0.0 || shrinkage > 1.0)
        throw std::invalid_argument("fit_lda: shrinkage must lie in [0,1]");
    if (!x.allFinite()) throw std::invalid_argument("fit_lda: non-finite feature value");

    Eigen::Index n1 = 0;
    for (int y : labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("fit_lda: labels must be 0/1");
        n1 += y;
    }
    const Eigen::Index n0 = n - n1;
    if (n0 == 0 || n1 == 0)
        throw std::invalid_argument("fit_lda: both classes must be present");

    LdaModel m;
    m.shrinkage = shrinkage;
    m.prior1 = static_cast<double>(n1) / static_cast<double>(n);
    m.mean0 = Eigen::VectorXd::Zero(p);
    m.mean1 = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < n; ++i)
        (labels[i] == 0 ? m.mean0 : m.mean1) += x.row(i).transpose();
    m.mean0 /= static_cast<double>(n0);
    m.mean1 /= static_cast<double>(n1);

    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd c = x.row(i).transpose() - (labels[i] == 0 ? m.mean0 : m.mean1);
        scatter.noalias() += c * c.transpose();
    }
    m.pooled_covariance = n > 2 ? (scatter / static_cast<double>(n - 2)).eval()
                                : Eigen::MatrixXd::Zero(p, p).eval();

    Eigen::MatrixXd reg = (1.0 - shrinkage) * m.pooled_covariance;
    reg.diagonal().array() +=
        shrinkage * m.pooled_covariance.trace() / static_cast<double>(p);

    const Eigen::VectorXd diff = m.mean1 - m.mean0;
    m.weights = reg.ldlt().solve(diff);
    if (!m.weights.allFinite())
        throw std::runtime_error("fit_lda: singular regularized covariance");
    m.bias = -0.5 * m.weights.dot(m.mean0 + m.mean1) +
             std::log(m.prior1 / (1.0 - m.prior1));
    return m;
}

}  // namespace nmfs
