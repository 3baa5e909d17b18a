#include "loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lda.hpp"
#include "rng.hpp"

namespace nmfs {

LossKind parse_loss_kind(const std::string& name) {
    if (name == "BA") return LossKind::BA;
    if (name == "CE") return LossKind::CE;
    if (name == "SCE") return LossKind::SCE;
    if (name == "GCE") return LossKind::GCE;
    if (name == "JOL") return LossKind::JOL;
    if (name == "PL") return LossKind::PL;
    if (name == "CWD") return LossKind::CWD;
    throw std::invalid_argument("unknown loss kind '" + name +
                                "' (expected BA, CE, SCE, GCE, JOL, PL or CWD)");
}

std::string loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::BA: return "BA";
        case LossKind::CE: return "CE";
        case LossKind::SCE: return "SCE";
        case LossKind::GCE: return "GCE";
        case LossKind::JOL: return "JOL";
        case LossKind::PL: return "PL";
        case LossKind::CWD: return "CWD";
    }
    return "?";
}

double LossSpec::resolved_alpha() const {
    if (!std::isnan(alpha)) return alpha;
    return kind == LossKind::JOL ? 1.0 : 0.7;
}

double LossSpec::resolved_cwd_q() const {
    if (!std::isnan(cwd_q)) return cwd_q;
    return -2.0 / (1.0 - 2.0 * assumed_noise_rate);
}

void LossSpec::validate() const {
    if (kind == LossKind::SCE || kind == LossKind::JOL) {
        const double a = resolved_alpha();
        if (!(a >= 0.0) || (kind == LossKind::SCE && a > 1.0))
            throw std::invalid_argument("loss spec: alpha out of range");
    }
    if (kind == LossKind::GCE && !(q > 0.0 && q <= 1.0))
        throw std::invalid_argument("loss spec: GCE q must lie in (0,1]");
    if (kind == LossKind::JOL && !(beta >= 0.0))
        throw std::invalid_argument("loss spec: JOL beta must be >= 0");
    if (kind == LossKind::CWD && !(assumed_noise_rate >= 0.0 && assumed_noise_rate < 0.5))
        throw std::invalid_argument("loss spec: assumed_noise_rate must lie in [0, 0.5)");
}

void PredictionBatch::validate() const {
    const Eigen::Index m = probs.size();
    if (m == 0) throw std::invalid_argument("prediction batch: empty");
    if (scores.size() != m || static_cast<Eigen::Index>(noisy_labels.size()) != m)
        throw std::invalid_argument("prediction batch: length mismatch");
    for (Eigen::Index i = 0; i < m; ++i)
        if (!(probs[i] > 0.0 && probs[i] < 1.0) || !std::isfinite(scores[i]))
            throw std::invalid_argument("prediction batch: probabilities must be clamped to (0,1)");
    for (int y : noisy_labels)
        if (y != 0 && y != 1) throw std::invalid_argument("prediction batch: labels must be 0/1");
}

namespace {

int hard_prediction(double prob) { return prob > 0.5 ? 1 : 0; }

double ce_term(double prob, int label) {
    return label == 1 ? -std::log(prob) : -std::log(1.0 - prob);
}

double balanced_accuracy_of(const Eigen::VectorXd& probs, const std::vector<int>& labels) {
    long tp = 0, tn = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const int pred = hard_prediction(probs[i]);
        if (labels[i] == 1)
            (pred == 1 ? tp : fn)++;
        else
            (pred == 0 ? tn : fp)++;
    }
    if (tp + fn == 0 || tn + fp == 0)
        throw std::invalid_argument("balanced accuracy: both classes required");
    const double sen = static_cast<double>(tp) / static_cast<double>(tp + fn);
    const double spe = static_cast<double>(tn) / static_cast<double>(tn + fp);
    return 0.5 * (sen + spe);
}

double peer_loss_expectation(const PredictionBatch& b) {
    const Eigen::Index m = b.probs.size();
    long mism = 0, pred1 = 0, lab1 = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const int pred = hard_prediction(b.probs[i]);
        pred1 += pred;
        lab1 += b.noisy_labels[i];
        mism += pred != b.noisy_labels[i];
    }
    const double n = static_cast<double>(m);
    const double first = static_cast<double>(mism) / n;
    // Decoupled term: sum over y of P(label=y) * P(prediction != y).
    const double p_lab1 = static_cast<double>(lab1) / n;
    const double p_pred1 = static_cast<double>(pred1) / n;
    const double second = (1.0 - p_lab1) * p_pred1 + p_lab1 * (1.0 - p_pred1);
    return first - second;
}

double peer_loss_sampled(const LossSpec& spec, const PredictionBatch& b) {
    const Eigen::Index m = b.probs.size();
    Rng rng(derive_seed(spec.peer_seed, {kRoleSample}));
    double total = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto n1 = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m)));
        const auto n2 = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(m)));
        const int own = hard_prediction(b.probs[i]) != b.noisy_labels[i];
        const int peer = hard_prediction(b.probs[n1]) != b.noisy_labels[n2];
        total += own - peer;
    }
    return total / static_cast<double>(m);
}

}  // namespace

double eval_loss(const LossSpec& spec, const PredictionBatch& batch) {
    spec.validate();
    batch.validate();
    const Eigen::Index m = batch.probs.size();
    const double n = static_cast<double>(m);

    switch (spec.kind) {
        case LossKind::BA:
            return 1.0 - balanced_accuracy_of(batch.probs, batch.noisy_labels);

        case LossKind::CE: {
            double s = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) s += ce_term(batch.probs[i], batch.noisy_labels[i]);
            return s / n;
        }

        case LossKind::SCE: {
            const double a = spec.resolved_alpha();
            double s = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                const double h = batch.probs[i];
                s += batch.noisy_labels[i] == 1 ? -a * std::log(h) : -(1.0 - a) * std::log(1.0 - h);
            }
            return s / n;
        }

        case LossKind::GCE: {
            double s = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                const double h = batch.noisy_labels[i] == 1 ? batch.probs[i] : 1.0 - batch.probs[i];
                s += (1.0 - std::pow(h, spec.q)) / spec.q;
            }
            return s / n;
        }

        case LossKind::JOL: {
            if (batch.model_weights.size() == 0)
                throw std::invalid_argument("JOL loss: model weights required");
            double ce = 0.0, mean_h = 0.0, mean_y = 0.0;
            for (Eigen::Index i = 0; i < m; ++i) {
                ce += ce_term(batch.probs[i], batch.noisy_labels[i]);
                mean_h += batch.probs[i];
                mean_y += batch.noisy_labels[i];
            }
            ce /= n;
            mean_h = clamp_probability(mean_h / n);
            mean_y /= n;
            // KL from the empirical label distribution to the mean prediction.
            double kl = 0.0;
            if (mean_y > 0.0) kl += mean_y * std::log(mean_y / mean_h);
            if (mean_y < 1.0) kl += (1.0 - mean_y) * std::log((1.0 - mean_y) / (1.0 - mean_h));
            const double param = batch.model_weights.squaredNorm();
            return ce + spec.resolved_alpha() * kl + spec.beta * param;
        }

        case LossKind::PL:
            return spec.peer_sampled ? peer_loss_sampled(spec, batch)
                                     : peer_loss_expectation(batch);

        case LossKind::CWD: {
            if (batch.model_weights.size() == 0 || batch.centroid_estimate.size() == 0)
                throw std::invalid_argument("CWD loss: model weights and centroid estimate required");
            if (batch.centroid_estimate.size() != batch.model_weights.size())
                throw std::invalid_argument("CWD loss: centroid/weights dimension mismatch");
            const double mean_sq = batch.scores.squaredNorm() / n;
            return mean_sq + 1.0 +
                   spec.resolved_cwd_q() * batch.centroid_estimate.dot(batch.model_weights);
        }
    }
    throw std::logic_error("eval_loss: unreachable");
}

Eigen::VectorXd estimate_centroid(const Eigen::MatrixXd& x, const std::vector<int>& noisy_labels,
                                  double assumed_noise_rate) {
    if (static_cast<Eigen::Index>(noisy_labels.size()) != x.rows())
        throw std::invalid_argument("estimate_centroid: label count mismatch");
    if (x.rows() == 0) throw std::invalid_argument("estimate_centroid: empty input");
    if (!(assumed_noise_rate >= 0.0 && assumed_noise_rate < 0.5))
        throw std::invalid_argument("estimate_centroid: assumed_noise_rate must lie in [0, 0.5)");
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        mu += (2.0 * noisy_labels[i] - 1.0) * x.row(i).transpose();
    mu /= static_cast<double>(x.rows());
    return mu / (1.0 - 2.0 * assumed_noise_rate);
}

MetricSuite metric_suite(const Eigen::VectorXd& probs, double threshold,
                         const std::vector<int>& true_labels) {
    const Eigen::Index m = probs.size();
    if (static_cast<Eigen::Index>(true_labels.size()) != m)
        throw std::invalid_argument("metric_suite: length mismatch");
    long tp = 0, tn = 0, fp = 0, fn = 0;
    for (Eigen::Index i = 0; i < m; ++i) {
        const int pred = probs[i] > threshold ? 1 : 0;
        if (true_labels[i] == 1)
            (pred == 1 ? tp : fn)++;
        else
            (pred == 0 ? tn : fp)++;
    }
    const long npos = tp + fn, nneg = tn + fp;
    if (npos == 0 || nneg == 0)
        throw std::invalid_argument("metric_suite: both classes required");

    MetricSuite out;
    out.sensitivity = static_cast<double>(tp) / static_cast<double>(npos);
    out.specificity = static_cast<double>(tn) / static_cast<double>(nneg);
    out.balanced_accuracy = 0.5 * (out.sensitivity + out.specificity);

    // Mann-Whitney AUC via average ranks; ties contribute one half.
    std::vector<Eigen::Index> order(m);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index a, Eigen::Index b) { return probs[a] < probs[b]; });
    double rank_sum_pos = 0.0;
    Eigen::Index i = 0;
    while (i < m) {
        Eigen::Index j = i;
        while (j + 1 < m && probs[order[j + 1]] == probs[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
        for (Eigen::Index t = i; t <= j; ++t)
            if (true_labels[order[t]] == 1) rank_sum_pos += avg_rank;
        i = j + 1;
    }
    out.auc = (rank_sum_pos - 0.5 * static_cast<double>(npos) * static_cast<double>(npos + 1)) /
              (static_cast<double>(npos) * static_cast<double>(nneg));
    return out;
}

}  // namespace nmfs
