#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "loss.hpp"

using namespace nmfs;

namespace {

PredictionBatch make_batch(std::vector<double> probs, std::vector<int> labels) {
    PredictionBatch b;
    b.probs = Eigen::Map<Eigen::VectorXd>(probs.data(), probs.size());
    b.scores = Eigen::VectorXd::Zero(probs.size());
    for (Eigen::Index i = 0; i < b.probs.size(); ++i)
        b.scores[i] = std::log(b.probs[i] / (1.0 - b.probs[i]));
    b.noisy_labels = std::move(labels);
    return b;
}

LossSpec spec_of(LossKind kind) {
    LossSpec s;
    s.kind = kind;
    return s;
}

}  // namespace

TEST_CASE("loss kind names round-trip") {
    for (const char* name : {"BA", "CE", "SCE", "GCE", "JOL", "PL", "CWD"})
        CHECK(loss_kind_name(parse_loss_kind(name)) == name);
    CHECK_THROWS_AS(parse_loss_kind("MSE"), std::invalid_argument);
}

TEST_CASE("cross-entropy reference values") {
    CHECK(eval_loss(spec_of(LossKind::CE), make_batch({0.9}, {1})) ==
          doctest::Approx(0.105360515657826301).epsilon(1e-14));
    CHECK(eval_loss(spec_of(LossKind::CE), make_batch({0.9, 0.2}, {1, 0})) ==
          doctest::Approx(0.164252033486018028).epsilon(1e-14));
    // label flip with probability flip is a symmetry
    CHECK(eval_loss(spec_of(LossKind::CE), make_batch({0.1}, {0})) ==
          doctest::Approx(0.105360515657826301).epsilon(1e-14));
}

TEST_CASE("symmetric cross-entropy weights the two label terms") {
    CHECK(eval_loss(spec_of(LossKind::SCE), make_batch({0.9}, {1})) ==
          doctest::Approx(0.073752360960478411).epsilon(1e-14));  // alpha = 0.7 default
    CHECK(eval_loss(spec_of(LossKind::SCE), make_batch({0.2}, {0})) ==
          doctest::Approx(0.066943065394262927).epsilon(1e-14));  // (1-alpha) ln(1-h)
    LossSpec custom = spec_of(LossKind::SCE);
    custom.alpha = 1.0;
    CHECK(eval_loss(custom, make_batch({0.9, 0.4}, {1, 1})) ==
          eval_loss(spec_of(LossKind::CE), make_batch({0.9, 0.4}, {1, 1})));
}

TEST_CASE("generalized cross-entropy value and CE limit") {
    CHECK(eval_loss(spec_of(LossKind::GCE), make_batch({0.9}, {1})) ==
          doctest::Approx(0.101569003306612812).epsilon(1e-14));  // q = 0.7 default
    LossSpec q1 = spec_of(LossKind::GCE);
    q1.q = 1.0;
    CHECK(eval_loss(q1, make_batch({0.9}, {1})) == doctest::Approx(0.1).epsilon(1e-14));

    LossSpec tiny_q = spec_of(LossKind::GCE);
    tiny_q.q = 1e-4;
    const auto batch = make_batch({0.9, 0.35, 0.6}, {1, 0, 1});
    CHECK(std::abs(eval_loss(tiny_q, batch) -
                   eval_loss(spec_of(LossKind::CE), batch)) < 1e-3);
}

TEST_CASE("joint optimization loss combines fit, prior KL and parameter norm") {
    auto batch = make_batch({0.9}, {1});
    batch.model_weights = Eigen::VectorXd::Ones(2);
    // CE + 1.0 * KL(y_bar || h_bar) + 0.1 * |w|^2 = -2 ln 0.9 + 0.2
    CHECK(eval_loss(spec_of(LossKind::JOL), batch) ==
          doctest::Approx(0.410721031315652602).epsilon(1e-14));

    auto no_weights = make_batch({0.9}, {1});
    CHECK_THROWS_AS(eval_loss(spec_of(LossKind::JOL), no_weights), std::invalid_argument);

    // a calibrated batch (mean prediction equals label frequency) has zero KL
    auto calibrated = make_batch({0.7, 0.3}, {1, 0});
    calibrated.model_weights = Eigen::VectorXd::Zero(1);
    LossSpec plain = spec_of(LossKind::JOL);
    plain.beta = 0.0;
    const double ce = eval_loss(spec_of(LossKind::CE), calibrated);
    CHECK(eval_loss(plain, calibrated) == doctest::Approx(ce).epsilon(1e-12));
}

TEST_CASE("peer loss expectation form") {
    // preds 1,1,0 vs labels 1,0,0: mismatch 1/3, decoupled 5/9
    CHECK(eval_loss(spec_of(LossKind::PL), make_batch({0.8, 0.7, 0.3}, {1, 0, 0})) ==
          doctest::Approx(-2.0 / 9.0).epsilon(1e-14));

    // any constant predictor scores exactly zero
    for (double p : {0.9, 0.1}) {
        const auto batch = make_batch(std::vector<double>(10, p),
                                      {1, 0, 1, 1, 0, 0, 1, 0, 1, 1});
        CHECK(eval_loss(spec_of(LossKind::PL), batch) == 0.0);
    }
}

TEST_CASE("sampled peer loss approximates the expectation form") {
    std::vector<double> probs;
    std::vector<int> labels;
    for (int i = 0; i < 1000; ++i) {
        probs.push_back(i % 3 == 0 ? 0.8 : 0.3);
        labels.push_back(i % 2);
    }
    const auto batch = make_batch(probs, labels);
    const double expectation = eval_loss(spec_of(LossKind::PL), batch);

    LossSpec sampled = spec_of(LossKind::PL);
    sampled.peer_sampled = true;
    sampled.peer_seed = 3;
    const double estimate = eval_loss(sampled, batch);
    CHECK(std::abs(estimate - expectation) < 0.15);
    CHECK(eval_loss(sampled, batch) == estimate);  // deterministic in peer_seed

    LossSpec other_seed = sampled;
    other_seed.peer_seed = 4;
    CHECK(eval_loss(other_seed, batch) != estimate);
}

TEST_CASE("class-wise denoising loss reference value") {
    PredictionBatch b = make_batch({0.6}, {1});
    b.scores = Eigen::VectorXd::Constant(1, std::sqrt(0.5));
    b.model_weights = Eigen::VectorXd::Constant(1, 0.3);
    b.centroid_estimate = Eigen::VectorXd::Ones(1);
    // mean(s^2) + 1 + Q <mu, w> with Q = -2 at zero assumed noise
    CHECK(eval_loss(spec_of(LossKind::CWD), b) == doctest::Approx(0.9).epsilon(1e-14));

    LossSpec assumed = spec_of(LossKind::CWD);
    assumed.assumed_noise_rate = 0.25;
    CHECK(assumed.resolved_cwd_q() == doctest::Approx(-4.0).epsilon(1e-15));
    CHECK(eval_loss(assumed, b) == doctest::Approx(0.5 + 1.0 - 4.0 * 0.3).epsilon(1e-13));

    LossSpec pinned = spec_of(LossKind::CWD);
    pinned.cwd_q = -7.0;
    CHECK(eval_loss(pinned, b) == doctest::Approx(0.5 + 1.0 - 7.0 * 0.3).epsilon(1e-13));
}

TEST_CASE("CWD requires its auxiliaries with matching dimensions") {
    auto bare = make_batch({0.6}, {1});
    CHECK_THROWS_AS(eval_loss(spec_of(LossKind::CWD), bare), std::invalid_argument);

    auto mismatched = make_batch({0.6}, {1});
    mismatched.model_weights = Eigen::VectorXd::Ones(2);
    mismatched.centroid_estimate = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(eval_loss(spec_of(LossKind::CWD), mismatched), std::invalid_argument);
}

TEST_CASE("noise-corrected centroid estimate") {
    Eigen::MatrixXd x(1, 2);
    x << 1.0, 0.0;
    const std::vector<int> y{1};
    const Eigen::VectorXd mu = estimate_centroid(x, y, 0.25);
    CHECK(mu[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(mu[1] == 0.0);

    // scaling law: rate rho multiplies the raw centroid by 1/(1-2 rho)
    Eigen::MatrixXd x2(2, 2);
    x2 << 1.0, 0.0, 3.0, 2.0;
    const std::vector<int> y2{1, 0};
    const Eigen::VectorXd raw = estimate_centroid(x2, y2, 0.0);
    CHECK(raw[0] == doctest::Approx(-1.0).epsilon(1e-15));
    CHECK(raw[1] == doctest::Approx(-1.0).epsilon(1e-15));
    for (double rho : {0.1, 0.25, 0.4}) {
        const Eigen::VectorXd scaled = estimate_centroid(x2, y2, rho);
        CHECK((scaled - raw / (1.0 - 2.0 * rho)).norm() <= 1e-14);
    }

    // flipping a label flips its sign contribution
    const std::vector<int> y0{0};
    CHECK(estimate_centroid(x, y0, 0.0)[0] == doctest::Approx(-1.0).epsilon(1e-15));

    CHECK_THROWS_AS(estimate_centroid(x, y, 0.5), std::invalid_argument);
    const std::vector<int> too_long{1, 0};
    CHECK_THROWS_AS(estimate_centroid(x, too_long, 0.1), std::invalid_argument);
}

TEST_CASE("losses are invariant to sample order") {
    const std::vector<double> probs{0.9, 0.2, 0.65, 0.4, 0.77};
    const std::vector<int> labels{1, 0, 1, 1, 0};
    std::vector<double> probs_r(probs.rbegin(), probs.rend());
    std::vector<int> labels_r(labels.rbegin(), labels.rend());
    const auto batch = make_batch(probs, labels);
    const auto reversed = make_batch(probs_r, labels_r);
    for (LossKind kind : {LossKind::BA, LossKind::CE, LossKind::SCE, LossKind::GCE,
                          LossKind::PL})
        CHECK(eval_loss(spec_of(kind), batch) ==
              doctest::Approx(eval_loss(spec_of(kind), reversed)).epsilon(1e-12));
}

TEST_CASE("balanced accuracy loss and the metric suite") {
    // sens 1, spec 2/3 -> BA 5/6, loss 1/6
    const auto batch = make_batch({0.9, 0.8, 0.7, 0.2, 0.3, 0.6}, {1, 1, 1, 0, 0, 0});
    CHECK(eval_loss(spec_of(LossKind::BA), batch) ==
          doctest::Approx(1.0 / 6.0).epsilon(1e-14));

    const MetricSuite suite = metric_suite(batch.probs, 0.5, batch.noisy_labels);
    CHECK(suite.sensitivity == 1.0);
    CHECK(suite.specificity == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(suite.balanced_accuracy == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
}

TEST_CASE("AUC reference values, ties and monotone invariance") {
    Eigen::VectorXd separable(4);
    separable << 0.9, 0.8, 0.1, 0.2;
    const std::vector<int> y{1, 1, 0, 0};
    CHECK(metric_suite(separable, 0.5, y).auc == 1.0);

    Eigen::VectorXd mixed(4);
    mixed << 0.9, 0.4, 0.6, 0.1;  // one discordant pair of four
    CHECK(metric_suite(mixed, 0.5, y).auc == doctest::Approx(0.75).epsilon(1e-14));

    // strictly monotone transforms preserve the ranking, hence the AUC
    Eigen::VectorXd squashed = mixed;
    for (Eigen::Index i = 0; i < squashed.size(); ++i)
        squashed[i] = squashed[i] * squashed[i] * 0.5;
    CHECK(metric_suite(squashed, 0.5, y).auc ==
          doctest::Approx(0.75).epsilon(1e-14));

    Eigen::VectorXd constant = Eigen::VectorXd::Constant(4, 0.42);
    CHECK(metric_suite(constant, 0.5, y).auc == doctest::Approx(0.5).epsilon(1e-14));

    const std::vector<int> one_class{1, 1, 1, 1};
    CHECK_THROWS_AS(metric_suite(mixed, 0.5, one_class), std::invalid_argument);
}

TEST_CASE("batch validation rejects unclamped probabilities") {
    PredictionBatch b;
    b.probs = Eigen::VectorXd::Zero(1);  // exactly 0 is invalid
    b.scores = Eigen::VectorXd::Zero(1);
    b.noisy_labels = {0};
    CHECK_THROWS_AS(eval_loss(spec_of(LossKind::CE), b), std::invalid_argument);

    auto bad_label = make_batch({0.5}, {2});
    CHECK_THROWS_AS(eval_loss(spec_of(LossKind::CE), bad_label), std::invalid_argument);

    PredictionBatch empty;
    CHECK_THROWS_AS(eval_loss(spec_of(LossKind::CE), empty), std::invalid_argument);
}

TEST_CASE("loss spec validation bounds") {
    LossSpec gce = spec_of(LossKind::GCE);
    gce.q = 0.0;
    CHECK_THROWS_AS(gce.validate(), std::invalid_argument);
    gce.q = 1.5;
    CHECK_THROWS_AS(gce.validate(), std::invalid_argument);

    LossSpec sce = spec_of(LossKind::SCE);
    sce.alpha = 1.2;
    CHECK_THROWS_AS(sce.validate(), std::invalid_argument);

    LossSpec cwd = spec_of(LossKind::CWD);
    cwd.assumed_noise_rate = 0.5;
    CHECK_THROWS_AS(cwd.validate(), std::invalid_argument);

    LossSpec jol = spec_of(LossKind::JOL);
    jol.beta = -0.1;
    CHECK_THROWS_AS(jol.validate(), std::invalid_argument);
    CHECK(spec_of(LossKind::JOL).resolved_alpha() == 1.0);
    CHECK(spec_of(LossKind::SCE).resolved_alpha() == 0.7);
}
