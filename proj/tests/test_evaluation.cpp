#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dataset.hpp"
#include "evaluation.hpp"
#include "rng.hpp"
#include "stats.hpp"

using namespace nmfs;

TEST_CASE("task restriction resolves identities and fills the block structure") {
    const auto spec = GaussianTaskSpec::equicorrelated(6, 2, 0.1, 3);
    const Eigen::VectorXd shift = spec.calibrated_shift();

    const Chromosome mask{1, 1, 0, 0, 1, 0};
    const GenerativeRestriction gen = restrict_task(spec, mask);
    CHECK(gen.identities == std::vector<int>{0, 1, 4});
    CHECK(gen.mu1[0] == doctest::Approx(0.5 * shift[0]).epsilon(1e-15));
    CHECK(gen.mu1[1] == doctest::Approx(0.5 * shift[1]).epsilon(1e-15));
    CHECK(gen.mu1[2] == 0.0);
    CHECK((gen.mu0 + gen.mu1).norm() == 0.0);
    CHECK(gen.sigma(0, 0) == 1.0);
    CHECK(gen.sigma(0, 1) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(gen.sigma(1, 0) == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(gen.sigma(2, 2) == 1.0);
    CHECK(gen.sigma(0, 2) == 0.0);
    CHECK(gen.sigma(2, 1) == 0.0);
}

TEST_CASE("task restriction honours a column permutation") {
    const auto spec = GaussianTaskSpec::equicorrelated(6, 2, 0.1, 3);
    const Eigen::VectorXd shift = spec.calibrated_shift();

    const std::vector<int> perm{3, 0, 5, 1, 2, 4};  // position -> identity
    const Chromosome mask{1, 1, 0, 0, 0, 0};
    const GenerativeRestriction gen = restrict_task(spec, mask, perm);
    CHECK(gen.identities == std::vector<int>{3, 0});
    CHECK(gen.mu1[0] == 0.0);  // identity 3 carries no signal
    CHECK(gen.mu1[1] == doctest::Approx(0.5 * shift[0]).epsilon(1e-15));
    CHECK(gen.sigma(0, 0) == 1.0);
    CHECK(gen.sigma(1, 1) == 1.0);
    CHECK(gen.sigma(0, 1) == 0.0);

    const Chromosome wrong_length{1, 0};
    CHECK_THROWS_AS(restrict_task(spec, wrong_length), std::invalid_argument);
    // out-of-range identities are detected when the position is selected
    const std::vector<int> bad_perm{9, 0, 5, 1, 2, 4};
    CHECK_THROWS_AS(restrict_task(spec, mask, bad_perm), std::invalid_argument);
}

TEST_CASE("linear rule correctness probability on a scalar task") {
    GenerativeRestriction gen;
    gen.mu0 = Eigen::VectorXd::Constant(1, -1.0);
    gen.mu1 = Eigen::VectorXd::Constant(1, 1.0);
    gen.sigma = Eigen::MatrixXd::Identity(1, 1);

    const Eigen::VectorXd w = Eigen::VectorXd::Ones(1);
    CHECK(linear_rule_pcc(w, 0.0, gen) ==
          doctest::Approx(0.841344746068542949).epsilon(1e-13));

    // flipping the rule flips the correctness probability
    CHECK(linear_rule_pcc(-w, 0.0, gen) ==
          doctest::Approx(1.0 - 0.841344746068542949).epsilon(1e-13));

    // a degenerate rule cannot beat coin flipping
    CHECK(linear_rule_pcc(Eigen::VectorXd::Zero(1), 0.3, gen) == 0.5);

    const Eigen::VectorXd too_long = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(linear_rule_pcc(too_long, 0.0, gen), std::invalid_argument);
}

TEST_CASE("the generative-optimal rule attains one minus the Bayes error") {
    const auto spec = GaussianTaskSpec::equicorrelated(10, 4, 0.07, 9);
    const Chromosome all_ones(10, 1);
    const GenerativeRestriction gen = restrict_task(spec, all_ones);

    const Eigen::VectorXd w = gen.sigma.ldlt().solve(gen.mu1 - gen.mu0);
    const double pcc = linear_rule_pcc(w, 0.0, gen);
    CHECK(pcc == doctest::Approx(1.0 - 0.07).epsilon(1e-9));

    // any other linear rule does worse
    Eigen::VectorXd off = w;
    off[0] += 1.5;
    off[9] -= 2.0;
    CHECK(linear_rule_pcc(off, 0.0, gen) < pcc);
}

TEST_CASE("Monte-Carlo correctness estimate matches the closed form") {
    const auto spec = GaussianTaskSpec::equicorrelated(8, 3, 0.1, 5);
    const Chromosome mask{1, 1, 1, 1, 0, 1, 0, 0};
    const GenerativeRestriction gen = restrict_task(spec, mask);

    Eigen::VectorXd w = gen.sigma.ldlt().solve(gen.mu1 - gen.mu0);
    w[0] *= 1.3;  // deliberately suboptimal rule with a bias term
    const double b = 0.1;

    const double closed = linear_rule_pcc(w, b, gen);
    const double mc = linear_rule_pcc_mc(w, b, gen, 200000, 42, 16, 4);
    CHECK(std::abs(mc - closed) < 0.005);  // ~4 sigma at 2e5 samples

    // deterministic in (seed, n_shards) no matter how many threads run it
    CHECK(linear_rule_pcc_mc(w, b, gen, 200000, 42, 16, 1) == mc);
    CHECK(linear_rule_pcc_mc(w, b, gen, 200000, 42, 16, 8) == mc);
    CHECK(linear_rule_pcc_mc(w, b, gen, 200000, 42, 5, 4) != mc);
    CHECK(linear_rule_pcc_mc(w, b, gen, 200000, 43, 16, 4) != mc);

    CHECK_THROWS_AS(linear_rule_pcc_mc(w, b, gen, 1, 42), std::invalid_argument);
    CHECK_THROWS_AS(linear_rule_pcc_mc(w, b, gen, 1000, 42, 0), std::invalid_argument);

    GenerativeRestriction indefinite = gen;
    indefinite.sigma = Eigen::MatrixXd::Ones(5, 5) * 2.0;
    indefinite.sigma.diagonal().setOnes();
    CHECK_THROWS_AS(linear_rule_pcc_mc(w, b, indefinite, 1000, 42), std::runtime_error);
}

TEST_CASE("conditional correctness of a fitted model via both oracles") {
    const auto spec = GaussianTaskSpec::equicorrelated(8, 3, 0.12, 7);
    const Dataset ds = generate_synthetic(spec, 400);

    // select the three informative columns wherever the permutation put them
    Chromosome mask(8, 0);
    for (int j = 0; j < ds.cols(); ++j)
        if (ds.identity_of(j) < 3) mask[j] = 1;

    Eigen::MatrixXd x(ds.rows(), 3);
    int c = 0;
    for (int j = 0; j < ds.cols(); ++j)
        if (mask[j]) x.col(c++) = ds.features.col(j);
    const LdaModel model = fit_lda(x, ds.noisy_labels, 0.1);

    const double closed = conditional_pcc_closed_form(model, mask, spec, ds.column_permutation);
    const double mc =
        conditional_pcc_mc(model, mask, spec, 200000, 11, ds.column_permutation, 16, 4);
    CHECK(closed > 0.8);            // fitted on 800 clean samples
    CHECK(closed <= 1.0 - 0.12 + 1e-9);  // cannot beat the Bayes rule
    CHECK(std::abs(mc - closed) < 0.005);

    Chromosome two_cols = mask;
    two_cols[std::find(mask.begin(), mask.end(), 1) - mask.begin()] = 0;
    CHECK_THROWS_AS(conditional_pcc_closed_form(model, two_cols, spec, ds.column_permutation),
                    std::invalid_argument);
}

TEST_CASE("cross-validated report on a separable dataset") {
    const int n = 60;
    Eigen::MatrixXd x(n, 2);
    std::vector<int> labels(n);
    Rng noise(19);
    for (int i = 0; i < n; ++i) {
        labels[i] = i % 2;
        x(i, 0) = 4.0 * labels[i] + 0.001 * i;
        x(i, 1) = noise.normal();
    }
    Dataset ds;
    ds.features = x;
    ds.noisy_labels = labels;
    ds.clean_labels = labels;

    const Chromosome mask{1, 0};
    const ExperimentResult result = cross_validated_report(ds, mask, 5, 23);
    REQUIRE(result.metrics.has_value());
    const CrossValReport& m = *result.metrics;
    CHECK(m.n_folds == 5);
    REQUIRE(m.balanced_accuracy.folds.size() == 5);
    CHECK(m.balanced_accuracy.mean == 1.0);
    CHECK(m.sensitivity.mean == 1.0);
    CHECK(m.specificity.mean == 1.0);
    CHECK(m.auc.mean == 1.0);
    CHECK(m.balanced_accuracy.sd == 0.0);
    CHECK(!result.pcc_mc.has_value());
    CHECK(result.selected_mask == mask);

    // deterministic in the fold seed
    const ExperimentResult again = cross_validated_report(ds, mask, 5, 23);
    CHECK(again.metrics->auc.folds == m.auc.folds);
}

TEST_CASE("cross-validated report near chance on pure noise") {
    const int n = 200;
    Eigen::MatrixXd x(n, 1);
    std::vector<int> labels(n);
    Rng noise(31);
    for (int i = 0; i < n; ++i) {
        labels[i] = i % 2;
        x(i, 0) = noise.normal();
    }
    Dataset ds;
    ds.features = x;
    ds.noisy_labels = labels;
    ds.clean_labels = labels;

    const Chromosome mask{1};
    const ExperimentResult result = cross_validated_report(ds, mask, 5, 7);
    CHECK(result.metrics->balanced_accuracy.mean > 0.35);
    CHECK(result.metrics->balanced_accuracy.mean < 0.65);
}

TEST_CASE("cross-validated report input validation") {
    Eigen::MatrixXd x(6, 1);
    x << 0, 1, 2, 3, 4, 5;
    Dataset no_clean;
    no_clean.features = x;
    no_clean.noisy_labels = {0, 1, 0, 1, 0, 1};
    const Chromosome mask{1};
    CHECK_THROWS_AS(cross_validated_report(no_clean, mask, 2, 1), std::invalid_argument);

    Dataset ok = no_clean;
    ok.clean_labels = ok.noisy_labels;
    const Chromosome empty_mask{0};
    CHECK_THROWS_AS(cross_validated_report(ok, empty_mask, 2, 1), std::invalid_argument);
    const Chromosome long_mask{1, 1};
    CHECK_THROWS_AS(cross_validated_report(ok, long_mask, 2, 1), std::invalid_argument);
}

TEST_CASE("metric summary stays recomputable from its folds") {
    const MetricSummary s = MetricSummary::from_folds({0.5, 0.7, 0.9});
    CHECK(s.mean == doctest::Approx(0.7).epsilon(1e-15));
    CHECK(s.sd == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(s.mean == doctest::Approx(mean(s.folds)).epsilon(1e-15));
    CHECK(s.sd == doctest::Approx(sample_sd(s.folds)).epsilon(1e-15));

    const MetricSummary single = MetricSummary::from_folds({0.4});
    CHECK(single.sd == 0.0);
    CHECK_THROWS_AS(MetricSummary::from_folds({}), std::invalid_argument);
}

TEST_CASE("experiment result JSON round trip") {
    ExperimentResult r;
    r.selected_mask = {0, 1, 0, 0, 1, 1};
    r.pcc_mc = 0.87125;
    r.pcc_closed = 0.8741923456789;
    CrossValReport m;
    m.n_folds = 3;
    m.balanced_accuracy = MetricSummary::from_folds({0.9, 0.85, 0.95});
    m.sensitivity = MetricSummary::from_folds({1.0, 0.9, 0.8});
    m.specificity = MetricSummary::from_folds({0.7, 0.8, 0.9});
    m.auc = MetricSummary::from_folds({0.99, 0.97, 0.98});
    r.metrics = m;
    r.informative_recovered = 2;
    r.runtime_seconds = 1.25;
    r.config_echo = {{"seed", "3"}, {"task", "synthA"}};

    const std::string text = r.to_json().dump(2);
    const ExperimentResult back = ExperimentResult::from_json(nlohmann::json::parse(text));
    CHECK(back.selected_mask == r.selected_mask);
    CHECK(back.pcc_mc == r.pcc_mc);
    CHECK(back.pcc_closed == r.pcc_closed);
    REQUIRE(back.metrics.has_value());
    CHECK(back.metrics->n_folds == 3);
    CHECK(back.metrics->balanced_accuracy.folds == m.balanced_accuracy.folds);
    CHECK(back.metrics->auc.mean == m.auc.mean);
    CHECK(back.informative_recovered == r.informative_recovered);
    CHECK(back.runtime_seconds == r.runtime_seconds);
    CHECK(back.config_echo == r.config_echo);

    // absent optionals survive as null
    ExperimentResult sparse;
    sparse.selected_mask = {1};
    const ExperimentResult sparse_back = ExperimentResult::from_json(sparse.to_json());
    CHECK(!sparse_back.pcc_mc.has_value());
    CHECK(!sparse_back.metrics.has_value());
    CHECK(!sparse_back.informative_recovered.has_value());

    nlohmann::json bad = r.to_json();
    bad["selected_indices"] = std::vector<int>{99};
    CHECK_THROWS_AS(ExperimentResult::from_json(bad), std::invalid_argument);
}

TEST_CASE("experiment result CSV rendering") {
    ExperimentResult r;
    r.selected_mask = {0, 1, 0, 1, 0};
    r.pcc_mc = 0.5;
    const std::string header = ExperimentResult::csv_header();
    const std::string row = r.csv_row();
    CHECK(std::count(header.begin(), header.end(), ',') ==
          std::count(row.begin(), row.end(), ','));
    CHECK(row == "2,1;3,0.5,,,,,,,,,,,0");
}

TEST_CASE("informative-feature recovery through the permutation") {
    const auto spec = GaussianTaskSpec::equicorrelated(8, 3, 0.1, 21);
    const Dataset ds = generate_synthetic(spec, 5);
    REQUIRE(ds.informative_count == 3);

    Chromosome exact(8, 0);
    Chromosome noise_only(8, 0);
    for (int j = 0; j < ds.cols(); ++j)
        (ds.identity_of(j) < 3 ? exact : noise_only)[j] = 1;
    CHECK(score_feature_recovery(exact, ds) == 3);
    CHECK(score_feature_recovery(noise_only, ds) == 0);

    Dataset unlabeled;
    unlabeled.features = Eigen::MatrixXd::Zero(2, 8);
    unlabeled.noisy_labels = {0, 1};
    const Chromosome any(8, 1);
    CHECK_THROWS_AS(score_feature_recovery(any, unlabeled), std::invalid_argument);
}

TEST_CASE("recovery of random masks matches the hypergeometric mean") {
    Dataset ds;
    ds.features = Eigen::MatrixXd::Zero(2, 50);
    ds.noisy_labels = {0, 1};
    ds.informative_count = 10;

    Rng rng(77);
    std::vector<int> indices(50);
    std::iota(indices.begin(), indices.end(), 0);
    double total = 0.0;
    for (int t = 0; t < 400; ++t) {
        rng.shuffle(indices);
        Chromosome mask(50, 0);
        for (int j = 0; j < 20; ++j) mask[indices[j]] = 1;
        total += score_feature_recovery(mask, ds);
    }
    const double mean_recovered = total / 400.0;  // E = 20 * 10/50 = 4
    CHECK(mean_recovered >= 3.72);
    CHECK(mean_recovered <= 4.28);
}
