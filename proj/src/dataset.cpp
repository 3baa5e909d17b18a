#include "dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "rng.hpp"
#include "stats.hpp"
#include "textio.hpp"

namespace nmfs {

void Dataset::validate() const {
    const int n = rows();
    const int d = cols();
    if (n < 2) throw std::invalid_argument("dataset: need at least 2 samples");
    if (d < 1) throw std::invalid_argument("dataset: need at least 1 feature");
    if (static_cast<int>(noisy_labels.size()) != n)
        throw std::invalid_argument("dataset: noisy_labels length mismatch");
    if (!clean_labels.empty() && static_cast<int>(clean_labels.size()) != n)
        throw std::invalid_argument("dataset: clean_labels length mismatch");
    bool has0 = false, has1 = false;
    for (int y : noisy_labels) {
        if (y != 0 && y != 1) throw std::invalid_argument("dataset: labels must be 0/1");
        (y == 0 ? has0 : has1) = true;
    }
    if (!has0 || !has1)
        throw std::invalid_argument("dataset: both classes must be present");
    if (!features.allFinite())
        throw std::invalid_argument("dataset: non-finite feature value");
    if (!column_permutation.empty() && static_cast<int>(column_permutation.size()) != d)
        throw std::invalid_argument("dataset: column_permutation length mismatch");
}

void GaussianTaskSpec::validate() const {
    if (k_informative < 1 || k_informative > d_total)
        throw std::invalid_argument("task spec: need 1 <= k_informative <= d_total");
    if (mean_shift.size() != k_informative)
        throw std::invalid_argument("task spec: mean_shift length must equal k_informative");
    if (covariance.rows() != k_informative || covariance.cols() != k_informative)
        throw std::invalid_argument("task spec: covariance must be k x k");
    if (!covariance.isApprox(covariance.transpose(), 1e-12))
        throw std::invalid_argument("task spec: covariance must be symmetric");
    Eigen::LLT<Eigen::MatrixXd> llt(covariance);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("task spec: covariance must be positive-definite");
    if (!(target_bayes_error > 0.0 && target_bayes_error < 0.5))
        throw std::invalid_argument("task spec: target_bayes_error must lie in (0, 0.5)");
}

Eigen::VectorXd GaussianTaskSpec::calibrated_shift() const {
    validate();
    const double raw = std::sqrt(
        mean_shift.dot(covariance.llt().solve(mean_shift)));
    if (!(raw > 0.0))
        throw std::invalid_argument(
            "task spec: zero mean shift cannot be scaled to a Bayes error below 0.5");
    // Separation delta with Phi(-delta/2) == target.
    const double delta = 2.0 * normal_quantile(1.0 - target_bayes_error);
    return mean_shift * (delta / raw);
}

GaussianTaskSpec GaussianTaskSpec::equicorrelated(int d_total, int k_informative,
                                                  double target_bayes_error,
                                                  std::uint64_t seed) {
    GaussianTaskSpec spec;
    spec.d_total = d_total;
    spec.k_informative = k_informative;
    spec.mean_shift = Eigen::VectorXd::Ones(k_informative);
    spec.covariance = Eigen::MatrixXd::Constant(k_informative, k_informative, 0.7);
    spec.covariance.diagonal().setOnes();
    spec.target_bayes_error = target_bayes_error;
    spec.seed = seed;
    spec.validate();
    return spec;
}

GaussianTaskSpec GaussianTaskSpec::dataset_a(std::uint64_t seed) {
    return equicorrelated(500, 6, 0.046, seed);
}

GaussianTaskSpec GaussianTaskSpec::dataset_b(std::uint64_t seed) {
    return equicorrelated(500, 7, 0.141, seed);
}

void NoiseSpec::validate() const {
    if (rho_0_to_1 < 0.0 || rho_0_to_1 > 1.0 || rho_1_to_0 < 0.0 || rho_1_to_0 > 1.0)
        throw std::invalid_argument("noise spec: rates must lie in [0,1]");
    if (!(rho_0_to_1 + rho_1_to_0 < 1.0))
        throw std::invalid_argument("noise spec: rate sum must be below 1 for learnability");
}

double mahalanobis_bayes_error(const Eigen::VectorXd& shift, const Eigen::MatrixXd& cov) {
    Eigen::LLT<Eigen::MatrixXd> llt(cov);
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("bayes error: covariance is not positive-definite");
    const double d2 = shift.dot(llt.solve(shift));
    return normal_cdf(-0.5 * std::sqrt(std::max(d2, 0.0)));
}

double bayes_error(const GaussianTaskSpec& spec) {
    return mahalanobis_bayes_error(spec.calibrated_shift(), spec.covariance);
}

namespace {

std::vector<int> random_permutation(int n, Rng& rng) {
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);
    return perm;
}

}  // namespace

Dataset generate_synthetic(const GaussianTaskSpec& spec, int n_per_class) {
    spec.validate();
    if (n_per_class < 2)
        throw std::invalid_argument("generate_synthetic: need n_per_class >= 2");

    const int k = spec.k_informative;
    const int d = spec.d_total;
    const int n = 2 * n_per_class;
    const Eigen::VectorXd shift = spec.calibrated_shift();
    const Eigen::MatrixXd chol = spec.covariance.llt().matrixL();

    // Columns are built in identity order (informative first), then permuted.
    Eigen::MatrixXd x(n, d);
    Rng sample_rng(derive_seed(spec.seed, {kRoleSample}));
    Eigen::VectorXd z(k);
    for (int i = 0; i < n; ++i) {
        const double cls = i < n_per_class ? -0.5 : 0.5;
        for (int j = 0; j < k; ++j) z[j] = sample_rng.normal();
        x.row(i).head(k) = (cls * shift + chol * z).transpose();
        for (int j = k; j < d; ++j) x(i, j) = sample_rng.normal();
    }

    Rng perm_rng(derive_seed(spec.seed, {kRolePermute}));
    const std::vector<int> perm = random_permutation(d, perm_rng);

    Dataset ds;
    ds.features.resize(n, d);
    ds.feature_names.resize(d);
    ds.column_permutation = perm;
    for (int p = 0; p < d; ++p) {
        ds.features.col(p) = x.col(perm[p]);
        ds.feature_names[p] = "f" + std::to_string(perm[p]);
    }
    ds.clean_labels.assign(n, 0);
    std::fill(ds.clean_labels.begin() + n_per_class, ds.clean_labels.end(), 1);
    ds.noisy_labels = ds.clean_labels;
    ds.informative_count = k;
    ds.validate();
    return ds;
}

Dataset inject_label_noise(const Dataset& ds, const NoiseSpec& noise) {
    noise.validate();
    if (!ds.has_clean_labels())
        throw std::invalid_argument("inject_label_noise: dataset has no clean labels");

    Dataset out = ds;
    out.noisy_labels = ds.clean_labels;
    out.flipped_indices.clear();
    Rng rng(derive_seed(noise.seed, {kRoleNoise}));
    for (int i = 0; i < ds.rows(); ++i) {
        const double rate = ds.clean_labels[i] == 0 ? noise.rho_0_to_1 : noise.rho_1_to_0;
        if (rng.bernoulli(rate)) {
            out.noisy_labels[i] = 1 - out.noisy_labels[i];
            out.flipped_indices.push_back(i);
        }
    }
    out.validate();
    return out;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

int parse_binary_label(const std::string& value, int row, const std::string& column) {
    if (value == "0") return 0;
    if (value == "1") return 1;
    throw std::runtime_error("csv row " + std::to_string(row) + ", column '" + column +
                             "': expected 0/1 label, got '" + value + "'");
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::string& positive_label) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("load_csv: '" + path + "' is empty");
    const std::vector<std::string> header = split_csv_line(line);

    // Classify columns. clean_label / noisy_label are reserved names produced
    // by save_csv; anything else is a feature unless named by label_column.
    const int ncol = static_cast<int>(header.size());
    int clean_col = -1, noisy_col = -1, label_col = -1;
    std::vector<int> feature_cols;
    for (int c = 0; c < ncol; ++c) {
        if (header[c] == "clean_label") clean_col = c;
        else if (header[c] == "noisy_label") noisy_col = c;
        else if (header[c] == label_column) label_col = c;
        else feature_cols.push_back(c);
    }
    if (label_col < 0 && clean_col < 0 && noisy_col < 0)
        throw std::runtime_error("load_csv: label column '" + label_column +
                                 "' not found in '" + path + "'");
    if (feature_cols.empty())
        throw std::runtime_error("load_csv: no feature columns in '" + path + "'");

    std::vector<std::vector<double>> rows;
    std::vector<std::string> raw_labels;
    std::vector<int> clean_vals, noisy_vals;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() && in.peek() == EOF) break;  // trailing newline
        const std::vector<std::string> fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) != ncol)
            throw std::runtime_error("csv row " + std::to_string(lineno) + ": expected " +
                                     std::to_string(ncol) + " fields, got " +
                                     std::to_string(fields.size()));
        std::vector<double> vals;
        vals.reserve(feature_cols.size());
        for (int c : feature_cols) {
            const std::string& f = fields[c];
            if (f.empty())
                throw std::runtime_error("csv row " + std::to_string(lineno) + ", column '" +
                                         header[c] + "': missing value");
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v))
                throw std::runtime_error("csv row " + std::to_string(lineno) + ", column '" +
                                         header[c] + "': not a finite number: '" + f + "'");
            vals.push_back(v);
        }
        rows.push_back(std::move(vals));
        if (label_col >= 0) raw_labels.push_back(fields[label_col]);
        if (clean_col >= 0) clean_vals.push_back(parse_binary_label(fields[clean_col], lineno, "clean_label"));
        if (noisy_col >= 0) noisy_vals.push_back(parse_binary_label(fields[noisy_col], lineno, "noisy_label"));
    }

    const int n = static_cast<int>(rows.size());
    if (n < 2) throw std::runtime_error("load_csv: need at least 2 data rows, got " +
                                        std::to_string(n));

    Dataset ds;
    ds.features.resize(n, static_cast<int>(feature_cols.size()));
    for (int i = 0; i < n; ++i)
        for (std::size_t j = 0; j < feature_cols.size(); ++j) ds.features(i, j) = rows[i][j];
    for (int c : feature_cols) ds.feature_names.push_back(header[c]);

    if (label_col >= 0) {
        std::set<std::string> values(raw_labels.begin(), raw_labels.end());
        if (values.size() != 2) {
            std::string seen;
            for (const auto& v : values) seen += (seen.empty() ? "" : ", ") + v;
            throw std::runtime_error("load_csv: label column '" + label_column + "' has " +
                                     std::to_string(values.size()) +
                                     " distinct values ({" + seen + "}), expected exactly 2");
        }
        if (!values.count(positive_label))
            throw std::runtime_error("load_csv: positive label '" + positive_label +
                                     "' does not occur in column '" + label_column + "'");
        ds.clean_labels.reserve(n);
        for (const auto& v : raw_labels) ds.clean_labels.push_back(v == positive_label ? 1 : 0);
        ds.noisy_labels = ds.clean_labels;
    } else {
        if (clean_col >= 0) ds.clean_labels = clean_vals;
        ds.noisy_labels = noisy_col >= 0 ? noisy_vals : clean_vals;
    }
    ds.validate();
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot write '" + path + "'");
    for (int j = 0; j < ds.cols(); ++j) {
        if (j) out << ',';
        out << (j < static_cast<int>(ds.feature_names.size()) ? ds.feature_names[j]
                                                              : "f" + std::to_string(j));
    }
    if (ds.has_clean_labels()) out << ",clean_label";
    out << ",noisy_label\n";
    for (int i = 0; i < ds.rows(); ++i) {
        for (int j = 0; j < ds.cols(); ++j) {
            if (j) out << ',';
            out << format_double(ds.features(i, j));
        }
        if (ds.has_clean_labels()) out << ',' << ds.clean_labels[i];
        out << ',' << ds.noisy_labels[i] << '\n';
    }
    if (!out) throw std::runtime_error("save_csv: write to '" + path + "' failed");
}

Dataset augment_noise_features(const Dataset& ds, int count, std::uint64_t seed) {
    if (count < 0) throw std::invalid_argument("augment_noise_features: count must be >= 0");
    const int n = ds.rows();
    const int d = ds.cols();
    const int d_new = d + count;

    Eigen::MatrixXd extended(n, d_new);
    extended.leftCols(d) = ds.features;
    Rng sample_rng(derive_seed(seed, {kRoleSample}));
    for (int j = d; j < d_new; ++j)
        for (int i = 0; i < n; ++i) extended(i, j) = sample_rng.normal();

    // Identities of the pre-permutation columns: existing identities for the
    // original block, fresh identities d.. for the appended block.
    std::vector<int> identity(d_new);
    for (int c = 0; c < d; ++c) identity[c] = ds.identity_of(c);
    for (int c = d; c < d_new; ++c) identity[c] = c;
    std::vector<std::string> names(d_new);
    for (int c = 0; c < d; ++c)
        names[c] = c < static_cast<int>(ds.feature_names.size()) ? ds.feature_names[c]
                                                                 : "f" + std::to_string(c);
    for (int c = d; c < d_new; ++c) names[c] = "noise" + std::to_string(c - d);

    Rng perm_rng(derive_seed(seed, {kRolePermute}));
    const std::vector<int> perm = random_permutation(d_new, perm_rng);

    Dataset out = ds;
    out.features.resize(n, d_new);
    out.feature_names.resize(d_new);
    out.column_permutation.resize(d_new);
    for (int p = 0; p < d_new; ++p) {
        out.features.col(p) = extended.col(perm[p]);
        out.feature_names[p] = names[perm[p]];
        out.column_permutation[p] = identity[perm[p]];
    }
    if (out.informative_count == 0) out.informative_count = d;
    out.validate();
    return out;
}

FoldAssignment stratified_kfold(const std::vector<int>& labels, int k, std::uint64_t seed) {
    if (k < 2) throw std::invalid_argument("stratified_kfold: need k >= 2");
    const int n = static_cast<int>(labels.size());
    std::vector<int> class_members[2];
    for (int i = 0; i < n; ++i) {
        if (labels[i] != 0 && labels[i] != 1)
            throw std::invalid_argument("stratified_kfold: labels must be 0/1");
        class_members[labels[i]].push_back(i);
    }
    for (int c = 0; c < 2; ++c)
        if (static_cast<int>(class_members[c].size()) < k)
            throw std::invalid_argument("stratified_kfold: class " + std::to_string(c) +
                                        " has " + std::to_string(class_members[c].size()) +
                                        " members, fewer than k=" + std::to_string(k));

    FoldAssignment fa;
    fa.n_folds = k;
    fa.fold_index.assign(n, -1);
    for (int c = 0; c < 2; ++c) {
        Rng rng(derive_seed(seed, {kRoleFolds, static_cast<std::uint64_t>(c)}));
        rng.shuffle(class_members[c]);
        for (std::size_t i = 0; i < class_members[c].size(); ++i)
            fa.fold_index[class_members[c][i]] = static_cast<int>(i % k);
    }
    return fa;
}

FoldAssignment stratified_kfold(const Dataset& ds, int k, std::uint64_t seed) {
    return stratified_kfold(ds.noisy_labels, k, seed);
}

}  // namespace nmfs
