#include "ga.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lda.hpp"
#include "parallel.hpp"
#include "stats.hpp"

namespace nmfs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// a dominates b under minimization of (loss, n_selected).
bool dominates(const Individual& a, const Individual& b) {
    if (a.loss > b.loss || a.n_selected > b.n_selected) return false;
    return a.loss < b.loss || a.n_selected < b.n_selected;
}

/// Total order used for environmental truncation and migration: better rank
/// first, then larger crowding, then lower loss, then fewer features. Stable
/// sorting keeps the original slot order for full ties.
bool crowded_before(const Individual& a, const Individual& b) {
    if (a.rank != b.rank) return a.rank < b.rank;
    if (a.crowding != b.crowding) return a.crowding > b.crowding;
    if (a.loss != b.loss) return a.loss < b.loss;
    return a.n_selected < b.n_selected;
}

void repair_empty(Chromosome& mask, Rng& rng) {
    for (std::uint8_t gene : mask)
        if (gene) return;
    mask[rng.below(mask.size())] = 1;
}

/// ceil(fraction * total) with a guard against representation noise pushing
/// an exact product like 0.05 * 1000 past its integer value.
int count_from_fraction(double fraction, int total) {
    const int count = static_cast<int>(std::ceil(fraction * static_cast<double>(total) - 1e-9));
    return std::max(1, count);
}

std::vector<int> crowded_order(const std::vector<Individual>& pop) {
    std::vector<int> order(pop.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&pop](int i, int j) { return crowded_before(pop[i], pop[j]); });
    return order;
}

/// NSGA-II environmental selection: fill whole fronts from the combined
/// parent+offspring pool, truncating the last front by crowding.
std::vector<Individual> environmental_selection(std::vector<Individual>& combined, int capacity) {
    const auto fronts = fast_nondominated_sort(combined);
    std::vector<Individual> survivors;
    survivors.reserve(capacity);
    for (const auto& front : fronts) {
        assign_crowding(combined, front);
        if (static_cast<int>(survivors.size() + front.size()) <= capacity) {
            for (int idx : front) survivors.push_back(combined[idx]);
            if (static_cast<int>(survivors.size()) == capacity) break;
            continue;
        }
        std::vector<int> ordered = front;
        std::stable_sort(ordered.begin(), ordered.end(), [&combined](int i, int j) {
            return crowded_before(combined[i], combined[j]);
        });
        const int need = capacity - static_cast<int>(survivors.size());
        for (int k = 0; k < need; ++k) survivors.push_back(combined[ordered[k]]);
        break;
    }
    return survivors;
}

}  // namespace

int popcount_mask(const Chromosome& mask) {
    int count = 0;
    for (std::uint8_t gene : mask) count += gene != 0;
    return count;
}

void GaConfig::validate() const {
    if (population_per_niche < 2 || population_per_niche % 2 != 0)
        throw std::invalid_argument("population_per_niche must be even and at least 2");
    if (niches < 1) throw std::invalid_argument("niches must be at least 1");
    if (generations < 1) throw std::invalid_argument("generations must be at least 1");
    if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0))
        throw std::invalid_argument("crossover_rate must lie in [0, 1]");
    if (mutation_rate >= 0.0 && mutation_rate > 1.0)
        throw std::invalid_argument("mutation_rate must lie in [0, 1] or be negative for 1/d");
    if (std::isnan(mutation_rate))
        throw std::invalid_argument("mutation_rate must lie in [0, 1] or be negative for 1/d");
    if (!(crossover_probability >= 0.0 && crossover_probability <= 1.0))
        throw std::invalid_argument("crossover_probability must lie in [0, 1]");
    if (!(init_density > 0.0 && init_density < 1.0))
        throw std::invalid_argument("init_density must lie in (0, 1)");
    if (!(migration_interval_fraction > 0.0 && migration_interval_fraction <= 1.0))
        throw std::invalid_argument("migration_interval_fraction must lie in (0, 1]");
    if (!(migration_fraction > 0.0 && migration_fraction <= 1.0))
        throw std::invalid_argument("migration_fraction must lie in (0, 1]");
    if (cv_folds < 2) throw std::invalid_argument("cv_folds must be at least 2");
    if (!(shrinkage >= 0.0 && shrinkage <= 1.0))
        throw std::invalid_argument("shrinkage must lie in [0, 1]");
    loss.validate();
}

double GaConfig::resolved_mutation_rate(int d) const {
    if (d < 1) throw std::invalid_argument("dimension must be positive");
    return mutation_rate < 0.0 ? 1.0 / d : mutation_rate;
}

std::pair<double, int> evaluate_objectives(const Chromosome& mask, const Dataset& ds,
                                           const LossSpec& loss, const FoldAssignment& folds,
                                           double shrinkage) {
    if (static_cast<int>(mask.size()) != ds.cols())
        throw std::invalid_argument("mask length does not match dataset width");
    if (static_cast<int>(folds.fold_index.size()) != ds.rows())
        throw std::invalid_argument("fold assignment does not cover the dataset");

    const int n_selected = popcount_mask(mask);
    if (n_selected == 0) return {kInf, 0};

    std::vector<int> cols;
    cols.reserve(n_selected);
    for (int j = 0; j < ds.cols(); ++j)
        if (mask[j]) cols.push_back(j);

    const int n = ds.rows();
    Eigen::MatrixXd x(n, n_selected);
    for (int c = 0; c < n_selected; ++c) x.col(c) = ds.features.col(cols[c]);

    std::vector<double> fold_losses;
    fold_losses.reserve(folds.n_folds);
    for (int f = 0; f < folds.n_folds; ++f) {
        std::vector<int> train_rows;
        std::vector<int> test_rows;
        train_rows.reserve(n);
        for (int i = 0; i < n; ++i)
            (folds.fold_index[i] == f ? test_rows : train_rows).push_back(i);
        if (test_rows.empty() || train_rows.size() < 2) continue;

        Eigen::MatrixXd x_train(train_rows.size(), n_selected);
        std::vector<int> y_train(train_rows.size());
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
            x_train.row(i) = x.row(train_rows[i]);
            y_train[i] = ds.noisy_labels[train_rows[i]];
        }
        Eigen::MatrixXd x_test(test_rows.size(), n_selected);
        std::vector<int> y_test(test_rows.size());
        for (std::size_t i = 0; i < test_rows.size(); ++i) {
            x_test.row(i) = x.row(test_rows[i]);
            y_test[i] = ds.noisy_labels[test_rows[i]];
        }

        try {
            const LdaModel model = fit_lda(x_train, y_train, shrinkage);
            PredictionBatch batch;
            batch.scores = model.decision_scores(x_test);
            batch.probs = model.predict_proba(x_test);
            batch.noisy_labels = y_test;
            batch.model_weights = model.weights;
            if (loss.kind == LossKind::CWD) {
                // Model output on the signed-target scale, so the squared
                // term matches the +1 = E[s^2] constant; the cross term uses
                // the discriminant coefficients and a centroid estimated on
                // the same held-out fold the loss is scored on.
                batch.scores = (2.0 * batch.probs.array() - 1.0).matrix();
                batch.model_weights = model.weights;
                batch.centroid_estimate = estimate_centroid(x_test, y_test, loss.assumed_noise_rate);
            }
            fold_losses.push_back(eval_loss(loss, batch));
        } catch (const std::exception&) {
            continue;  // degenerate fold (single-class split, singular fit)
        }
    }
    if (fold_losses.empty()) return {kInf, n_selected};
    return {mean(fold_losses), n_selected};
}

std::vector<std::vector<int>> fast_nondominated_sort(std::vector<Individual>& pop) {
    const int n = static_cast<int>(pop.size());
    std::vector<std::vector<int>> dominated(n);
    std::vector<int> domination_count(n, 0);
    std::vector<std::vector<int>> fronts;
    fronts.emplace_back();

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            if (dominates(pop[i], pop[j]))
                dominated[i].push_back(j);
            else if (dominates(pop[j], pop[i]))
                ++domination_count[i];
        }
        if (domination_count[i] == 0) {
            pop[i].rank = 0;
            fronts[0].push_back(i);
        }
    }

    int current = 0;
    while (!fronts[current].empty()) {
        std::vector<int> next;
        for (int i : fronts[current]) {
            for (int j : dominated[i]) {
                if (--domination_count[j] == 0) {
                    pop[j].rank = current + 1;
                    next.push_back(j);
                }
            }
        }
        ++current;
        fronts.push_back(std::move(next));
    }
    fronts.pop_back();  // the loop always leaves one empty front at the tail
    return fronts;
}

void assign_crowding(std::vector<Individual>& pop, const std::vector<int>& front) {
    if (front.empty()) return;
    if (front.size() <= 2) {
        for (int idx : front) pop[idx].crowding = kInf;
        return;
    }
    for (int idx : front) pop[idx].crowding = 0.0;

    const auto accumulate_objective = [&pop, &front](auto key) {
        std::vector<int> order = front;
        std::stable_sort(order.begin(), order.end(),
                         [&pop, &key](int i, int j) { return key(pop[i]) < key(pop[j]); });
        pop[order.front()].crowding = kInf;
        pop[order.back()].crowding = kInf;
        const double range = key(pop[order.back()]) - key(pop[order.front()]);
        if (!(range > 0.0) || !std::isfinite(range)) return;
        for (std::size_t k = 1; k + 1 < order.size(); ++k)
            pop[order[k]].crowding += (key(pop[order[k + 1]]) - key(pop[order[k - 1]])) / range;
    };
    accumulate_objective([](const Individual& ind) { return ind.loss; });
    accumulate_objective([](const Individual& ind) { return static_cast<double>(ind.n_selected); });
}

void rank_population(std::vector<Individual>& pop) {
    const auto fronts = fast_nondominated_sort(pop);
    for (const auto& front : fronts) assign_crowding(pop, front);
}

int tournament_select(const std::vector<Individual>& pop, Rng& rng) {
    if (pop.empty()) throw std::invalid_argument("tournament over an empty population");
    const int i = static_cast<int>(rng.below(pop.size()));
    const int j = static_cast<int>(rng.below(pop.size()));
    if (pop[j].rank < pop[i].rank) return j;
    if (pop[j].rank == pop[i].rank && pop[j].crowding > pop[i].crowding) return j;
    return i;
}

Chromosome binomial_crossover(const Chromosome& a, const Chromosome& b, double crossover_rate,
                              Rng& rng) {
    if (a.size() != b.size()) throw std::invalid_argument("parent masks differ in length");
    if (a.empty()) throw std::invalid_argument("parent masks are empty");
    Chromosome child(a.size());
    for (std::size_t j = 0; j < a.size(); ++j)
        child[j] = rng.bernoulli(crossover_rate) ? a[j] : b[j];
    repair_empty(child, rng);
    return child;
}

Chromosome mutate(const Chromosome& mask, double mutation_rate, Rng& rng) {
    if (mask.empty()) throw std::invalid_argument("mask is empty");
    Chromosome child = mask;
    for (std::size_t j = 0; j < child.size(); ++j)
        if (rng.bernoulli(mutation_rate)) child[j] ^= 1;
    repair_empty(child, rng);
    return child;
}

void migrate(std::vector<std::vector<Individual>>& niches, double fraction) {
    if (!(fraction > 0.0 && fraction <= 1.0))
        throw std::invalid_argument("migration fraction must lie in (0, 1]");
    const int m = static_cast<int>(niches.size());
    if (m < 2) return;

    // Select every migrant set from the pre-migration populations before any
    // replacement happens, so the ring direction cannot chain copies.
    std::vector<std::vector<Individual>> migrants(m);
    std::vector<std::vector<int>> orders(m);
    for (int i = 0; i < m; ++i) {
        if (niches[i].empty()) throw std::invalid_argument("migration over an empty niche");
        orders[i] = crowded_order(niches[i]);
        const int count = count_from_fraction(fraction, static_cast<int>(niches[i].size()));
        migrants[i].reserve(count);
        for (int k = 0; k < count && k < static_cast<int>(orders[i].size()); ++k)
            migrants[i].push_back(niches[i][orders[i][k]]);
    }
    for (int i = 0; i < m; ++i) {
        const int dst = (i + 1) % m;
        auto& receiver = niches[dst];
        const auto& order = orders[dst];
        const int count =
            std::min(static_cast<int>(migrants[i].size()), static_cast<int>(order.size()));
        for (int k = 0; k < count; ++k) {
            const int victim = order[static_cast<int>(order.size()) - 1 - k];
            receiver[victim] = migrants[i][k];
        }
    }
}

ParetoResult run_nmfs_ga(const Dataset& ds, const GaConfig& config, int n_threads) {
    ds.validate();
    config.validate();
    const int d = ds.cols();
    const int pop_size = config.population_per_niche;
    const int n_niches = config.niches;
    const int n_generations = config.generations;
    const double mutation_rate = config.resolved_mutation_rate(d);

    const FoldAssignment folds =
        stratified_kfold(ds, config.cv_folds, derive_seed(config.seed, {kRoleFolds}));

    const auto evaluate_all = [&](std::vector<Individual>& pop) {
        parallel_for(0, static_cast<int>(pop.size()), n_threads, [&](int i) {
            const auto [loss_value, count] =
                evaluate_objectives(pop[i].mask, ds, config.loss, folds, config.shrinkage);
            pop[i].loss = loss_value;
            pop[i].n_selected = count;
        });
    };

    std::vector<std::vector<Individual>> niches(n_niches);
    for (int m = 0; m < n_niches; ++m) {
        Rng rng(derive_seed(config.seed, {static_cast<std::uint64_t>(m), 0, kRoleInit}));
        auto& pop = niches[m];
        pop.resize(pop_size);
        for (auto& ind : pop) {
            ind.mask.assign(d, 0);
            for (int j = 0; j < d; ++j)
                if (rng.bernoulli(config.init_density)) ind.mask[j] = 1;
            repair_empty(ind.mask, rng);
        }
        evaluate_all(pop);
        rank_population(pop);
    }

    const int migration_interval =
        count_from_fraction(config.migration_interval_fraction, n_generations);

    ParetoResult result;
    result.config = config;
    result.best_loss_history.assign(n_niches, {});
    for (auto& history : result.best_loss_history) history.reserve(n_generations);

    for (int g = 1; g <= n_generations; ++g) {
        for (int m = 0; m < n_niches; ++m) {
            auto& pop = niches[m];
            Rng rng(derive_seed(config.seed,
                                {static_cast<std::uint64_t>(m), static_cast<std::uint64_t>(g),
                                 kRoleBreed}));
            std::vector<Individual> offspring(pop_size);
            for (auto& child : offspring) {
                if (rng.bernoulli(config.crossover_probability)) {
                    const int a = tournament_select(pop, rng);
                    const int b = tournament_select(pop, rng);
                    child.mask = binomial_crossover(pop[a].mask, pop[b].mask,
                                                    config.crossover_rate, rng);
                } else {
                    const int a = tournament_select(pop, rng);
                    child.mask = mutate(pop[a].mask, mutation_rate, rng);
                }
            }
            evaluate_all(offspring);

            std::vector<Individual> combined;
            combined.reserve(2 * pop_size);
            combined.insert(combined.end(), pop.begin(), pop.end());
            combined.insert(combined.end(), std::make_move_iterator(offspring.begin()),
                            std::make_move_iterator(offspring.end()));
            pop = environmental_selection(combined, pop_size);
            rank_population(pop);

            double best = kInf;
            for (const auto& ind : pop) best = std::min(best, ind.loss);
            result.best_loss_history[m].push_back(best);
        }
        if (n_niches >= 2 && g % migration_interval == 0) {
            migrate(niches, config.migration_fraction);
            for (auto& pop : niches) rank_population(pop);
        }
    }

    std::vector<Individual> merged;
    merged.reserve(static_cast<std::size_t>(n_niches) * pop_size);
    for (const auto& pop : niches) merged.insert(merged.end(), pop.begin(), pop.end());
    const auto fronts = fast_nondominated_sort(merged);
    assign_crowding(merged, fronts.front());

    result.front.reserve(fronts.front().size());
    for (int idx : fronts.front()) {
        const auto& candidate = merged[idx];
        const bool seen = std::any_of(result.front.begin(), result.front.end(),
                                      [&candidate](const Individual& kept) {
                                          return kept.mask == candidate.mask;
                                      });
        if (!seen) result.front.push_back(candidate);
    }
    return result;
}

const Individual& select_final(const ParetoResult& result) {
    if (result.front.empty()) throw std::invalid_argument("empty Pareto front");
    const Individual* best = &result.front.front();
    for (const auto& ind : result.front) {
        if (ind.loss != best->loss) {
            if (ind.loss < best->loss) best = &ind;
            continue;
        }
        if (ind.n_selected != best->n_selected) {
            if (ind.n_selected < best->n_selected) best = &ind;
            continue;
        }
        if (std::lexicographical_compare(ind.mask.begin(), ind.mask.end(), best->mask.begin(),
                                         best->mask.end()))
            best = &ind;
    }
    return *best;
}

}  // namespace nmfs
