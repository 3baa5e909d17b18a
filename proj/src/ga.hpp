#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "loss.hpp"
#include "rng.hpp"

namespace nmfs {

/// Feature-membership bit-vector; mask[j] == 1 selects column j. Operators
/// never emit an all-zero mask (repair sets one random bit).
using Chromosome = std::vector<std::uint8_t>;

int popcount_mask(const Chromosome& mask);

struct Individual {
    Chromosome mask;
    double loss = std::numeric_limits<double>::infinity();  // objective 1, minimized
    int n_selected = 0;                                     // objective 2, minimized
    int rank = 0;
    double crowding = 0.0;
};

struct GaConfig {
    int population_per_niche = 100;  // even
    int niches = 4;
    int generations = 1000;
    double crossover_rate = 0.5;        // per-gene take-from-first-parent probability
    double mutation_rate = -1.0;        // per-gene flip probability; negative = 1/d
    double crossover_probability = 0.9; // per-offspring choice of crossover vs mutation
    double init_density = 0.02;
    double migration_interval_fraction = 0.05;
    double migration_fraction = 0.25;
    int cv_folds = 10;
    double shrinkage = 0.1;  // LDA regularization used in fitness evaluation
    LossSpec loss;
    std::uint64_t seed = 0;

    void validate() const;
    double resolved_mutation_rate(int d) const;
};

struct ParetoResult {
    std::vector<Individual> front;  // rank-0 of the merged niches, deduplicated by mask
    std::vector<std::vector<double>> best_loss_history;  // [niche][generation]
    GaConfig config;
};

/// Cross-validated fitness of one mask: mean held-out loss over the folds
/// (noisy labels on both sides) and the number of selected features. Folds
/// whose evaluation is degenerate (training split losing a class) are
/// skipped; if every fold is degenerate the loss is +infinity.
std::pair<double, int> evaluate_objectives(const Chromosome& mask, const Dataset& ds,
                                           const LossSpec& loss, const FoldAssignment& folds,
                                           double shrinkage);

/// Deb's fast nondominated sort, minimizing (loss, n_selected). Writes ranks
/// back and returns the fronts as index lists.
std::vector<std::vector<int>> fast_nondominated_sort(std::vector<Individual>& pop);

/// Deb's crowding distance for one front (indices into pop); written back.
void assign_crowding(std::vector<Individual>& pop, const std::vector<int>& front);

/// Runs nondominated sort plus crowding on the whole population.
void rank_population(std::vector<Individual>& pop);

/// Binary crowded tournament: two uniform draws; lower rank wins, then larger
/// crowding, then the first drawn.
int tournament_select(const std::vector<Individual>& pop, Rng& rng);

Chromosome binomial_crossover(const Chromosome& a, const Chromosome& b, double crossover_rate,
                              Rng& rng);

Chromosome mutate(const Chromosome& mask, double mutation_rate, Rng& rng);

/// Ring migration: each niche sends copies of its top ceil(fraction*C)
/// individuals (crowded-comparison order) to the next niche, overwriting that
/// niche's bottom slots. Population sizes are unchanged. No-op for a single
/// niche. Requires ranked populations.
void migrate(std::vector<std::vector<Individual>>& niches, double fraction);

/// Full multi-niche NSGA-II run. Deterministic in (ds, config) regardless of
/// n_threads, which only parallelizes fitness evaluations.
ParetoResult run_nmfs_ga(const Dataset& ds, const GaConfig& config, int n_threads = 1);

/// Front member with minimum loss; ties broken by fewer features, then by
/// lexicographically smallest mask (feature index 0 first).
const Individual& select_final(const ParetoResult& result);

}  // namespace nmfs
