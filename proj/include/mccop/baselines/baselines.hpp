#pragma once

#include "mccop/optimizer/result.hpp"
#include "mccop/predictor/predictor.hpp"

#include <cstdint>
#include <vector>

namespace mccop {

struct GdConfig {
    double learning_rate = 1e-2;
    int steps = 50;
    double tau = 0.95;
    int target = +1;

    void validate() const;
};

/// Adam on z minimizing BCE toward the target class; no mask, reset or
/// projection. Stops at the first iterate reaching tau, otherwise returns the
/// highest-confidence iterate. Success and adversarial follow the optimizer's
/// rules.
CounterfactualResult gd_counterfactual(const Embedding& z_orig, const TrainedPredictor& p, const Codebook& codebook,
                                       const GdConfig& cfg);

struct HillClimbConfig {
    int steps = 50;
    double tau = 0.95;
    int target = +1;

    void validate() const;
};

/// Target-class probability of the zero-jitter encoding.
double sequence_confidence(const ResidueSequence& seq, const TrainedPredictor& p, const Codebook& codebook,
                           int target);

/// One random substitution per step (a different residue at a uniform
/// position), kept only if confidence strictly improves. `accepted` receives
/// the confidence after the start and after every accepted move.
CounterfactualResult hill_climb(const ResidueSequence& original, const TrainedPredictor& p, const Codebook& codebook,
                                const HillClimbConfig& cfg, Rng& rng, std::vector<double>* accepted = nullptr);

struct GaConfig {
    int population = 40;
    int generations = 30;
    double crossover_rate = 0.5;
    double edit_penalty = 0.02;
    double tau = 0.95;
    double elite_fraction = 0.2;
    int tournament = 3;
    int min_mutations = 1;
    int max_mutations = 2;
    int target = +1;

    void validate() const;
};

/// conf - lambda * hamming(seq, original).
double ga_fitness(const ResidueSequence& seq, const ResidueSequence& original, const TrainedPredictor& p,
                  const Codebook& codebook, double lambda, int target = +1);

/// Elitist GA with tournament selection and single-point crossover. Stops
/// after `generations` rounds of reproduction or once any individual reaches
/// tau. `best_fitness` receives the best population fitness per evaluated
/// generation (initial population first).
CounterfactualResult genetic_algorithm(const ResidueSequence& original, const TrainedPredictor& p,
                                       const Codebook& codebook, const GaConfig& cfg, Rng& rng,
                                       std::vector<double>* best_fitness = nullptr);

}  // namespace mccop
