#pragma once

#include "mccop/latentworld/codebook.hpp"
#include "mccop/latentworld/sequence.hpp"

#include <cstdint>
#include <vector>

namespace mccop {

struct MotifSite {
    std::size_t position = 0;
    char residue = 'A';
    double weight = 1.0;
};

struct EpistaticPair {
    std::size_t pos_i = 0;
    std::size_t pos_j = 0;
    char residue_i = 'A';
    char residue_j = 'A';
    double bonus = 1.0;
};

/// Synthetic fitness landscape over fixed-length sequences plus the latent
/// geometry they are embedded with.
struct WorldConfig {
    std::size_t length = 12;
    Index dim = 48;
    Index alphabet = 20;
    double min_separation = 10.0;
    double jitter_sigma = 1.0;
    std::vector<MotifSite> motif;
    std::vector<EpistaticPair> pairs;
    double label_noise = 0.0;        // label flip probability, applied when labeling
    double plant_probability = 0.5;  // chance a motif site / pair is planted when sampling
    std::uint64_t seed = 7;          // codebook seed

    void validate() const;

    /// The world used by the default campaign.
    static WorldConfig default_world();
};

Codebook world_codebook(const WorldConfig& world);

/// Sum of matched motif weights plus matched pair bonuses. Deterministic;
/// label noise is not applied here.
double ground_truth_score(const ResidueSequence& seq, const WorldConfig& world);

/// Uniform residues with motif sites and pairs planted independently with
/// `plant_probability`.
ResidueSequence sample_sequence(const WorldConfig& world, Rng& rng);

}  // namespace mccop
