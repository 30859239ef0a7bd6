#include "mccop/latentworld/world.hpp"

#include <random>
#include <string>

namespace mccop {

void WorldConfig::validate() const {
    if (length < 1) throw ConfigError("world: length must be >= 1");
    if (dim < 1) throw ConfigError("world: dim must be >= 1");
    if (alphabet < 2 || alphabet > static_cast<Index>(kAlphabet.size()))
        throw ConfigError("world: alphabet must be in [2, 20]");
    if (!(min_separation > 0.0)) throw ConfigError("world: min_separation must be positive");
    if (jitter_sigma < 0.0) throw ConfigError("world: jitter_sigma must be >= 0");
    if (!(jitter_sigma < min_separation / 2.0))
        throw ConfigError("world: jitter_sigma must be below min_separation / 2");
    if (label_noise < 0.0 || label_noise >= 1.0) throw ConfigError("world: label_noise must be in [0, 1)");
    if (plant_probability < 0.0 || plant_probability > 1.0)
        throw ConfigError("world: plant_probability must be in [0, 1]");
    auto check_residue = [&](char r) {
        const int a = residue_index(r);
        if (a < 0 || a >= alphabet) throw ConfigError(std::string("world: residue '") + r + "' outside alphabet");
    };
    for (const auto& m : motif) {
        if (m.position >= length) throw ConfigError("world: motif position out of range");
        check_residue(m.residue);
    }
    for (const auto& p : pairs) {
        if (p.pos_i >= length || p.pos_j >= length) throw ConfigError("world: pair position out of range");
        if (p.pos_i == p.pos_j) throw ConfigError("world: pair positions must differ");
        check_residue(p.residue_i);
        check_residue(p.residue_j);
    }
}

WorldConfig WorldConfig::default_world() {
    WorldConfig w;
    w.length = 12;
    // Wide separation: a spectrally normalized predictor is 1-Lipschitz, so its
    // logit range is bounded by codeword distances. One dominant site decides
    // the Otsu label; the minor terms only spread the scores.
    w.dim = 48;
    w.alphabet = 20;
    w.min_separation = 10.0;
    w.jitter_sigma = w.min_separation / 10.0;
    w.motif = {{2, 'W', 2.0}, {5, 'F', 0.5}, {9, 'L', 0.5}};
    w.pairs = {{3, 7, 'C', 'C', 0.5}};
    w.label_noise = 0.0;
    w.plant_probability = 0.5;
    w.seed = 7;
    return w;
}

Codebook world_codebook(const WorldConfig& world) {
    world.validate();
    return build_codebook(world.alphabet, world.dim, world.seed, world.min_separation);
}

double ground_truth_score(const ResidueSequence& seq, const WorldConfig& world) {
    if (seq.size() != world.length) throw DataError("score: sequence length does not match world");
    double score = 0.0;
    for (const auto& m : world.motif)
        if (seq[m.position] == m.residue) score += m.weight;
    for (const auto& p : world.pairs)
        if (seq[p.pos_i] == p.residue_i && seq[p.pos_j] == p.residue_j) score += p.bonus;
    return score;
}

ResidueSequence sample_sequence(const WorldConfig& world, Rng& rng) {
    std::uniform_int_distribution<Index> pick(0, world.alphabet - 1);
    std::bernoulli_distribution plant(world.plant_probability);
    std::string s(world.length, 'A');
    for (auto& c : s) c = kAlphabet[pick(rng)];
    for (const auto& m : world.motif)
        if (plant(rng)) s[m.position] = m.residue;
    for (const auto& p : world.pairs)
        if (plant(rng)) {
            s[p.pos_i] = p.residue_i;
            s[p.pos_j] = p.residue_j;
        }
    return ResidueSequence(std::move(s));
}

}  // namespace mccop
