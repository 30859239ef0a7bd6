#include "mccop/baselines/baselines.hpp"

#include "mccop/gradcore/adam.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace mccop {

namespace {

void check_common(int steps, double tau, int target, const char* who) {
    if (steps < 1 && std::string(who) != "ga") throw ConfigError(std::string(who) + ": steps must be >= 1");
    if (!(tau > 0.5 && tau <= 1.0)) throw ConfigError(std::string(who) + ": tau must be in (0.5, 1]");
    if (target != 1 && target != -1) throw ConfigError(std::string(who) + ": target must be +1 or -1");
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void close_timing(CounterfactualResult& r, std::chrono::steady_clock::time_point t0) {
    r.duration_s = seconds_since(t0);
    r.phases.other = std::max(0.0, r.duration_s - r.phases.gradient - r.phases.projection - r.phases.reencode);
}

}  // namespace

void GdConfig::validate() const {
    check_common(steps, tau, target, "gd");
    if (learning_rate < 0.0) throw ConfigError("gd: learning_rate must be >= 0");
}

void HillClimbConfig::validate() const { check_common(steps, tau, target, "hill-climb"); }

void GaConfig::validate() const {
    check_common(1, tau, target, "ga");
    if (population < 2) throw ConfigError("ga: population must be >= 2");
    if (generations < 0) throw ConfigError("ga: generations must be >= 0");
    if (crossover_rate < 0.0 || crossover_rate > 1.0) throw ConfigError("ga: crossover_rate must be in [0, 1]");
    if (edit_penalty < 0.0) throw ConfigError("ga: edit_penalty must be >= 0");
    if (elite_fraction < 0.0 || elite_fraction >= 1.0) throw ConfigError("ga: elite_fraction must be in [0, 1)");
    if (tournament < 1 || tournament > population) throw ConfigError("ga: tournament size must be in [1, population]");
    if (min_mutations < 0 || max_mutations < min_mutations) throw ConfigError("ga: bad mutation count range");
}

CounterfactualResult gd_counterfactual(const Embedding& z_orig, const TrainedPredictor& p, const Codebook& codebook,
                                       const GdConfig& cfg) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    CounterfactualResult r;
    r.method = "gd";
    r.mask_union.assign(static_cast<std::size_t>(z_orig.rows()), true);
    {
        PhaseTimer timer(r.phases.reencode);
        r.original = decode(z_orig, codebook);
        r.confidence_trace.push_back(predict_proba(p, z_orig, cfg.target));
    }
    struct Bce {
        double y;
        double value(double f, const Embedding&) const { return log1p_exp(f) - y * f; }
        double dlogit(double f, const Embedding&) const { return logistic(f) - y; }
        Embedding dz(double, const Embedding& z) const { return Embedding::Zero(z.rows(), z.cols()); }
    };
    const Bce loss{cfg.target > 0 ? 1.0 : 0.0};
    AdamHyperparams hp;
    hp.learning_rate = cfg.learning_rate;
    AdamMoments<Embedding> mom;

    Embedding z = z_orig;
    Embedding best = z_orig;
    ResidueSequence best_seq = r.original;
    double best_conf = r.confidence_trace.front();
    bool stopped = false;
    for (int t = 1; t <= cfg.steps; ++t) {
        {
            PhaseTimer timer(r.phases.gradient);
            const auto g = grad_input(p.params, z, p.pad, loss);
            if (!std::isfinite(g.value) || !g.gradient.allFinite()) break;  // keep best so far
            adam_update(z, g.gradient, mom, hp, t);
        }
        r.steps_used = t;
        double conf;
        ResidueSequence seq;
        {
            PhaseTimer timer(r.phases.reencode);
            conf = predict_proba(p, z, cfg.target);
            seq = decode(z, codebook);
        }
        r.confidence_trace.push_back(conf);
        if (conf >= cfg.tau || conf > best_conf) {
            best_conf = conf;
            best = z;
            best_seq = std::move(seq);
        }
        if (conf >= cfg.tau) {
            stopped = true;
            break;
        }
    }
    r.final_embedding = std::move(best);
    r.decoded = std::move(best_seq);
    r.final_confidence = best_conf;
    const bool reached = stopped;
    r.success = reached && r.decoded != r.original;
    r.adversarial = reached && !r.success;
    finalize_result(r);
    close_timing(r, t0);
    return r;
}

double sequence_confidence(const ResidueSequence& seq, const TrainedPredictor& p, const Codebook& codebook,
                           int target) {
    return predict_proba(p, encode_exact(seq, codebook), target);
}

namespace {

// A different residue at `pos`, uniform over the other A - 1 letters.
char other_residue(char current, Index alphabet, Rng& rng) {
    std::uniform_int_distribution<Index> pick(0, alphabet - 2);
    Index a = pick(rng);
    if (a >= residue_index(current)) ++a;
    return kAlphabet[static_cast<std::size_t>(a)];
}

ResidueSequence point_mutation(const ResidueSequence& s, Index alphabet, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pos(0, s.size() - 1);
    const std::size_t i = pos(rng);
    return s.with(i, other_residue(s[i], alphabet, rng));
}

}  // namespace

CounterfactualResult hill_climb(const ResidueSequence& original, const TrainedPredictor& p, const Codebook& codebook,
                                const HillClimbConfig& cfg, Rng& rng, std::vector<double>* accepted) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    CounterfactualResult r;
    r.method = "hill_climb";
    r.original = original;
    ResidueSequence current = original;
    double conf;
    {
        PhaseTimer timer(r.phases.reencode);
        conf = sequence_confidence(current, p, codebook, cfg.target);
    }
    r.confidence_trace.push_back(conf);
    if (accepted) accepted->assign(1, conf);
    for (int t = 1; t <= cfg.steps && conf < cfg.tau; ++t) {
        const auto candidate = point_mutation(current, codebook.alphabet_size(), rng);
        double c;
        {
            PhaseTimer timer(r.phases.reencode);
            c = sequence_confidence(candidate, p, codebook, cfg.target);
        }
        r.steps_used = t;
        if (c > conf) {
            current = candidate;
            conf = c;
            if (accepted) accepted->push_back(conf);
        }
        r.confidence_trace.push_back(conf);
    }
    r.decoded = current;
    r.final_confidence = conf;
    finalize_result(r);
    r.success = conf >= cfg.tau && r.edit_distance >= 1;
    r.adversarial = false;
    close_timing(r, t0);
    return r;
}

double ga_fitness(const ResidueSequence& seq, const ResidueSequence& original, const TrainedPredictor& p,
                  const Codebook& codebook, double lambda, int target) {
    const auto d = hamming(seq, original);
    return sequence_confidence(seq, p, codebook, target) - lambda * static_cast<double>(d);
}

namespace {

struct Individual {
    ResidueSequence seq;
    double conf = 0.0;
    double fitness = 0.0;
};

}  // namespace

CounterfactualResult genetic_algorithm(const ResidueSequence& original, const TrainedPredictor& p,
                                       const Codebook& codebook, const GaConfig& cfg, Rng& rng,
                                       std::vector<double>* best_fitness) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();
    CounterfactualResult r;
    r.method = "ga";
    r.original = original;
    const Index A = codebook.alphabet_size();
    const std::size_t L = original.size();
    const auto N = static_cast<std::size_t>(cfg.population);
    const auto n_elite = static_cast<std::size_t>(std::ceil(cfg.elite_fraction * static_cast<double>(N)));
    std::uniform_int_distribution<int> n_mut(cfg.min_mutations, cfg.max_mutations);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);

    auto mutate = [&](ResidueSequence s) {
        const int m = n_mut(rng);
        for (int j = 0; j < m; ++j) s = point_mutation(s, A, rng);
        return s;
    };
    // batched zero-jitter scoring of the individuals not yet evaluated
    auto evaluate = [&](std::vector<Individual>& pop, std::size_t from) {
        PhaseTimer timer(r.phases.reencode);
        std::vector<Embedding> zs;
        for (std::size_t i = from; i < pop.size(); ++i) zs.push_back(encode_exact(pop[i].seq, codebook));
        const auto f = predict_logits(p, zs);
        for (std::size_t i = from; i < pop.size(); ++i) {
            pop[i].conf = logistic(static_cast<double>(cfg.target) * f[i - from]);
            pop[i].fitness =
                pop[i].conf - cfg.edit_penalty * static_cast<double>(hamming(pop[i].seq, original));
        }
    };
    auto best_of = [](const std::vector<Individual>& pop) {
        std::size_t b = 0;
        for (std::size_t i = 1; i < pop.size(); ++i)
            if (pop[i].fitness > pop[b].fitness) b = i;
        return b;
    };
    auto any_reached = [&](const std::vector<Individual>& pop) {
        return std::any_of(pop.begin(), pop.end(), [&](const auto& x) { return x.conf >= cfg.tau; });
    };

    std::vector<Individual> pop;
    for (std::size_t i = 0; i < N; ++i) pop.push_back({mutate(original), 0.0, 0.0});
    evaluate(pop, 0);
    if (best_fitness) best_fitness->assign(1, pop[best_of(pop)].fitness);
    r.confidence_trace.push_back(pop[best_of(pop)].conf);

    for (int g = 1; g <= cfg.generations && !any_reached(pop); ++g) {
        std::vector<std::size_t> order(N);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pop[a].fitness > pop[b].fitness; });
        std::vector<Individual> next;
        for (std::size_t e = 0; e < n_elite; ++e) next.push_back(pop[order[e]]);
        auto tournament = [&]() -> const Individual& {
            std::size_t winner = pick(rng);
            for (int j = 1; j < cfg.tournament; ++j) {
                const std::size_t c = pick(rng);
                if (pop[c].fitness > pop[winner].fitness) winner = c;
            }
            return pop[winner];
        };
        while (next.size() < N) {
            const Individual& a = tournament();
            const Individual& b = tournament();
            std::string child = a.seq.str();
            if (L > 1 && unit(rng) < cfg.crossover_rate) {
                std::uniform_int_distribution<std::size_t> cut_dist(1, L - 1);
                const std::size_t cut = cut_dist(rng);
                child = a.seq.str().substr(0, cut) + b.seq.str().substr(cut);
            }
            next.push_back({mutate(ResidueSequence(std::move(child))), 0.0, 0.0});
        }
        evaluate(next, n_elite);
        pop = std::move(next);
        r.steps_used = g;
        if (best_fitness) best_fitness->push_back(pop[best_of(pop)].fitness);
        r.confidence_trace.push_back(pop[best_of(pop)].conf);
    }

    // prefer the fittest individual among those reaching tau
    std::size_t chosen = best_of(pop);
    bool have = false;
    for (std::size_t i = 0; i < pop.size(); ++i)
        if (pop[i].conf >= cfg.tau && (!have || pop[i].fitness > pop[chosen].fitness)) {
            chosen = i;
            have = true;
        }
    r.decoded = pop[chosen].seq;
    r.final_confidence = pop[chosen].conf;
    finalize_result(r);
    r.success = r.final_confidence >= cfg.tau && r.edit_distance >= 1;
    r.adversarial = false;
    close_timing(r, t0);
    return r;
}

}  // namespace mccop
