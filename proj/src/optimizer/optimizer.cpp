#include "mccop/optimizer/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mccop {

void finalize_result(CounterfactualResult& r) {
    r.mutated_positions = differing_positions(r.original, r.decoded);
    r.edit_distance = r.mutated_positions.size();
    r.leakage = 0;
    if (!r.mask_union.empty())
        for (auto i : r.mutated_positions)
            if (!r.mask_union[i]) ++r.leakage;
}

void MccopConfig::validate() const {
    if (k < 1) throw ConfigError("mccop: k must be >= 1");
    if (!(tau > 0.5 && tau <= 1.0)) throw ConfigError("mccop: tau must be in (0.5, 1]");
    if (!(eta > 0.0)) throw ConfigError("mccop: eta must be positive");
    if (!(margin > 0.0)) throw ConfigError("mccop: margin must be positive");
    if (t_max < 1) throw ConfigError("mccop: t_max must be >= 1");
    if (lambda_dist < 0.0) throw ConfigError("mccop: lambda_dist must be >= 0");
    if (target != 1 && target != -1) throw ConfigError("mccop: target must be +1 or -1");
}

double margin_loss(double logit, int target, double margin) {
    return log1p_exp(margin - static_cast<double>(target) * logit);
}

namespace {

struct CfLoss {
    const Embedding& z_orig;
    double target;
    double margin;
    double lambda;

    double value(double f, const Embedding& z) const {
        return log1p_exp(margin - target * f) + lambda * (z - z_orig).squaredNorm();
    }
    double dlogit(double f, const Embedding&) const { return -target * logistic(margin - target * f); }
    Embedding dz(double, const Embedding& z) const { return 2.0 * lambda * (z - z_orig); }
};

void check_pair(const Embedding& z, const Embedding& z_orig, const TrainedPredictor& p) {
    if (z.rows() != z_orig.rows() || z.cols() != z_orig.cols()) throw ConfigError("mccop: z and z_orig differ in shape");
    if (z.rows() != p.rows || z.cols() != p.cols) throw ConfigError("mccop: embedding does not match predictor");
}

bool padded(const TrainedPredictor& p, Index i) { return !p.pad.empty() && p.pad[static_cast<std::size_t>(i)]; }

}  // namespace

double cf_loss(const Embedding& z, const Embedding& z_orig, const TrainedPredictor& p, const MccopConfig& cfg) {
    check_pair(z, z_orig, p);
    const CfLoss loss{z_orig, static_cast<double>(cfg.target), cfg.margin, cfg.lambda_dist};
    return loss.value(predict_logit(p, z), z);
}

LossGradient<double> cf_loss_gradient(const Embedding& z, const Embedding& z_orig, const TrainedPredictor& p,
                                      const MccopConfig& cfg) {
    check_pair(z, z_orig, p);
    return grad_input(p.params, z, p.pad, CfLoss{z_orig, static_cast<double>(cfg.target), cfg.margin, cfg.lambda_dist});
}

namespace {

std::vector<double> row_norms(const Embedding& g, const TrainedPredictor& p) {
    std::vector<double> s(static_cast<std::size_t>(g.rows()));
    for (Index i = 0; i < g.rows(); ++i)
        s[static_cast<std::size_t>(i)] = padded(p, i) ? -std::numeric_limits<double>::infinity() : g.row(i).norm();
    return s;
}

}  // namespace

std::vector<double> position_sensitivity(const Embedding& z, const Embedding& z_orig, const TrainedPredictor& p,
                                         const MccopConfig& cfg) {
    return row_norms(cf_loss_gradient(z, z_orig, p, cfg).gradient, p);
}

std::vector<bool> topk_mask(const std::vector<double>& s, int k) {
    if (k < 1) throw ConfigError("topk_mask: k must be >= 1");
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return s[a] > s[b]; });
    std::vector<bool> mask(s.size(), false);
    std::size_t chosen = 0;
    for (auto i : order) {
        if (chosen == static_cast<std::size_t>(k)) break;
        if (s[i] == -std::numeric_limits<double>::infinity()) break;
        mask[i] = true;
        ++chosen;
    }
    return mask;
}

Embedding mccop_step(const Embedding& z_t, const Embedding& z_orig, const TrainedPredictor& p,
                     const Codebook& codebook, const ProjectorConfig& projector, const MccopConfig& cfg, Rng& rng,
                     int step, const StepObserver& observer, PhaseTimes* phases) {
    PhaseTimes scratch;
    PhaseTimes& ph = phases ? *phases : scratch;
    Embedding reset;
    std::vector<bool> mask;
    Embedding gradient;
    {
        PhaseTimer timer(ph.gradient);
        auto g = cf_loss_gradient(z_t, z_orig, p, cfg);
        if (!g.gradient.allFinite() || !std::isfinite(g.value))
            throw CampaignError("mccop: non-finite gradient at step " + std::to_string(step));
        if (cfg.fixed_mask) {
            if (cfg.fixed_mask->size() != static_cast<std::size_t>(z_t.rows()))
                throw ConfigError("mccop: fixed mask length does not match embedding");
            mask = *cfg.fixed_mask;
            for (Index i = 0; i < z_t.rows(); ++i)
                if (padded(p, i)) mask[static_cast<std::size_t>(i)] = false;
        } else {
            mask = topk_mask(row_norms(g.gradient, p), cfg.k);
        }
        reset = z_t;
        for (Index i = 0; i < z_t.rows(); ++i) {
            if (mask[static_cast<std::size_t>(i)]) reset.row(i) = z_t.row(i) - cfg.eta * g.gradient.row(i);
            else reset.row(i) = z_orig.row(i);
        }
        gradient = std::move(g.gradient);
    }
    Embedding next;
    {
        PhaseTimer timer(ph.projection);
        next = project(reset, codebook, projector, rng);
    }
    if (observer) observer(StepTrace{step, mask, gradient, reset, next});
    return next;
}

CounterfactualResult optimize(const Embedding& z_orig, const TrainedPredictor& p, const Codebook& codebook,
                              const ProjectorConfig& projector, const MccopConfig& cfg, std::uint64_t noise_seed,
                              const StepObserver& observer) {
    cfg.validate();
    projector.validate();
    const auto t0 = std::chrono::steady_clock::now();
    CounterfactualResult r;
    r.method = "mccop";
    r.mask_union.assign(static_cast<std::size_t>(z_orig.rows()), false);

    Embedding z = z_orig;
    {
        PhaseTimer timer(r.phases.reencode);
        r.original = decode(z_orig, codebook);
        r.confidence_trace.push_back(predict_proba(p, z_orig, cfg.target));
    }
    Embedding best = z_orig;
    ResidueSequence best_seq = r.original;
    double best_conf = r.confidence_trace.front();
    bool reached = false;

    auto record_mask = [&](const StepTrace& s) {
        for (std::size_t i = 0; i < s.mask.size(); ++i)
            if (s.mask[i]) r.mask_union[i] = true;
        if (observer) observer(s);
    };

    for (int t = 1; t <= cfg.t_max; ++t) {
        auto rng = substream(noise_seed, {static_cast<std::uint64_t>(t)});
        z = mccop_step(z, z_orig, p, codebook, projector, cfg, rng, t, record_mask, &r.phases);
        r.steps_used = t;
        double conf;
        ResidueSequence seq;
        {
            PhaseTimer timer(r.phases.reencode);
            conf = predict_proba(p, z, cfg.target);
            seq = decode(z, codebook);
        }
        r.confidence_trace.push_back(conf);
        if (conf >= cfg.tau) {
            if (seq != r.original) {
                r.success = true;
                best = z;
                best_seq = std::move(seq);
                best_conf = conf;
                break;
            }
            reached = true;
        }
        if (conf > best_conf) {
            best_conf = conf;
            best = z;
            best_seq = std::move(seq);
        }
    }

    r.final_embedding = std::move(best);
    r.decoded = std::move(best_seq);
    r.final_confidence = best_conf;
    r.adversarial = !r.success && reached;
    finalize_result(r);
    r.duration_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.phases.other = std::max(0.0, r.duration_s - r.phases.gradient - r.phases.projection - r.phases.reencode);
    return r;
}

}  // namespace mccop
