#pragma once

#include "mccop/optimizer/result.hpp"
#include "mccop/predictor/predictor.hpp"
#include "mccop/projector/projector.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace mccop {

struct MccopConfig {
    int k = 5;
    double lambda_dist = 0.1;
    double margin = 2.2;
    double eta = 0.5;
    int t_max = 50;
    double tau = 0.95;
    int target = +1;  // signed target label
    std::optional<std::vector<bool>> fixed_mask;

    void validate() const;
};

/// log(1 + exp(m - target * logit)).
double margin_loss(double logit, int target, double margin);

double cf_loss(const Embedding& z, const Embedding& z_orig, const TrainedPredictor& p, const MccopConfig& cfg);

/// cf_loss and its exact gradient with respect to z.
LossGradient<double> cf_loss_gradient(const Embedding& z, const Embedding& z_orig, const TrainedPredictor& p,
                                      const MccopConfig& cfg);

/// Row norms of the cf_loss gradient; padded rows get -infinity.
std::vector<double> position_sensitivity(const Embedding& z, const Embedding& z_orig, const TrainedPredictor& p,
                                         const MccopConfig& cfg);

/// Top-k rows by sensitivity; ties resolved toward the lower index.
/// -infinity entries (padding) are never selected.
std::vector<bool> topk_mask(const std::vector<double>& s, int k);

/// What one step did, for instrumentation.
struct StepTrace {
    int step = 0;  // 1-based
    std::vector<bool> mask;
    Embedding gradient;
    Embedding reset;  // after the masked step and hard reset, before projection
    Embedding next;   // after projection
};

using StepObserver = std::function<void(const StepTrace&)>;

/// One iteration: gradient, mask, masked step, hard reset of unmasked rows to
/// z_orig, projection. Throws CampaignError on a non-finite gradient.
Embedding mccop_step(const Embedding& z_t, const Embedding& z_orig, const TrainedPredictor& p,
                     const Codebook& codebook, const ProjectorConfig& projector, const MccopConfig& cfg, Rng& rng,
                     int step = 1, const StepObserver& observer = {}, PhaseTimes* phases = nullptr);

/// Full loop with early stopping. Projection noise for step t is drawn from
/// substream(noise_seed, {t}).
CounterfactualResult optimize(const Embedding& z_orig, const TrainedPredictor& p, const Codebook& codebook,
                              const ProjectorConfig& projector, const MccopConfig& cfg, std::uint64_t noise_seed,
                              const StepObserver& observer = {});

}  // namespace mccop
