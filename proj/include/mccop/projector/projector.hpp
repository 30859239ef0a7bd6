#pragma once

#include "mccop/latentworld/codebook.hpp"
#include "mccop/rng.hpp"
#include "mccop/types.hpp"

#include <vector>

namespace mccop {

/// Linear-beta diffusion schedule. alpha_bar[0] = 1 by convention,
/// alpha_bar[t] = prod_{s<=t} (1 - beta[s]) for t in [1, T].
struct NoiseSchedule {
    int steps = 0;
    std::vector<double> beta;       // index 1..T used; beta[0] = 0
    std::vector<double> alpha_bar;  // index 0..T

    static NoiseSchedule linear(int steps = 1000, double beta_min = 1e-4, double beta_max = 2e-2);
};

struct ProjectorConfig {
    NoiseSchedule schedule = NoiseSchedule::linear();
    int t_diff = 100;
    double alpha = 0.3;
    double prior_sigma = 1.0;

    void validate() const;
};

/// sqrt(alpha_bar_t) z + sqrt(1 - alpha_bar_t) eps, eps ~ N(0, 1) per entry.
/// t = 0 returns z unchanged without drawing.
Embedding forward_noise(const Embedding& z, int t, const NoiseSchedule& schedule, Rng& rng);

/// Exact posterior mean E[z0 | z_t] under z0 = codeword (uniform) +
/// N(0, prior_sigma^2 I) and the forward kernel above, row by row.
Embedding denoise_estimate(const Embedding& z_t, int t, const Codebook& codebook, const ProjectorConfig& config);

/// Branch values of one projection, for instrumentation.
struct ProjectionTrace {
    Embedding noised;
    Embedding denoised;
};

/// (1 - alpha) z + alpha * denoise(forward_noise(z, t_diff)). alpha = 0 returns
/// z bit-exactly and draws nothing; alpha = 1 returns the denoiser output.
Embedding project(const Embedding& z, const Codebook& codebook, const ProjectorConfig& config, Rng& rng,
                  ProjectionTrace* trace = nullptr);

/// Mean over rows of the distance to the nearest codeword.
double manifold_distance(const Embedding& z, const Codebook& codebook);

}  // namespace mccop
