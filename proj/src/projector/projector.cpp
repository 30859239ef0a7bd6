#include "mccop/projector/projector.hpp"

#include <cmath>
#include <random>
#include <string>

namespace mccop {

NoiseSchedule NoiseSchedule::linear(int steps, double beta_min, double beta_max) {
    if (steps < 1) throw ConfigError("schedule: need at least one step");
    if (!(beta_min > 0.0 && beta_max < 1.0 && beta_min <= beta_max))
        throw ConfigError("schedule: need 0 < beta_min <= beta_max < 1");
    NoiseSchedule s;
    s.steps = steps;
    s.beta.assign(static_cast<std::size_t>(steps) + 1, 0.0);
    s.alpha_bar.assign(static_cast<std::size_t>(steps) + 1, 1.0);
    for (int t = 1; t <= steps; ++t) {
        const double frac = steps == 1 ? 0.0 : static_cast<double>(t - 1) / (steps - 1);
        s.beta[static_cast<std::size_t>(t)] = beta_min + frac * (beta_max - beta_min);
        s.alpha_bar[static_cast<std::size_t>(t)] =
            s.alpha_bar[static_cast<std::size_t>(t - 1)] * (1.0 - s.beta[static_cast<std::size_t>(t)]);
    }
    return s;
}

void ProjectorConfig::validate() const {
    if (schedule.steps < 1 || schedule.alpha_bar.size() != static_cast<std::size_t>(schedule.steps) + 1)
        throw ConfigError("projector: schedule not initialized");
    if (t_diff < 1 || t_diff > schedule.steps)
        throw ConfigError("projector: t_diff must be in [1, " + std::to_string(schedule.steps) + "]");
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("projector: alpha must be in [0, 1]");
    if (prior_sigma < 0.0) throw ConfigError("projector: prior_sigma must be >= 0");
}

namespace {

double alpha_bar_at(const NoiseSchedule& s, int t) {
    if (t < 0 || t > s.steps) throw ConfigError("projector: diffusion step out of range");
    return s.alpha_bar[static_cast<std::size_t>(t)];
}

}  // namespace

Embedding forward_noise(const Embedding& z, int t, const NoiseSchedule& schedule, Rng& rng) {
    const double ab = alpha_bar_at(schedule, t);
    if (t == 0) return z;
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double a = std::sqrt(ab), b = std::sqrt(1.0 - ab);
    Embedding out(z.rows(), z.cols());
    for (Index i = 0; i < z.rows(); ++i)
        for (Index j = 0; j < z.cols(); ++j) out(i, j) = a * z(i, j) + b * gauss(rng);
    return out;
}

Embedding denoise_estimate(const Embedding& z_t, int t, const Codebook& codebook, const ProjectorConfig& config) {
    if (z_t.cols() != codebook.dim()) throw ConfigError("denoise: embedding width does not match codebook");
    const double ab = alpha_bar_at(config.schedule, t);
    const double sa = std::sqrt(ab);
    const double ps2 = config.prior_sigma * config.prior_sigma;
    const double var = ab * ps2 + (1.0 - ab);
    const MatrixX<double>& C = codebook.codewords;
    const Index A = C.rows();

    Embedding out(z_t.rows(), z_t.cols());
    VectorX<double> logw(A);
    for (Index i = 0; i < z_t.rows(); ++i) {
        const RowVectorX<double> x = z_t.row(i);
        if (!(var > 0.0)) {
            // noiseless, zero-width prior: the posterior collapses onto the nearest codeword
            out.row(i) = C.row(codebook.nearest(x));
            continue;
        }
        for (Index a = 0; a < A; ++a) logw(a) = -(x - sa * C.row(a)).squaredNorm() / (2.0 * var);
        const double mx = logw.maxCoeff();
        const VectorX<double> w = (logw.array() - mx).exp().matrix();
        const double total = w.sum();
        const double shrink = sa * ps2 / var;
        RowVectorX<double> acc = RowVectorX<double>::Zero(z_t.cols());
        for (Index a = 0; a < A; ++a) acc += (w(a) / total) * (C.row(a) + shrink * (x - sa * C.row(a)));
        out.row(i) = acc;
    }
    return out;
}

Embedding project(const Embedding& z, const Codebook& codebook, const ProjectorConfig& config, Rng& rng,
                  ProjectionTrace* trace) {
    config.validate();
    if (config.alpha == 0.0) return z;
    Embedding noised = forward_noise(z, config.t_diff, config.schedule, rng);
    Embedding denoised = denoise_estimate(noised, config.t_diff, codebook, config);
    Embedding out = config.alpha == 1.0 ? denoised : Embedding((1.0 - config.alpha) * z + config.alpha * denoised);
    if (trace) {
        trace->noised = std::move(noised);
        trace->denoised = std::move(denoised);
    }
    return out;
}

double manifold_distance(const Embedding& z, const Codebook& codebook) {
    if (z.rows() == 0) return 0.0;
    double total = 0.0;
    for (Index i = 0; i < z.rows(); ++i) total += (codebook.codewords.row(codebook.nearest(z.row(i))) - z.row(i)).norm();
    return total / static_cast<double>(z.rows());
}

}  // namespace mccop
