#include "test_support.hpp"

#include "mccop/projector/projector.hpp"

#include <doctest.h>

#include <cstring>

using namespace mccop;
using namespace mccop::testing;

namespace {

Codebook codebook_1d(std::vector<double> centers) {
    Codebook cb;
    cb.codewords.resize(static_cast<Index>(centers.size()), 1);
    for (std::size_t i = 0; i < centers.size(); ++i) cb.codewords(static_cast<Index>(i), 0) = centers[i];
    cb.min_separation = 1.0;
    return cb;
}

// Posterior mean of z0 given z_t by trapezoid integration over z0, prior a
// uniform mixture of N(c, s^2).
double integrated_posterior_mean(const std::vector<double>& centers, double s, double abar, double zt) {
    const double lo = -30.0, hi = 30.0;
    const int n = 600000;
    const double h = (hi - lo) / n;
    double num = 0.0, den = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double z0 = lo + i * h;
        double prior = 0.0;
        for (double c : centers) prior += std::exp(-0.5 * (z0 - c) * (z0 - c) / (s * s));
        const double r = zt - std::sqrt(abar) * z0;
        const double w = prior * std::exp(-0.5 * r * r / (1.0 - abar)) * (i == 0 || i == n ? 0.5 : 1.0);
        num += z0 * w;
        den += w;
    }
    return num / den;
}

}  // namespace

TEST_CASE("linear schedule") {
    const auto s = NoiseSchedule::linear();
    CHECK(s.steps == 1000);
    CHECK(s.alpha_bar[0] == 1.0);
    CHECK(s.beta[1] == doctest::Approx(1e-4));
    CHECK(s.beta[1000] == doctest::Approx(2e-2));
    for (int t = 1; t <= 1000; ++t) CHECK(s.alpha_bar[static_cast<std::size_t>(t)] < s.alpha_bar[static_cast<std::size_t>(t - 1)]);
    double prod = 1.0;
    for (int t = 1; t <= 100; ++t) prod *= 1.0 - s.beta[static_cast<std::size_t>(t)];
    CHECK(s.alpha_bar[100] == doctest::Approx(prod).epsilon(1e-14));
    CHECK_THROWS_AS(NoiseSchedule::linear(0), ConfigError);
    CHECK_THROWS_AS(NoiseSchedule::linear(10, 0.3, 0.1), ConfigError);
}

TEST_CASE("projector config validation") {
    ProjectorConfig c;
    CHECK_NOTHROW(c.validate());
    c.alpha = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.t_diff = 1001;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.prior_sigma = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("forward_noise moments") {
    const auto s = NoiseSchedule::linear();
    Rng rng(1);
    const Embedding z = random_embedding(2, 3, rng, 2.0);
    Rng keep = rng;
    CHECK(forward_noise(z, 0, s, rng) == z);
    CHECK(rng == keep);

    const int t = 100;
    const double abar = s.alpha_bar[t];
    const int n = 10000;
    MatrixX<double> sum = MatrixX<double>::Zero(2, 3), sq = MatrixX<double>::Zero(2, 3);
    for (int i = 0; i < n; ++i) {
        const MatrixX<double> e = forward_noise(z, t, s, rng) - std::sqrt(abar) * z;
        sum += e;
        sq += e.cwiseAbs2();
    }
    const double var = 1.0 - abar;
    const double mean_se = std::sqrt(var / n);
    const double var_se = var * std::sqrt(2.0 / n);
    for (Index i = 0; i < sum.size(); ++i) {
        CHECK(std::abs(sum.data()[i] / n) < 4.0 * mean_se);
        CHECK(std::abs(sq.data()[i] / n - var) < 4.0 * var_se);
    }
}

TEST_CASE("denoiser limit and symmetry cases") {
    const auto world = WorldConfig::default_world();
    const auto cb = world_codebook(world);
    ProjectorConfig cfg;
    cfg.prior_sigma = 1e-9;
    const Embedding exact = encode_exact(ResidueSequence("ACDEFGHIKLMN"), cb);
    CHECK((denoise_estimate(exact, 1, cb, cfg) - exact).cwiseAbs().maxCoeff() < 1e-6);

    const auto two = codebook_1d({-2.0, 2.0});
    ProjectorConfig c2;
    Embedding mid(1, 1);
    mid << 0.0;
    CHECK(denoise_estimate(mid, 100, two, c2)(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("denoiser matches numerical integration of the posterior mean") {
    const auto s = NoiseSchedule::linear();
    for (int t : {10, 100, 400}) {
        for (double sigma : {0.3, 1.0}) {
            ProjectorConfig cfg;
            cfg.t_diff = t;
            cfg.prior_sigma = sigma;
            const double abar = s.alpha_bar[static_cast<std::size_t>(t)];
            for (const auto& centers : {std::vector<double>{1.5}, std::vector<double>{-1.0, 2.5}}) {
                const auto cb = codebook_1d(centers);
                for (double zt : {-2.0, 0.1, 1.7, 3.0}) {
                    Embedding z(1, 1);
                    z << zt;
                    const double got = denoise_estimate(z, t, cb, cfg)(0, 0);
                    CAPTURE(t);
                    CAPTURE(sigma);
                    CAPTURE(zt);
                    CHECK(std::abs(got - integrated_posterior_mean(centers, sigma, abar, zt)) < 1e-6);
                }
            }
            // single codeword: closed-form Gaussian shrinkage
            const double c = 1.5, zt = 0.4;
            const double v = abar * sigma * sigma + 1.0 - abar;
            const double closed = c + std::sqrt(abar) * sigma * sigma / v * (zt - std::sqrt(abar) * c);
            Embedding z(1, 1);
            z << zt;
            CHECK(denoise_estimate(z, t, codebook_1d({c}), cfg)(0, 0) == doctest::Approx(closed).epsilon(1e-13));
        }
    }
}

TEST_CASE("project at alpha 0 and alpha 1") {
    const auto world = WorldConfig::default_world();
    const auto cb = world_codebook(world);
    Rng rng(2);
    const Embedding z = encode_exact(ResidueSequence("WWWWCCCCAAAA"), cb) + random_embedding(12, world.dim, rng);

    ProjectorConfig c0;
    c0.alpha = 0.0;
    Rng before = rng;
    const Embedding same = project(z, cb, c0, rng);
    CHECK(rng == before);
    CHECK(std::memcmp(same.data(), z.data(), sizeof(double) * static_cast<std::size_t>(z.size())) == 0);

    ProjectorConfig c1;
    c1.alpha = 1.0;
    Rng a(77), b(77);
    ProjectionTrace trace;
    const Embedding out = project(z, cb, c1, a, &trace);
    const Embedding expected = denoise_estimate(forward_noise(z, c1.t_diff, c1.schedule, b), c1.t_diff, cb, c1);
    CHECK(out == expected);
    CHECK(trace.denoised == expected);

    ProjectorConfig mix;
    Rng m1(5), m2(5);
    const Embedding blended = project(z, cb, mix, m1, &trace);
    CHECK(blended == ((1.0 - mix.alpha) * z + mix.alpha * denoise_estimate(forward_noise(z, mix.t_diff, mix.schedule, m2),
                                                                           mix.t_diff, cb, mix)));
}

TEST_CASE("projection at alpha 0.3 pulls off-manifold points toward the codebook") {
    const auto world = WorldConfig::default_world();
    const auto cb = world_codebook(world);
    ProjectorConfig cfg;
    Rng rng(3);
    std::normal_distribution<double> g;
    double before = 0.0, after = 0.0;
    for (int t = 0; t < 1000; ++t) {
        Embedding z = encode_exact(ResidueSequence("ACDEFGHIKLMN"), cb);
        for (Index i = 0; i < z.rows(); ++i) {
            RowVectorX<double> d = RowVectorX<double>::NullaryExpr(z.cols(), [&] { return g(rng); });
            z.row(i) += d.normalized() * (3.5 * cfg.prior_sigma);
        }
        before += manifold_distance(z, cb);
        after += manifold_distance(project(z, cb, cfg, rng), cb);
    }
    CHECK(after < before);
}

TEST_CASE("manifold_distance") {
    const auto world = WorldConfig::default_world();
    const auto cb = world_codebook(world);
    Embedding z = encode_exact(ResidueSequence("ACDEFGHIKLMN"), cb);
    CHECK(manifold_distance(z, cb) == 0.0);
    z(4, 0) += 0.75;
    CHECK(manifold_distance(z, cb) == doctest::Approx(0.75 / 12.0).epsilon(1e-12));

    Rng rng(4);
    for (int t = 0; t < 20; ++t) {
        const Embedding r = random_embedding(12, world.dim, rng, 4.0);
        double brute = 0.0;
        for (Index i = 0; i < r.rows(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (Index a = 0; a < cb.alphabet_size(); ++a) best = std::min(best, (r.row(i) - cb.codewords.row(a)).norm());
            brute += best / 12.0;
        }
        CHECK(manifold_distance(r, cb) == doctest::Approx(brute).epsilon(1e-12));
    }
}
