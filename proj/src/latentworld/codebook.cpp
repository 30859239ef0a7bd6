#include "mccop/latentworld/codebook.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace mccop {

double Codebook::smallest_pairwise_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (Index a = 0; a < codewords.rows(); ++a)
        for (Index b = a + 1; b < codewords.rows(); ++b)
            best = std::min(best, (codewords.row(a) - codewords.row(b)).norm());
    return best;
}

Codebook build_codebook(Index alphabet_size, Index dim, std::uint64_t seed, double min_separation, int max_rounds) {
    if (alphabet_size < 1 || alphabet_size > static_cast<Index>(kAlphabet.size()))
        throw ConfigError("codebook: alphabet size must be in [1, 20]");
    if (dim < 1) throw ConfigError("codebook: dim must be positive");
    if (!(min_separation > 0.0)) throw ConfigError("codebook: min_separation must be positive");

    Rng rng(substream_seed(seed, {tag("codebook")}));
    std::normal_distribution<double> gauss(0.0, 1.0);
    // Typical pairwise distance of N(0, s^2 I_D) draws is s * sqrt(2 D).
    const double scale = 1.25 * min_separation / std::sqrt(2.0 * static_cast<double>(dim));
    Codebook cb;
    cb.min_separation = min_separation;
    cb.codewords = MatrixX<double>::NullaryExpr(alphabet_size, dim, [&] { return scale * gauss(rng); });

    const double target = min_separation * (1.0 + 1e-3);
    for (int round = 0; round < max_rounds; ++round) {
        bool violated = false;
        for (Index a = 0; a < alphabet_size; ++a) {
            for (Index b = a + 1; b < alphabet_size; ++b) {
                Eigen::RowVectorXd diff = cb.codewords.row(a) - cb.codewords.row(b);
                const double d = diff.norm();
                if (d >= min_separation) continue;
                violated = true;
                if (d == 0.0) {
                    diff = Eigen::RowVectorXd::NullaryExpr(dim, [&] { return gauss(rng); });
                    diff.normalize();
                } else {
                    diff /= d;
                }
                const double push = 0.5 * (target - d);
                cb.codewords.row(a) += push * diff;
                cb.codewords.row(b) -= push * diff;
            }
        }
        if (!violated) return cb;
    }
    if (cb.smallest_pairwise_distance() < min_separation)
        throw ConfigError("codebook: could not reach the requested separation");
    return cb;
}

Embedding encode(const ResidueSequence& seq, const Codebook& codebook, double jitter_sigma, Rng& rng) {
    Embedding z(static_cast<Index>(seq.size()), codebook.dim());
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const int a = residue_index(seq[i]);
        if (a < 0 || a >= codebook.alphabet_size()) throw DataError("encode: residue outside codebook alphabet");
        z.row(static_cast<Index>(i)) = codebook.codewords.row(a);
        if (jitter_sigma > 0.0)
            for (Index j = 0; j < z.cols(); ++j) z(static_cast<Index>(i), j) += jitter_sigma * gauss(rng);
    }
    return z;
}

Embedding encode_exact(const ResidueSequence& seq, const Codebook& codebook) {
    Rng unused(0);
    return encode(seq, codebook, 0.0, unused);
}

ResidueSequence decode(const Embedding& z, const Codebook& codebook) {
    if (z.cols() != codebook.dim()) throw ConfigError("decode: embedding width does not match codebook");
    std::string out(static_cast<std::size_t>(z.rows()), 'A');
    for (Index i = 0; i < z.rows(); ++i) out[static_cast<std::size_t>(i)] = kAlphabet[codebook.nearest(z.row(i))];
    return ResidueSequence(std::move(out));
}

}  // namespace mccop
