#pragma once

#include "mccop/latentworld/sequence.hpp"
#include "mccop/rng.hpp"
#include "mccop/types.hpp"

#include <cstdint>

namespace mccop {

/// A x D matrix of codeword rows; row a encodes kAlphabet[a].
struct Codebook {
    MatrixX<double> codewords;
    double min_separation = 0.0;

    Index alphabet_size() const { return codewords.rows(); }
    Index dim() const { return codewords.cols(); }

    /// Index of the nearest codeword to `row` (Euclidean); ties go to the lowest index.
    template <typename Derived> Index nearest(const Eigen::MatrixBase<Derived>& row) const {
        Index best = 0;
        double best_d = (codewords.row(0) - row).squaredNorm();
        for (Index a = 1; a < codewords.rows(); ++a) {
            const double d = (codewords.row(a) - row).squaredNorm();
            if (d < best_d) {
                best_d = d;
                best = a;
            }
        }
        return best;
    }

    /// Smallest pairwise Euclidean distance between distinct codewords.
    double smallest_pairwise_distance() const;
};

/// Deterministic codebook: Gaussian draws repelled pairwise until every
/// distance is at least `min_separation`. Throws ConfigError if the bound is
/// still violated after `max_rounds` repulsion sweeps.
Codebook build_codebook(Index alphabet_size, Index dim, std::uint64_t seed, double min_separation,
                        int max_rounds = 500);

/// Row i = codeword(seq[i]) + N(0, jitter_sigma^2) per entry.
Embedding encode(const ResidueSequence& seq, const Codebook& codebook, double jitter_sigma, Rng& rng);

/// Zero-jitter encoding.
Embedding encode_exact(const ResidueSequence& seq, const Codebook& codebook);

/// Position-wise nearest-codeword decoding.
ResidueSequence decode(const Embedding& z, const Codebook& codebook);

}  // namespace mccop
