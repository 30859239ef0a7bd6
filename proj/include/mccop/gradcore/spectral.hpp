#pragma once

#include "mccop/types.hpp"

#include <stdexcept>

namespace mccop {

template <typename Scalar> struct SpectralEstimate {
    Scalar sigma = Scalar(0);
    VectorX<Scalar> u;  // left iterate, unit norm
    VectorX<Scalar> v;  // right iterate, unit norm
};

/// Power iteration for the largest singular value of `weight`, starting from
/// the left iterate `u`. Each iteration is v <- W^T u / |.|, u <- W v / |.|;
/// the estimate is sigma = u^T W v. A zero matrix yields sigma = 0 with u
/// returned unchanged.
template <typename Scalar>
SpectralEstimate<Scalar> spectral_norm_estimate(const MatrixX<Scalar>& weight, int iters,
                                                const VectorX<Scalar>& u) {
    if (iters < 1) throw std::invalid_argument("spectral_norm_estimate: iters must be >= 1");
    if (u.size() != weight.rows())
        throw std::invalid_argument("spectral_norm_estimate: u size does not match weight rows");
    if (!(u.norm() > Scalar(0))) throw std::invalid_argument("spectral_norm_estimate: u must be nonzero");

    SpectralEstimate<Scalar> out;
    out.u = u.normalized();
    out.v = VectorX<Scalar>::Zero(weight.cols());
    if (weight.isZero(Scalar(0))) {
        out.u = u;
        return out;
    }
    for (int i = 0; i < iters; ++i) {
        VectorX<Scalar> v = weight.transpose() * out.u;
        Scalar vn = v.norm();
        if (!(vn > Scalar(0))) {
            // u is orthogonal to the range of W; restart from the largest row.
            Index r = 0;
            weight.rowwise().norm().maxCoeff(&r);
            v = weight.row(r).transpose();
            vn = v.norm();
        }
        out.v = v / vn;
        VectorX<Scalar> next = weight * out.v;
        out.u = next / next.norm();
    }
    out.sigma = out.u.dot(weight * out.v);
    return out;
}

}  // namespace mccop
