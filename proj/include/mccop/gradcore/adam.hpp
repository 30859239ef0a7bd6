#pragma once

#include "mccop/gradcore/mlp.hpp"

#include <cmath>
#include <cstdint>

namespace mccop {

struct AdamHyperparams {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// First/second moment accumulators for one dense tensor.
template <typename Derived> struct AdamMoments {
    Derived m;
    Derived v;
};

/// Adam update of a single dense tensor with bias correction, given the
/// already-incremented step count.
template <typename Derived, typename Grad>
void adam_update(Eigen::MatrixBase<Derived>& param, const Eigen::MatrixBase<Grad>& grad,
                 AdamMoments<typename Derived::PlainObject>& mom, const AdamHyperparams& hp, std::int64_t step) {
    using Scalar = typename Derived::Scalar;
    if (mom.m.size() != grad.size()) {
        mom.m = Derived::PlainObject::Zero(grad.rows(), grad.cols());
        mom.v = Derived::PlainObject::Zero(grad.rows(), grad.cols());
    }
    const Scalar b1 = static_cast<Scalar>(hp.beta1), b2 = static_cast<Scalar>(hp.beta2);
    mom.m = b1 * mom.m + (Scalar(1) - b1) * grad;
    mom.v = b2 * mom.v + (Scalar(1) - b2) * grad.cwiseAbs2();
    const Scalar c1 = Scalar(1) - std::pow(b1, static_cast<Scalar>(step));
    const Scalar c2 = Scalar(1) - std::pow(b2, static_cast<Scalar>(step));
    const Scalar lr = static_cast<Scalar>(hp.learning_rate), eps = static_cast<Scalar>(hp.epsilon);
    param -= (lr * (mom.m / c1).array() / ((mom.v / c2).array().sqrt() + eps)).matrix();
}

template <typename Scalar> struct AdamState {
    AdamHyperparams hp;
    std::int64_t step = 0;
    std::vector<AdamMoments<MatrixX<Scalar>>> weight;
    std::vector<AdamMoments<VectorX<Scalar>>> bias;
};

/// One Adam step on every weight and bias of the network. Spectral iterates
/// are not optimized.
template <typename Scalar>
void adam_step(AdamState<Scalar>& state, MlpParameters<Scalar>& params, const ParamGradients<Scalar>& grads) {
    const std::size_t n = params.layers.size();
    if (grads.weight.size() != n || grads.bias.size() != n) throw ConfigError("adam_step: gradient count mismatch");
    state.weight.resize(n);
    state.bias.resize(n);
    ++state.step;
    for (std::size_t l = 0; l < n; ++l) {
        adam_update(params.layers[l].weight, grads.weight[l], state.weight[l], state.hp, state.step);
        adam_update(params.layers[l].bias, grads.bias[l], state.bias[l], state.hp, state.step);
    }
}

}  // namespace mccop
