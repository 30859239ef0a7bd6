#pragma once

#include <cmath>
#include <stdexcept>

namespace mccop {

enum class Activation { softplus, relu };

/// Numerically stable logistic function.
template <typename Scalar> Scalar logistic(Scalar x) {
    if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-x));
    const Scalar e = std::exp(x);
    return e / (Scalar(1) + e);
}

/// log(1 + exp(x)) without overflow for large |x|.
template <typename Scalar> Scalar log1p_exp(Scalar x) {
    if (x > Scalar(0)) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

/// (1/beta) * ln(1 + exp(beta * x)).
template <typename Scalar> Scalar softplus(Scalar x, Scalar beta) {
    if (!(beta > Scalar(0))) throw std::invalid_argument("softplus: beta must be positive");
    return log1p_exp(beta * x) / beta;
}

// Pointwise value and first two derivatives of the hidden activation.
template <typename Scalar> struct ActivationFn {
    Activation kind = Activation::softplus;
    Scalar beta = Scalar(1);

    Scalar value(Scalar x) const {
        if (kind == Activation::relu) return x > Scalar(0) ? x : Scalar(0);
        return log1p_exp(beta * x) / beta;
    }
    Scalar first(Scalar x) const {
        if (kind == Activation::relu) return x > Scalar(0) ? Scalar(1) : Scalar(0);
        return logistic(beta * x);
    }
    Scalar second(Scalar x) const {
        if (kind == Activation::relu) return Scalar(0);
        const Scalar s = logistic(beta * x);
        return beta * s * (Scalar(1) - s);
    }
};

}  // namespace mccop
