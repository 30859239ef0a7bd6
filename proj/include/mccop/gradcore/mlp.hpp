#pragma once

// Fixed-architecture feed-forward network with hand-derived reverse-mode
// gradients. Hidden layers apply an activation (and optional dropout); the
// last layer is linear with a single output (the logit). Inputs are passed
// column-wise: X is (input_size x batch).
//
// Training gradients optionally carry tangent streams: for a set of probe
// directions V the forward pass also propagates the directional derivative
// d/dt f(x + t v), so that a penalty on (v^T grad_x f)^2 can be
// differentiated with respect to the parameters (forward-over-reverse).

#include "mccop/gradcore/activation.hpp"
#include "mccop/gradcore/spectral.hpp"
#include "mccop/rng.hpp"
#include "mccop/types.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace mccop {

template <typename Scalar> struct DenseLayer {
    MatrixX<Scalar> weight;  // outputs x inputs
    VectorX<Scalar> bias;
    VectorX<Scalar> u;  // spectral state, left iterate (outputs)
    VectorX<Scalar> v;  // spectral state, right iterate (inputs)

    Index inputs() const { return weight.cols(); }
    Index outputs() const { return weight.rows(); }
};

template <typename Scalar> struct MlpParameters {
    std::vector<DenseLayer<Scalar>> layers;
    Activation activation = Activation::softplus;
    Scalar beta = Scalar(1);
    bool spectral = false;

    Index input_size() const { return layers.empty() ? 0 : layers.front().inputs(); }
    ActivationFn<Scalar> activation_fn() const { return {activation, beta}; }

    void validate() const {
        if (layers.empty()) throw ConfigError("mlp: no layers");
        if (!(beta > Scalar(0))) throw ConfigError("mlp: beta must be positive");
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& layer = layers[l];
            if (layer.bias.size() != layer.outputs() || layer.u.size() != layer.outputs() ||
                layer.v.size() != layer.inputs())
                throw ConfigError("mlp: layer " + std::to_string(l) + " has inconsistent shapes");
            if (l > 0 && layer.inputs() != layers[l - 1].outputs())
                throw ConfigError("mlp: layer " + std::to_string(l) + " input does not match previous output");
        }
        if (layers.back().outputs() != 1) throw ConfigError("mlp: last layer must have a single output");
    }
};

/// Divisor applied to a layer's weight: max(u^T W v, 1) when spectral
/// normalization is on, 1 otherwise.
template <typename Scalar> Scalar spectral_scale(const DenseLayer<Scalar>& layer, bool spectral) {
    if (!spectral) return Scalar(1);
    const Scalar sigma = layer.u.dot(layer.weight * layer.v);
    return sigma > Scalar(1) ? sigma : Scalar(1);
}

template <typename Scalar> MatrixX<Scalar> effective_weight(const DenseLayer<Scalar>& layer, bool spectral) {
    return layer.weight / spectral_scale(layer, spectral);
}

/// Input -> hidden... -> 1 network with PyTorch-style uniform(+-1/sqrt(fan_in))
/// initialization and random unit spectral iterates.
template <typename Scalar>
MlpParameters<Scalar> make_mlp(Index inputs, const std::vector<Index>& hidden, Activation activation,
                               Scalar beta, bool spectral, Rng& rng) {
    MlpParameters<Scalar> p;
    p.activation = activation;
    p.beta = beta;
    p.spectral = spectral;
    std::normal_distribution<Scalar> gauss(0, 1);
    Index fan_in = inputs;
    auto add_layer = [&](Index outputs) {
        const Scalar bound = Scalar(1) / std::sqrt(static_cast<Scalar>(fan_in));
        std::uniform_real_distribution<Scalar> uni(-bound, bound);
        DenseLayer<Scalar> layer;
        layer.weight = MatrixX<Scalar>::NullaryExpr(outputs, fan_in, [&] { return uni(rng); });
        layer.bias = VectorX<Scalar>::NullaryExpr(outputs, [&] { return uni(rng); });
        layer.u = VectorX<Scalar>::NullaryExpr(outputs, [&] { return gauss(rng); }).normalized();
        layer.v = VectorX<Scalar>::NullaryExpr(fan_in, [&] { return gauss(rng); }).normalized();
        p.layers.push_back(std::move(layer));
        fan_in = outputs;
    };
    for (Index h : hidden) add_layer(h);
    add_layer(1);
    p.validate();
    return p;
}

/// Runs `iters` power iterations on every layer from its stored iterate.
template <typename Scalar> void refresh_spectral_state(MlpParameters<Scalar>& params, int iters) {
    for (auto& layer : params.layers) {
        auto est = spectral_norm_estimate(layer.weight, iters, layer.u);
        if (est.sigma > Scalar(0)) {
            layer.u = est.u;
            layer.v = est.v;
        }
    }
}

/// Row-major (position-major) flattening with padded rows zeroed.
template <typename Scalar> VectorX<Scalar> flatten(const MatrixX<Scalar>& z, const PadMask& pad) {
    if (!pad.empty() && static_cast<Index>(pad.size()) != z.rows())
        throw ConfigError("flatten: pad mask length does not match embedding rows");
    VectorX<Scalar> x(z.size());
    for (Index i = 0; i < z.rows(); ++i) {
        const bool padded = !pad.empty() && pad[static_cast<std::size_t>(i)];
        for (Index j = 0; j < z.cols(); ++j) x(i * z.cols() + j) = padded ? Scalar(0) : z(i, j);
    }
    return x;
}

template <typename Scalar> MatrixX<Scalar> unflatten(const VectorX<Scalar>& x, Index rows, Index cols) {
    if (x.size() != rows * cols) throw ConfigError("unflatten: size mismatch");
    MatrixX<Scalar> z(rows, cols);
    for (Index i = 0; i < rows; ++i)
        for (Index j = 0; j < cols; ++j) z(i, j) = x(i * cols + j);
    return z;
}

/// Logits for a batch of flattened inputs (columns).
template <typename Scalar>
RowVectorX<Scalar> forward_batch(const MlpParameters<Scalar>& params, const MatrixX<Scalar>& inputs) {
    if (inputs.rows() != params.input_size()) throw ConfigError("mlp: input dimension mismatch");
    const auto act = params.activation_fn();
    MatrixX<Scalar> h = inputs;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        MatrixX<Scalar> a = effective_weight(layer, params.spectral) * h;
        a.colwise() += layer.bias;
        if (l + 1 == params.layers.size()) return a.row(0);
        h = a.unaryExpr([&](Scalar x) { return act.value(x); });
    }
    return {};
}

template <typename Scalar>
Scalar mlp_forward(const MlpParameters<Scalar>& params, const MatrixX<Scalar>& z, const PadMask& pad) {
    const VectorX<Scalar> x = flatten(z, pad);
    if (x.size() != params.input_size()) throw ConfigError("mlp: embedding does not match input layer");
    return forward_batch(params, MatrixX<Scalar>(x))(0);
}

template <typename Scalar> struct BatchInputGradients {
    RowVectorX<Scalar> logits;
    MatrixX<Scalar> gradients;  // column b = d logit_b / d input_b
};

/// Per-sample logit and exact input gradient (inference mode).
template <typename Scalar>
BatchInputGradients<Scalar> input_gradients(const MlpParameters<Scalar>& params, const MatrixX<Scalar>& inputs) {
    if (inputs.rows() != params.input_size()) throw ConfigError("mlp: input dimension mismatch");
    const auto act = params.activation_fn();
    const std::size_t n = params.layers.size();
    std::vector<MatrixX<Scalar>> weights(n);
    std::vector<MatrixX<Scalar>> slopes(n);
    MatrixX<Scalar> h = inputs;
    BatchInputGradients<Scalar> out;
    for (std::size_t l = 0; l < n; ++l) {
        weights[l] = effective_weight(params.layers[l], params.spectral);
        MatrixX<Scalar> a = weights[l] * h;
        a.colwise() += params.layers[l].bias;
        if (l + 1 == n) {
            out.logits = a.row(0);
            break;
        }
        slopes[l] = a.unaryExpr([&](Scalar x) { return act.first(x); });
        h = a.unaryExpr([&](Scalar x) { return act.value(x); });
    }
    MatrixX<Scalar> adj = MatrixX<Scalar>::Ones(1, inputs.cols());
    for (std::size_t l = n; l-- > 0;) {
        adj = weights[l].transpose() * adj;
        if (l > 0) adj = adj.cwiseProduct(slopes[l - 1]);
    }
    out.gradients = std::move(adj);
    return out;
}

template <typename Scalar> struct LossGradient {
    Scalar value = Scalar(0);
    MatrixX<Scalar> gradient;  // same shape as the embedding
};

/// Exact gradient with respect to the embedding of a loss composed from the
/// network logit. `loss` provides value(f, z), dlogit(f, z) and dz(f, z)
/// (the explicit partial in z, shaped like z). Padded rows get zero gradient
/// through the network path.
template <typename Scalar, typename Loss>
LossGradient<Scalar> grad_input(const MlpParameters<Scalar>& params, const MatrixX<Scalar>& z, const PadMask& pad,
                                const Loss& loss) {
    const VectorX<Scalar> x = flatten(z, pad);
    if (x.size() != params.input_size()) throw ConfigError("mlp: embedding does not match input layer");
    auto g = input_gradients(params, MatrixX<Scalar>(x));
    const Scalar f = g.logits(0);
    MatrixX<Scalar> grad = unflatten<Scalar>(g.gradients.col(0), z.rows(), z.cols());
    for (Index i = 0; i < z.rows(); ++i)
        if (!pad.empty() && pad[static_cast<std::size_t>(i)]) grad.row(i).setZero();
    LossGradient<Scalar> out;
    out.value = loss.value(f, z);
    out.gradient = loss.dlogit(f, z) * grad + loss.dz(f, z);
    return out;
}

enum class LogitLink {
    bce,      // mean binary cross-entropy on logits against targets in {0, 1}
    identity  // mean of the logits
};

/// Everything the training objective needs beyond parameters and inputs.
/// Probe columns are probe-major: column r * batch + b is probe r of sample b.
/// Dropout masks (one per hidden layer, already scaled by 1/(1-p)) are
/// supplied by the caller so the objective stays a pure function.
template <typename Scalar> struct ObjectiveTerms {
    LogitLink link = LogitLink::bce;
    RowVectorX<Scalar> targets;
    Scalar jacobian_lambda = Scalar(0);
    MatrixX<Scalar> probes;
    std::vector<MatrixX<Scalar>> dropout;

    bool has_tangents() const { return jacobian_lambda != Scalar(0) && probes.size() > 0; }
};

template <typename Scalar> struct ParamGradients {
    std::vector<MatrixX<Scalar>> weight;
    std::vector<VectorX<Scalar>> bias;
};

template <typename Scalar> struct ObjectiveResult {
    Scalar loss = Scalar(0);
    Scalar data_loss = Scalar(0);
    Scalar penalty = Scalar(0);
    RowVectorX<Scalar> logits;
    ParamGradients<Scalar> grads;
};

namespace detail {

template <typename Scalar> struct TrainingPass {
    std::vector<MatrixX<Scalar>> weights;  // effective
    std::vector<Scalar> scales;
    std::vector<MatrixX<Scalar>> pre;    // pre-activations per layer
    std::vector<MatrixX<Scalar>> post;   // inputs to each layer; post[0] = X
    std::vector<MatrixX<Scalar>> tpre;   // tangent pre-activations
    std::vector<MatrixX<Scalar>> tpost;  // tangent layer inputs; tpost[0] = probes
    Index probes_per_sample = 0;
};

template <typename Scalar>
MatrixX<Scalar> replicate_cols(const MatrixX<Scalar>& m, Index times) {
    return m.replicate(1, times);
}

template <typename Scalar>
TrainingPass<Scalar> training_forward(const MlpParameters<Scalar>& params, const MatrixX<Scalar>& inputs,
                                      const ObjectiveTerms<Scalar>& terms) {
    if (inputs.rows() != params.input_size()) throw ConfigError("mlp: input dimension mismatch");
    const Index batch = inputs.cols();
    const std::size_t n = params.layers.size();
    const bool tangents = terms.has_tangents();
    if (!terms.dropout.empty() && terms.dropout.size() + 1 != n)
        throw ConfigError("mlp: need one dropout mask per hidden layer");

    TrainingPass<Scalar> pass;
    if (tangents) {
        if (terms.probes.rows() != inputs.rows() || terms.probes.cols() % std::max<Index>(batch, 1) != 0)
            throw ConfigError("mlp: probe matrix has wrong shape");
        pass.probes_per_sample = terms.probes.cols() / batch;
    }
    const auto act = params.activation_fn();
    pass.post.push_back(inputs);
    if (tangents) pass.tpost.push_back(terms.probes);
    for (std::size_t l = 0; l < n; ++l) {
        const auto& layer = params.layers[l];
        pass.scales.push_back(spectral_scale(layer, params.spectral));
        pass.weights.push_back(layer.weight / pass.scales.back());
        MatrixX<Scalar> a = pass.weights[l] * pass.post[l];
        a.colwise() += layer.bias;
        MatrixX<Scalar> ta;
        if (tangents) ta = pass.weights[l] * pass.tpost[l];
        if (l + 1 < n) {
            MatrixX<Scalar> h = a.unaryExpr([&](Scalar x) { return act.value(x); });
            MatrixX<Scalar> d1 = a.unaryExpr([&](Scalar x) { return act.first(x); });
            if (!terms.dropout.empty()) {
                h = h.cwiseProduct(terms.dropout[l]);
                d1 = d1.cwiseProduct(terms.dropout[l]);
            }
            pass.post.push_back(std::move(h));
            if (tangents) pass.tpost.push_back(ta.cwiseProduct(replicate_cols(d1, pass.probes_per_sample)));
        }
        pass.pre.push_back(std::move(a));
        if (tangents) pass.tpre.push_back(std::move(ta));
    }
    return pass;
}

template <typename Scalar>
void objective_values(const ObjectiveTerms<Scalar>& terms, const TrainingPass<Scalar>& pass,
                      ObjectiveResult<Scalar>& out) {
    const RowVectorX<Scalar> f = pass.pre.back().row(0);
    const Index batch = f.size();
    out.logits = f;
    Scalar data = Scalar(0);
    if (terms.link == LogitLink::bce) {
        if (terms.targets.size() != batch) throw ConfigError("mlp: targets do not match batch");
        for (Index b = 0; b < batch; ++b) data += log1p_exp(f(b)) - terms.targets(b) * f(b);
    } else {
        data = f.sum();
    }
    out.data_loss = data / static_cast<Scalar>(batch);
    out.penalty = Scalar(0);
    if (terms.has_tangents()) {
        const RowVectorX<Scalar> df = pass.tpre.back().row(0);
        out.penalty = terms.jacobian_lambda * df.squaredNorm() / static_cast<Scalar>(df.size());
    }
    out.loss = out.data_loss + out.penalty;
}

}  // namespace detail

/// Value of the training objective: mean logit loss plus
/// lambda * mean over (sample, probe) of (v^T grad_x f)^2. Forward only.
template <typename Scalar>
ObjectiveResult<Scalar> objective_value(const MlpParameters<Scalar>& params, const MatrixX<Scalar>& inputs,
                                        const ObjectiveTerms<Scalar>& terms) {
    ObjectiveResult<Scalar> out;
    const auto pass = detail::training_forward(params, inputs, terms);
    detail::objective_values(terms, pass, out);
    return out;
}

/// Objective value plus exact gradients with respect to all weights and
/// biases. Spectral normalization is differentiated through sigma = u^T W v
/// with the iterates (u, v) held constant.
template <typename Scalar>
ObjectiveResult<Scalar> grad_params(const MlpParameters<Scalar>& params, const MatrixX<Scalar>& inputs,
                                    const ObjectiveTerms<Scalar>& terms) {
    ObjectiveResult<Scalar> out;
    const auto pass = detail::training_forward(params, inputs, terms);
    detail::objective_values(terms, pass, out);

    const std::size_t n = params.layers.size();
    const Index batch = inputs.cols();
    const bool tangents = terms.has_tangents();
    const Index probes = pass.probes_per_sample;
    const auto act = params.activation_fn();

    MatrixX<Scalar> adj(1, batch);
    const RowVectorX<Scalar>& f = out.logits;
    for (Index b = 0; b < batch; ++b) {
        const Scalar d = terms.link == LogitLink::bce ? logistic(f(b)) - terms.targets(b) : Scalar(1);
        adj(0, b) = d / static_cast<Scalar>(batch);
    }
    MatrixX<Scalar> tadj;
    if (tangents) {
        const MatrixX<Scalar>& df = pass.tpre.back();
        tadj = df * (Scalar(2) * terms.jacobian_lambda / static_cast<Scalar>(df.cols()));
    }

    out.grads.weight.resize(n);
    out.grads.bias.resize(n);
    for (std::size_t l = n; l-- > 0;) {
        MatrixX<Scalar> g = adj * pass.post[l].transpose();
        if (tangents) g.noalias() += tadj * pass.tpost[l].transpose();
        out.grads.bias[l] = adj.rowwise().sum();

        const auto& layer = params.layers[l];
        if (params.spectral && pass.scales[l] > Scalar(1)) {
            const Scalar sigma = pass.scales[l];
            const Scalar inner = (g.cwiseProduct(pass.weights[l])).sum();
            out.grads.weight[l] = (g - inner * layer.u * layer.v.transpose()) / sigma;
        } else {
            out.grads.weight[l] = std::move(g);
        }
        if (l == 0) break;

        MatrixX<Scalar> hadj = pass.weights[l].transpose() * adj;
        const MatrixX<Scalar>& a = pass.pre[l - 1];
        MatrixX<Scalar> d1 = a.unaryExpr([&](Scalar x) { return act.first(x); });
        MatrixX<Scalar> d2;
        if (tangents) d2 = a.unaryExpr([&](Scalar x) { return act.second(x); });
        if (!terms.dropout.empty()) {
            d1 = d1.cwiseProduct(terms.dropout[l - 1]);
            if (tangents) d2 = d2.cwiseProduct(terms.dropout[l - 1]);
        }
        MatrixX<Scalar> next = hadj.cwiseProduct(d1);
        if (tangents) {
            MatrixX<Scalar> thadj = pass.weights[l].transpose() * tadj;
            const MatrixX<Scalar>& ta = pass.tpre[l - 1];
            MatrixX<Scalar> mixed = MatrixX<Scalar>::Zero(a.rows(), batch);
            for (Index r = 0; r < probes; ++r)
                mixed += thadj.middleCols(r * batch, batch).cwiseProduct(ta.middleCols(r * batch, batch));
            next += mixed.cwiseProduct(d2);
            tadj = thadj.cwiseProduct(detail::replicate_cols(d1, probes));
        }
        adj = std::move(next);
    }
    return out;
}

/// Directional derivatives v^T grad_x f for each probe column, inference mode.
/// `directions` holds `probes` columns per sample (probe-major).
template <typename Scalar>
RowVectorX<Scalar> directional_derivatives(const MlpParameters<Scalar>& params, const MatrixX<Scalar>& inputs,
                                           const MatrixX<Scalar>& directions) {
    ObjectiveTerms<Scalar> terms;
    terms.link = LogitLink::identity;
    terms.jacobian_lambda = Scalar(1);
    terms.probes = directions;
    const auto pass = detail::training_forward(params, inputs, terms);
    return pass.tpre.back().row(0);
}

/// Rademacher (+-1) probe matrix, probe-major columns.
template <typename Scalar> MatrixX<Scalar> rademacher_probes(Index rows, Index batch, Index probes, Rng& rng) {
    std::bernoulli_distribution coin(0.5);
    return MatrixX<Scalar>::NullaryExpr(rows, batch * probes,
                                        [&] { return coin(rng) ? Scalar(1) : Scalar(-1); });
}

/// Hutchinson estimate of |grad_x f(x)|^2 for a scalar-output network: mean
/// over Rademacher probes of (v^T grad_x f)^2, unbiased since E[v v^T] = I.
template <typename Scalar>
Scalar hutchinson_frob_sq(const MlpParameters<Scalar>& params, const VectorX<Scalar>& input, int n_probes,
                          Rng& rng) {
    if (n_probes < 1) throw std::invalid_argument("hutchinson_frob_sq: need at least one probe");
    const MatrixX<Scalar> probes = rademacher_probes<Scalar>(input.size(), 1, n_probes, rng);
    const RowVectorX<Scalar> d = directional_derivatives(params, MatrixX<Scalar>(input), probes);
    return d.squaredNorm() / static_cast<Scalar>(n_probes);
}

/// Padded positions carry no gradient with respect to z, so their probe
/// entries are zeroed.
template <typename Scalar>
Scalar hutchinson_frob_sq(const MlpParameters<Scalar>& params, const MatrixX<Scalar>& z, const PadMask& pad,
                          int n_probes, Rng& rng) {
    if (n_probes < 1) throw std::invalid_argument("hutchinson_frob_sq: need at least one probe");
    const VectorX<Scalar> x = flatten(z, pad);
    MatrixX<Scalar> probes = rademacher_probes<Scalar>(x.size(), 1, n_probes, rng);
    for (Index i = 0; i < z.rows(); ++i)
        if (!pad.empty() && pad[static_cast<std::size_t>(i)]) probes.middleRows(i * z.cols(), z.cols()).setZero();
    const RowVectorX<Scalar> d = directional_derivatives(params, MatrixX<Scalar>(x), probes);
    return d.squaredNorm() / static_cast<Scalar>(n_probes);
}

}  // namespace mccop
