#include "mccop/predictor/predictor.hpp"

#include "mccop/gradcore/adam.hpp"
#include "mccop/gradcore/checkpoint.hpp"
#include "mccop/latentworld/world_json.hpp"
#include "mccop/rng.hpp"
#include "mccop/textio.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>

namespace mccop {

void SmoothingConfig::validate() const {
    if (jacobian_lambda < 0.0) throw ConfigError("smoothing: jacobian_lambda must be >= 0");
    if (fgsm_epsilon < 0.0) throw ConfigError("smoothing: fgsm_epsilon must be >= 0");
    if (jacobian_probes < 1) throw ConfigError("smoothing: jacobian_probes must be >= 1");
}

SmoothingConfig SmoothingConfig::none() { return {}; }

SmoothingConfig SmoothingConfig::all() {
    SmoothingConfig s;
    s.spectral_norm = true;
    s.jacobian_lambda = 1e-3;
    s.jacobian_probes = 5;
    s.fgsm_epsilon = 0.01;
    s.fgsm_augment = true;
    s.softplus = true;
    return s;
}

void TrainHyperparams::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("train: learning_rate must be positive");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("train: dropout must be in [0, 1)");
    if (patience < 1) throw ConfigError("train: patience must be >= 1");
    if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
    if (!(softplus_beta > 0.0)) throw ConfigError("train: softplus_beta must be positive");
    if (power_iters < 1 || freeze_power_iters < 1) throw ConfigError("train: power iterations must be >= 1");
    for (Index h : hidden)
        if (h < 1) throw ConfigError("train: hidden sizes must be positive");
}

TrainedPredictor wrap_predictor(MlpParameters<double> params, Index rows, Index cols, PadMask pad) {
    params.validate();
    if (params.input_size() != rows * cols) throw ConfigError("predictor: input layer does not match L x D");
    TrainedPredictor p;
    p.params = std::move(params);
    p.rows = rows;
    p.cols = cols;
    p.pad = std::move(pad);
    p.smoothing.softplus = p.params.activation == Activation::softplus;
    p.smoothing.spectral_norm = p.params.spectral;
    return p;
}

namespace {

void check_shape(const TrainedPredictor& p, const Embedding& z) {
    if (z.rows() != p.rows || z.cols() != p.cols) throw ConfigError("predictor: embedding shape mismatch");
}

MatrixX<double> stack(const TrainedPredictor& p, std::span<const Embedding> zs) {
    MatrixX<double> X(p.rows * p.cols, static_cast<Index>(zs.size()));
    for (std::size_t i = 0; i < zs.size(); ++i) {
        check_shape(p, zs[i]);
        X.col(static_cast<Index>(i)) = flatten(zs[i], p.pad);
    }
    return X;
}

}  // namespace

double predict_logit(const TrainedPredictor& p, const Embedding& z) {
    check_shape(p, z);
    return mlp_forward(p.params, z, p.pad);
}

double predict_proba(const TrainedPredictor& p, const Embedding& z, int target_sign) {
    return logistic(static_cast<double>(target_sign) * predict_logit(p, z));
}

std::vector<double> predict_logits(const TrainedPredictor& p, std::span<const Embedding> zs) {
    if (zs.empty()) return {};
    const RowVectorX<double> f = forward_batch(p.params, stack(p, zs));
    return {f.data(), f.data() + f.size()};
}

Embedding fgsm_perturb(const TrainedPredictor& p, const Embedding& z, double epsilon, int target_label) {
    if (epsilon < 0.0) throw ConfigError("fgsm: epsilon must be >= 0");
    check_shape(p, z);
    if (epsilon == 0.0) return z;
    struct Bce {
        double y;
        double value(double f, const Embedding&) const { return log1p_exp(f) - y * f; }
        double dlogit(double f, const Embedding&) const { return logistic(f) - y; }
        Embedding dz(double, const Embedding& zz) const { return Embedding::Zero(zz.rows(), zz.cols()); }
    };
    const auto g = grad_input(p.params, z, p.pad, Bce{static_cast<double>(target_label)});
    const Embedding step = g.gradient.unaryExpr([](double x) { return static_cast<double>((x > 0) - (x < 0)); });
    return z - epsilon * step;
}

double auroc(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DataError("auroc: scores and labels differ in length");
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
    // average ranks over tie groups, then U = sum of positive ranks - n1(n1+1)/2
    double rank_sum = 0.0;
    double n1 = 0.0, n0 = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
        for (std::size_t k = i; k < j; ++k) {
            const int y = labels[order[k]];
            if (y == 1) {
                rank_sum += avg_rank;
                n1 += 1.0;
            } else if (y == 0) {
                n0 += 1.0;
            } else {
                throw DataError("auroc: labels must be 0 or 1");
            }
        }
        i = j;
    }
    if (n0 == 0.0 || n1 == 0.0) throw DataError("auroc: need both labels");
    return (rank_sum - n1 * (n1 + 1.0) / 2.0) / (n0 * n1);
}

double avg_input_gradient_norm(const TrainedPredictor& p, std::span<const Embedding> zs) {
    if (zs.empty()) throw DataError("avg_input_gradient_norm: empty set");
    const auto g = input_gradients(p.params, stack(p, zs));
    return g.gradients.colwise().norm().mean();
}

MatrixX<double> effective_layer_weight(const TrainedPredictor& p, std::size_t layer) {
    return effective_weight(p.params.layers.at(layer), p.params.spectral);
}

namespace {

// Mean BCE on logits over a split; tie-breaker once validation AUROC saturates.
double split_bce(const TrainedPredictor& p, const std::vector<const DatasetItem*>& items) {
    std::vector<Embedding> zs;
    for (const auto* it : items) zs.push_back(it->embedding);
    const auto f = predict_logits(p, zs);
    double sum = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) sum += log1p_exp(f[i]) - items[i]->label * f[i];
    return sum / static_cast<double>(std::max<std::size_t>(f.size(), 1));
}

double split_auroc(const TrainedPredictor& p, const std::vector<const DatasetItem*>& items) {
    std::vector<Embedding> zs;
    std::vector<int> labels;
    for (const auto* it : items) {
        zs.push_back(it->embedding);
        labels.push_back(it->label);
    }
    const auto f = predict_logits(p, zs);
    return auroc(f, labels);
}

std::vector<MatrixX<double>> dropout_masks(const MlpParameters<double>& params, Index cols, double rate, Rng& rng) {
    std::vector<MatrixX<double>> masks;
    if (rate <= 0.0) return masks;
    std::bernoulli_distribution keep(1.0 - rate);
    const double scale = 1.0 / (1.0 - rate);
    for (std::size_t l = 0; l + 1 < params.layers.size(); ++l)
        masks.push_back(MatrixX<double>::NullaryExpr(params.layers[l].outputs(), cols,
                                                     [&] { return keep(rng) ? scale : 0.0; }));
    return masks;
}

}  // namespace

TrainedPredictor train_predictor(const LabeledDataset& data, const SmoothingConfig& smoothing,
                                 const TrainHyperparams& hp, std::uint64_t seed) {
    smoothing.validate();
    hp.validate();
    const auto train = data.split(Split::train);
    const auto val = data.split(Split::val);
    const auto test = data.split(Split::test);
    for (auto s : {Split::train, Split::val})
        if (data.count(s, 0) == 0 || data.count(s, 1) == 0)
            throw DataError(std::string("train: ") + split_name(s) + " split has a single class");
    if (train.empty()) throw DataError("train: empty training split");

    const Index rows = static_cast<Index>(data.world.length);
    const Index cols = data.world.dim;
    const auto codebook = world_codebook(data.world);

    auto init_rng = substream(seed, {tag("init")});
    TrainedPredictor p;
    p.params = make_mlp<double>(rows * cols, hp.hidden,
                                smoothing.softplus ? Activation::softplus : Activation::relu, hp.softplus_beta,
                                smoothing.spectral_norm, init_rng);
    p.rows = rows;
    p.cols = cols;
    p.smoothing = smoothing;
    p.hp = hp;
    p.seed = seed;

    AdamState<double> adam;
    adam.hp.learning_rate = hp.learning_rate;

    auto best = p.params;
    double best_auc = -1.0;
    double best_loss = std::numeric_limits<double>::infinity();
    int since_best = 0;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < hp.max_epochs; ++epoch) {
        auto shuffle_rng = substream(seed, {tag("shuffle"), static_cast<std::uint64_t>(epoch)});
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        EpochRecord rec;
        rec.epoch = epoch;
        double loss_sum = 0.0;
        std::size_t batches = 0;

        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(hp.batch_size)) {
            const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(hp.batch_size));
            auto batch_rng = substream(seed, {tag("batch"), static_cast<std::uint64_t>(epoch), start});
            if (p.params.spectral) refresh_spectral_state(p.params, hp.power_iters);

            std::vector<Embedding> zs;
            std::vector<double> ys;
            for (std::size_t k = start; k < stop; ++k) {
                zs.push_back(train[order[k]]->embedding);
                ys.push_back(train[order[k]]->label);
            }
            if (smoothing.fgsm_augment && smoothing.fgsm_epsilon > 0.0) {
                // batched form of fgsm_perturb toward the opposite class
                const std::size_t clean = zs.size();
                const auto g = input_gradients(p.params, stack(p, zs));
                for (std::size_t k = 0; k < clean; ++k) {
                    const int label = ys[k] > 0.5 ? 1 : 0;
                    const double dlogit = logistic(g.logits(static_cast<Index>(k))) - (1 - label);
                    Embedding step = unflatten<double>(g.gradients.col(static_cast<Index>(k)), rows, cols) * dlogit;
                    Embedding adv =
                        zs[k] - smoothing.fgsm_epsilon *
                                    step.unaryExpr([](double x) { return static_cast<double>((x > 0) - (x < 0)); });
                    if (decode(adv, codebook) == decode(zs[k], codebook)) {
                        zs.push_back(std::move(adv));
                        ys.push_back(label);
                        ++rec.fgsm_added;
                    } else {
                        ++rec.fgsm_discarded;
                    }
                }
            }

            const MatrixX<double> X = stack(p, zs);
            ObjectiveTerms<double> terms;
            terms.link = LogitLink::bce;
            terms.targets = Eigen::Map<const RowVectorX<double>>(ys.data(), static_cast<Index>(ys.size()));
            if (smoothing.jacobian_lambda > 0.0) {
                terms.jacobian_lambda = smoothing.jacobian_lambda;
                terms.probes = rademacher_probes<double>(X.rows(), X.cols(), smoothing.jacobian_probes, batch_rng);
            }
            terms.dropout = dropout_masks(p.params, X.cols(), hp.dropout, batch_rng);

            const auto res = grad_params(p.params, X, terms);
            if (!std::isfinite(res.loss))
                throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch));
            adam_step(adam, p.params, res.grads);
            loss_sum += res.loss;
            ++batches;
        }
        rec.train_loss = loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1));
        if (!std::isfinite(rec.train_loss))
            throw TrainingError("train: non-finite loss at epoch " + std::to_string(epoch));
        rec.val_auroc = split_auroc(p, val);
        rec.val_loss = split_bce(p, val);
        p.report.fgsm_added += rec.fgsm_added;
        p.report.fgsm_discarded += rec.fgsm_discarded;
        p.report.epochs.push_back(rec);

        if (rec.val_auroc > best_auc || (rec.val_auroc == best_auc && rec.val_loss < best_loss)) {
            best_auc = rec.val_auroc;
            best_loss = rec.val_loss;
            best = p.params;
            p.report.best_epoch = epoch;
            since_best = 0;
        } else if (++since_best >= hp.patience) {
            break;
        }
    }

    p.params = std::move(best);
    if (p.params.spectral) refresh_spectral_state(p.params, hp.freeze_power_iters);
    p.report.best_val_auroc = best_auc;

    std::vector<Embedding> test_z;
    for (const auto* it : test) test_z.push_back(it->embedding);
    p.report.test_auroc = split_auroc(p, test);
    p.report.avg_grad_norm = avg_input_gradient_norm(p, test_z);
    return p;
}

namespace {

nlohmann::json smoothing_json(const SmoothingConfig& s) {
    return {{"spectral_norm", s.spectral_norm}, {"jacobian_lambda", s.jacobian_lambda},
            {"jacobian_probes", s.jacobian_probes}, {"fgsm_epsilon", s.fgsm_epsilon},
            {"fgsm_augment", s.fgsm_augment}, {"softplus", s.softplus}};
}

nlohmann::json hp_json(const TrainHyperparams& h) {
    return {{"learning_rate", h.learning_rate}, {"dropout", h.dropout}, {"patience", h.patience},
            {"max_epochs", h.max_epochs}, {"batch_size", h.batch_size}, {"hidden", h.hidden},
            {"softplus_beta", h.softplus_beta}, {"power_iters", h.power_iters},
            {"freeze_power_iters", h.freeze_power_iters}};
}

}  // namespace

void save_predictor(const TrainedPredictor& p, const std::string& prefix) {
    save_checkpoint(prefix + ".bin", p.params);
    nlohmann::json j;
    j["format"] = "mccop-predictor";
    j["version"] = 1;
    j["layout"] = {{"rows", p.rows}, {"cols", p.cols}, {"pad", p.pad}};
    j["smoothing"] = smoothing_json(p.smoothing);
    j["hyperparams"] = hp_json(p.hp);
    j["seed"] = p.seed;
    auto& r = j["report"];
    r["best_epoch"] = p.report.best_epoch;
    r["best_val_auroc"] = p.report.best_val_auroc;
    r["test_auroc"] = p.report.test_auroc;
    r["avg_grad_norm"] = p.report.avg_grad_norm;
    r["fgsm_added"] = p.report.fgsm_added;
    r["fgsm_discarded"] = p.report.fgsm_discarded;
    r["epochs"] = nlohmann::json::array();
    for (const auto& e : p.report.epochs)
        r["epochs"].push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_auroc", e.val_auroc},
                               {"val_loss", e.val_loss},                                {"fgsm_added", e.fgsm_added}, {"fgsm_discarded", e.fgsm_discarded}});
    write_text(prefix + ".json", j.dump(2) + "\n");
}

TrainedPredictor load_predictor(const std::string& prefix) {
    std::ifstream in(prefix + ".json");
    if (!in) throw DataError("no predictor sidecar at " + prefix + ".json");
    TrainedPredictor p;
    try {
        nlohmann::json j;
        in >> j;
        if (j.at("format") != "mccop-predictor" || j.at("version") != 1)
            throw DataError("unsupported predictor sidecar");
        p = wrap_predictor(load_checkpoint(prefix + ".bin"), j.at("layout").at("rows").get<Index>(),
                           j.at("layout").at("cols").get<Index>(),
                           j.at("layout").at("pad").get<std::vector<bool>>());
        const auto& s = j.at("smoothing");
        p.smoothing.spectral_norm = s.at("spectral_norm");
        p.smoothing.jacobian_lambda = s.at("jacobian_lambda");
        p.smoothing.jacobian_probes = s.at("jacobian_probes");
        p.smoothing.fgsm_epsilon = s.at("fgsm_epsilon");
        p.smoothing.fgsm_augment = s.at("fgsm_augment");
        p.smoothing.softplus = s.at("softplus");
        const auto& h = j.at("hyperparams");
        p.hp.learning_rate = h.at("learning_rate");
        p.hp.dropout = h.at("dropout");
        p.hp.patience = h.at("patience");
        p.hp.max_epochs = h.at("max_epochs");
        p.hp.batch_size = h.at("batch_size");
        p.hp.hidden = h.at("hidden").get<std::vector<Index>>();
        p.hp.softplus_beta = h.at("softplus_beta");
        p.hp.power_iters = h.at("power_iters");
        p.hp.freeze_power_iters = h.at("freeze_power_iters");
        p.seed = j.at("seed");
        const auto& r = j.at("report");
        p.report.best_epoch = r.at("best_epoch");
        p.report.best_val_auroc = r.at("best_val_auroc");
        p.report.test_auroc = r.at("test_auroc");
        p.report.avg_grad_norm = r.at("avg_grad_norm");
        p.report.fgsm_added = r.at("fgsm_added");
        p.report.fgsm_discarded = r.at("fgsm_discarded");
        for (const auto& e : r.at("epochs"))
            p.report.epochs.push_back({e.at("epoch"), e.at("train_loss"), e.at("val_auroc"), e.at("val_loss"), e.at("fgsm_added"),
                                       e.at("fgsm_discarded")});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("bad predictor sidecar: ") + e.what());
    }
    if (p.smoothing.softplus != (p.params.activation == Activation::softplus) ||
        p.smoothing.spectral_norm != p.params.spectral)
        throw DataError("predictor sidecar disagrees with checkpoint header");
    return p;
}

}  // namespace mccop
