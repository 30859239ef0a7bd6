#pragma once

#include "mccop/gradcore/mlp.hpp"
#include "mccop/latentworld/dataset.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mccop {

struct SmoothingConfig {
    bool spectral_norm = false;
    double jacobian_lambda = 0.0;
    int jacobian_probes = 5;
    double fgsm_epsilon = 0.01;
    bool fgsm_augment = false;
    bool softplus = false;  // off: ReLU

    void validate() const;

    /// Everything off: ReLU, no spectral norm, no Jacobian penalty, no FGSM.
    static SmoothingConfig none();
    /// All four mechanisms at their defaults.
    static SmoothingConfig all();

    bool any() const { return spectral_norm || jacobian_lambda > 0.0 || fgsm_augment || softplus; }
};

struct TrainHyperparams {
    double learning_rate = 1e-3;
    double dropout = 0.3;
    int patience = 5;
    int max_epochs = 40;
    int batch_size = 64;
    std::vector<Index> hidden{512, 256};
    double softplus_beta = 1.0;
    int power_iters = 1;          // per training step, persistent iterates
    int freeze_power_iters = 50;  // once, on the restored best parameters

    void validate() const;
};

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;  // mean over batches of data loss + penalty
    double val_auroc = 0.0;
    double val_loss = 0.0;    // mean BCE; breaks ties in val_auroc when picking the best epoch
    std::size_t fgsm_added = 0;
    std::size_t fgsm_discarded = 0;
};

struct TrainingReport {
    std::vector<EpochRecord> epochs;
    int best_epoch = 0;
    double best_val_auroc = 0.0;
    double test_auroc = 0.0;
    double avg_grad_norm = 0.0;  // on the test split, frozen model
    std::size_t fgsm_added = 0;
    std::size_t fgsm_discarded = 0;
};

/// Frozen classifier over L x D embeddings. Inference never applies dropout.
struct TrainedPredictor {
    MlpParameters<double> params;
    Index rows = 0;
    Index cols = 0;
    PadMask pad;
    SmoothingConfig smoothing;
    TrainHyperparams hp;
    std::uint64_t seed = 0;
    TrainingReport report;
};

/// Builds an untrained predictor shell around given parameters (tests, tools).
TrainedPredictor wrap_predictor(MlpParameters<double> params, Index rows, Index cols, PadMask pad = {});

/// BCE on logits plus lambda_J * Hutchinson penalty, Adam, dropout after each
/// hidden activation, optional FGSM augmentation, early stopping on
/// validation AUROC. Deterministic given `seed`.
TrainedPredictor train_predictor(const LabeledDataset& data, const SmoothingConfig& smoothing,
                                 const TrainHyperparams& hp, std::uint64_t seed);

double predict_logit(const TrainedPredictor& p, const Embedding& z);

/// logistic(target_sign * logit), target_sign in {+1, -1}.
double predict_proba(const TrainedPredictor& p, const Embedding& z, int target_sign);

/// Logits for many embeddings in one batched pass.
std::vector<double> predict_logits(const TrainedPredictor& p, std::span<const Embedding> zs);

/// One signed step of size epsilon that lowers BCE(f(z), target_label):
/// z - epsilon * sign(grad_z BCE). Padded rows are never moved.
Embedding fgsm_perturb(const TrainedPredictor& p, const Embedding& z, double epsilon, int target_label);

/// Mann-Whitney AUROC, ties count 1/2. Throws DataError unless both labels occur.
double auroc(std::span<const double> scores, std::span<const int> labels);

/// Mean over embeddings of |grad_z f(z)|_2 for the raw logit.
double avg_input_gradient_norm(const TrainedPredictor& p, std::span<const Embedding> zs);

/// Effective (normalized) weight of layer l, for operator-norm checks.
MatrixX<double> effective_layer_weight(const TrainedPredictor& p, std::size_t layer);

// Persistence: <prefix>.bin (gradcore checkpoint) and <prefix>.json (layout,
// smoothing, hyperparameters, training report).
void save_predictor(const TrainedPredictor& p, const std::string& prefix);
TrainedPredictor load_predictor(const std::string& prefix);

}  // namespace mccop
